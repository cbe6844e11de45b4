"""Command-line surface.

Subcommands
-----------
evaluate          : evaluate one or more bounds at explicit parameters.
optimize          : optimize one or more bounds at a single channel point.
sweep             : optimize bounds over a cooperation-SNR grid, write CSV
                    (optionally render the curves to a PNG next to it).
compare-fixtures  : diff a sweep CSV against the shipped reference curves.

Configuration files are flat ``key = value`` text; '#' starts a comment and
repeating a key appends to a list (``bound = nc`` on several lines equals
``bounds = nc,nnc``).  Exit codes: 0 ok, 2 config/parse problem, 3 infeasible
parameters, 4 file I/O failure, 5 reference mismatch, 6 missing curve.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    evaluate_2rc,
    evaluate_3fc,
    evaluate_3pc,
    evaluate_cutset,
    evaluate_nnc,
    no_coop_rate,
)
from .channel import from_db
from .errors import (
    ConfigurationError,
    FixtureError,
    InfeasibleParamsError,
    ParseError,
)
from .fixtures import compare_csv, reference_curves_path
from .gaussian import PARAM_NAMES, StrategyParams, SubStrategy
from .optimize import OptimizerConfig
from .sweep import (
    BOUND_ORDER,
    SweepSpec,
    _evaluate_bound,
    csv_header,
    csv_record,
    iter_sweep,
)
from .sweep import read_csv as read_sweep_csv


# ---------------------------------------------------------------------------
# flat key=value configuration files


def parse_config(path) -> dict[str, list[str]]:
    """Parse a flat key=value file into ``{key: [values in file order]}``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not eq or not key or not value:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        out.setdefault(key, []).append(value)
    return out


def _floats(cfg: dict, key: str) -> list[float]:
    parts = [p for v in cfg[key] for p in v.replace(",", " ").split()]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ParseError(f"config key {key!r}: expected numbers, got {cfg[key]!r}") from None


def _float(cfg: dict, key: str) -> float:
    vals = _floats(cfg, key)
    if len(vals) != 1:
        raise ParseError(f"config key {key!r}: expected a single number")
    return vals[0]


def _int(cfg: dict, key: str) -> int:
    val = _float(cfg, key)
    if val != int(val):
        raise ParseError(f"config key {key!r}: expected an integer")
    return int(val)


def _bounds_list(values: list[str]) -> tuple[str, ...]:
    names = [p for v in values for p in v.replace(",", " ").split()]
    unknown = [n for n in names if n not in BOUND_ORDER]
    if unknown:
        raise ParseError(
            f"unknown bound(s) {', '.join(unknown)}; valid: {', '.join(BOUND_ORDER)}"
        )
    return tuple(names)


def _channel_from_config(cfg: dict):
    if "main_db" not in cfg:
        raise ParseError("config key 'main_db' is required")
    main_db = _floats(cfg, "main_db")
    if len(main_db) != 3:
        raise ParseError("config key 'main_db': expected 3 values")
    if "coop_db" in cfg:
        coop = _floats(cfg, "coop_db")
        if len(coop) == 1:
            return from_db(main_db, coop[0])
        if len(coop) == 9:
            return from_db(main_db, np.array(coop).reshape(3, 3))
        raise ParseError("config key 'coop_db': expected 1 value or a 3x3 matrix (9 values)")
    return from_db(main_db, -np.inf)  # no cooperation links


def _optimizer_from_config(cfg: dict, args) -> OptimizerConfig:
    base = OptimizerConfig()
    starts = args.starts if args.starts is not None else (
        _int(cfg, "starts") if "starts" in cfg else base.starts)
    tol = args.tol if args.tol is not None else (
        _float(cfg, "tol") if "tol" in cfg else base.tol)
    seed = args.seed if args.seed is not None else (
        _int(cfg, "seed") if "seed" in cfg else base.seed)
    max_iters = _int(cfg, "max_iters") if "max_iters" in cfg else base.max_iters
    return OptimizerConfig(starts=starts, max_iters=max_iters, tol=tol, seed=seed)


def _requested_bounds(cfg: dict, args) -> tuple[str, ...]:
    if getattr(args, "bounds", None):
        return _bounds_list([args.bounds])
    values = cfg.get("bounds", []) + cfg.get("bound", [])
    if not values:
        raise ParseError("no bounds requested (config key 'bound'/'bounds' or --bounds)")
    return _bounds_list(values)


# ---------------------------------------------------------------------------
# result rendering


def _format_params(params) -> list[str]:
    if params is None:
        return []
    if isinstance(params, StrategyParams):
        return [f"{name} = {getattr(params, name):g}" for name in PARAM_NAMES]
    arr = np.asarray(params)
    if arr.shape == (3,):
        return ["deltas = " + ", ".join(f"{v:g}" for v in arr)]
    if arr.shape == (4, 4):
        lines = ["input_covariance ="]
        for row in arr:
            lines.append("  " + "  ".join(f"{v.real:+.4f}{v.imag:+.4f}j" for v in row))
        return lines
    return [f"params = {params!r}"]


def _format_result(name: str, result) -> str:
    lines = [f"bound = {name}", f"value = {result.value:.4f}",
             f"active_term = {result.active_term}"]
    if result.strategy is not None:
        lines.append("strategy = " + ",".join(str(r) for r in result.strategy.as_tuple()))
    lines.extend(_format_params(result.params))
    return "\n".join(lines)


def _emit(text: str, out_path) -> None:
    print(text)
    if out_path:
        Path(out_path).write_text(text + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _strategy_params_from_config(cfg: dict) -> StrategyParams:
    values = {}
    for name in PARAM_NAMES:
        if name in cfg:
            values[name] = _float(cfg, name)
    return StrategyParams(**values)


def cmd_evaluate(args) -> int:
    cfg = parse_config(args.config)
    ch = _channel_from_config(cfg)
    names = _requested_bounds(cfg, args)
    blocks = []
    for name in names:
        if name == "nc":
            result = no_coop_rate(ch)
        elif name == "nnc":
            deltas = _floats(cfg, "deltas") if "deltas" in cfg else [np.inf] * 3
            if len(deltas) != 3:
                raise ParseError("config key 'deltas': expected 3 values")
            result = evaluate_nnc(ch, deltas)
        elif name == "cutset":
            if "q" in cfg:
                entries = _floats(cfg, "q")
                if len(entries) != 16:
                    raise ParseError("config key 'q': expected 16 values (4x4, row-major)")
                q = np.array(entries).reshape(4, 4)
            else:
                q = np.eye(4)
            result = evaluate_cutset(ch, q)
        else:
            params = _strategy_params_from_config(cfg)
            if name == "2rc":
                pair = [int(v) for v in _floats(cfg, "pair")] if "pair" in cfg else [1, 2]
                if len(pair) != 2:
                    raise ParseError("config key 'pair': expected 2 receiver labels")
                result = evaluate_2rc(ch, (pair[0], pair[1]), params)
            else:
                order = (
                    [int(v) for v in _floats(cfg, "strategy")]
                    if "strategy" in cfg
                    else [1, 2, 3]
                )
                if len(order) != 3:
                    raise ParseError("config key 'strategy': expected 3 receiver labels")
                s = SubStrategy(*order)
                evaluate = evaluate_3fc if name == "3fc" else evaluate_3pc
                result = evaluate(ch, s, params)
        blocks.append(_format_result(name, result))
    _emit("\n\n".join(blocks), args.out)
    return 0


def cmd_optimize(args) -> int:
    cfg = parse_config(args.config)
    ch = _channel_from_config(cfg)
    names = _requested_bounds(cfg, args)
    opt = _optimizer_from_config(cfg, args)
    blocks = []
    for name in names:
        result = _evaluate_bound(name, ch, opt, None)
        blocks.append(_format_result(name, result))
    _emit("\n\n".join(blocks), args.out)
    return 0


def _sweep_spec_from_config(cfg: dict, args) -> SweepSpec:
    if "coop_db_range" not in cfg:
        raise ParseError("config key 'coop_db_range' is required (start,stop,step)")
    rng = _floats(cfg, "coop_db_range")
    if len(rng) != 3:
        raise ParseError("config key 'coop_db_range': expected start,stop,step")
    if "main_db" not in cfg:
        raise ParseError("config key 'main_db' is required")
    main_db = _floats(cfg, "main_db")
    if len(main_db) != 3:
        raise ParseError("config key 'main_db': expected 3 values")
    return SweepSpec(
        main_db=main_db,
        coop_db_range=(rng[0], rng[1], rng[2]),
        bounds=_requested_bounds(cfg, args),
        optimizer=_optimizer_from_config(cfg, args),
    )


def cmd_sweep(args) -> int:
    spec = _sweep_spec_from_config(parse_config(args.config), args)
    if not args.out:
        raise ParseError("sweep requires --out CSV_PATH")
    out_path = Path(args.out)
    grid = spec.grid()

    def progress(i, total, coop_db):
        print(f"[{i + 1}/{total}] coop_db = {coop_db:g}", file=sys.stderr)

    # Stream rows to disk as they finish, so a long sweep fails fast on an
    # unwritable path and survives inspection mid-run.
    with out_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(spec.bounds))
        for row in iter_sweep(spec, progress):
            writer.writerow(csv_record(row, spec.bounds))
            fh.flush()

    print(f"wrote {len(grid)} rows to {out_path}")
    if args.plot is not None:
        png_path = Path(args.plot) if args.plot else out_path.with_suffix(".png")
        render_curves(out_path, png_path)
        print(f"rendered {png_path}")
    return 0


def render_curves(csv_path, png_path) -> None:
    """Render every bound column of a sweep CSV into one rate-vs-coop figure."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols, rows = read_sweep_csv(csv_path)
    x = [r["coop_db"] for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for col in cols:
        ax.plot(x, [r[col] for r in rows], label=col)
    ax.set_xlabel("cooperation SNR [dB]")
    ax.set_ylabel("rate [bit/s/Hz]")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def cmd_compare_fixtures(args) -> int:
    tolerance = args.tol if args.tol is not None else 0.05
    fixture = args.fixture if args.fixture else reference_curves_path()
    bounds = _bounds_list([args.bounds]) if args.bounds else None
    reports = compare_csv(args.csv, args.figure, tolerance, fixture_path=fixture, bounds=bounds)
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        print(
            f"{rep.figure}/{rep.curve:<10s} column {rep.column:<7s} "
            f"{rep.points:3d} points  max dev {rep.max_abs_dev:.6f} "
            f"@ {rep.worst_coop_db:g} dB  {status}"
        )
    ok = all(r.passed for r in reports)
    print(f"overall: {'PASS' if ok else 'FAIL'} (tolerance {tolerance:g})")
    return 0 if ok else 5


# ---------------------------------------------------------------------------
# parser / entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcbounds",
        description="Rate bounds for the three-receiver Gaussian multicast "
        "channel with receiver cooperation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", help="also write the report/CSV to this path")
        p.add_argument("--seed", type=int, help="optimizer start-sequence seed")
        p.add_argument("--starts", type=int, help="optimizer start count")
        p.add_argument("--tol", type=float, help="optimizer tolerance / fixture tolerance")
        p.add_argument("--bounds", help="comma-separated bound subset "
                       f"({', '.join(BOUND_ORDER)})")

    p_eval = sub.add_parser("evaluate", help="evaluate bounds at explicit parameters")
    add_common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_opt = sub.add_parser("optimize", help="optimize bounds at one channel point")
    add_common(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_sweep = sub.add_parser("sweep", help="optimize bounds over a coop-SNR grid")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--plot",
        nargs="?",
        const="",
        default=None,
        metavar="PNG",
        help="render the curves to PNG (default: CSV path with .png suffix)",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser(
        "compare-fixtures", help="diff a sweep CSV against the reference curves"
    )
    p_cmp.add_argument("csv", help="sweep CSV to check")
    p_cmp.add_argument("--figure", required=True, help="fixture figure id (e.g. fig3b)")
    p_cmp.add_argument("--fixture", help="fixture table (default: shipped reference curves)")
    p_cmp.add_argument("--tol", type=float, help="tolerance in bits (default 0.05)")
    p_cmp.add_argument("--bounds", help="restrict the comparison to these curves "
                       f"({', '.join(BOUND_ORDER)})")
    p_cmp.set_defaults(func=cmd_compare_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FixtureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6
    except (ParseError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleParamsError as exc:
        print(f"error: infeasible parameters: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
