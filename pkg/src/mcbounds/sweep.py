"""Cooperation-SNR sweeps: optimize the requested bounds over a dB grid.

A sweep fixes the direct-link SNRs and walks the cooperation SNR over a
regular dB grid, optimizing every requested bound at each point.  Results
chain warm starts point-to-point (each bound's previous optimum seeds the next
grid point), which both speeds the sweep up and keeps the curves from jumping
between local optima of the nonsmooth objectives.  Given the same spec the
sweep is fully deterministic, so the serialized CSV is byte-identical across
reruns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .bounds import BoundResult, no_coop_rate
from .channel import from_db
from .errors import ConfigurationError
from .optimize import (
    OptimizerConfig,
    optimize_2rc,
    optimize_3fc,
    optimize_3pc,
    optimize_cutset,
    optimize_nnc,
)

#: Canonical column order for requested bounds.
BOUND_ORDER = ("nc", "cutset", "nnc", "2rc", "3pc", "3fc")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: direct-link SNRs, cooperation grid, bounds, optimizer knobs.

    main_db       : direct-link SNRs in dB, length 3.
    coop_db_range : (start, stop, step) of the cooperation-SNR grid in dB;
                    step > 0, start <= stop, stop included when it falls on
                    the grid.
    bounds        : nonempty subset of ``BOUND_ORDER`` (stored deduplicated in
                    canonical order).
    optimizer     : shared optimizer configuration for all bounds.
    """

    main_db: np.ndarray
    coop_db_range: tuple[float, float, float]
    bounds: tuple[str, ...] = BOUND_ORDER
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        main = np.asarray(self.main_db, dtype=float).reshape(-1)
        if main.shape != (3,) or np.any(~np.isfinite(main)):
            raise ConfigurationError("main_db must contain exactly 3 finite values")
        main = main.copy()
        main.setflags(write=False)
        object.__setattr__(self, "main_db", main)

        start, stop, step = (float(v) for v in self.coop_db_range)
        if not (np.isfinite(start) and np.isfinite(stop) and np.isfinite(step)):
            raise ConfigurationError("coop_db_range must be finite")
        if step <= 0.0:
            raise ConfigurationError("coop_db_range step must be > 0")
        if start > stop:
            raise ConfigurationError("coop_db_range start must be <= stop")
        object.__setattr__(self, "coop_db_range", (start, stop, step))

        requested = tuple(self.bounds)
        unknown = [b for b in requested if b not in BOUND_ORDER]
        if unknown:
            raise ConfigurationError(f"unknown bound(s): {', '.join(unknown)}")
        kept = tuple(b for b in BOUND_ORDER if b in requested)
        if not kept:
            raise ConfigurationError("bounds must be nonempty")
        object.__setattr__(self, "bounds", kept)

    def grid(self) -> np.ndarray:
        """The cooperation-SNR grid in dB (endpoint included when on-grid)."""
        start, stop, step = self.coop_db_range
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)


@dataclass(frozen=True)
class SweepRow:
    """Optimized values and binding terms of one grid point."""

    coop_db: float
    values: dict[str, float]
    active_terms: dict[str, str]


def _evaluate_bound(
    name: str, ch, cfg: OptimizerConfig, warm: Optional[BoundResult]
) -> BoundResult:
    if name == "nc":
        return no_coop_rate(ch)
    if name == "cutset":
        return optimize_cutset(ch, cfg, warm=warm)
    if name == "nnc":
        return optimize_nnc(ch, cfg, warm=warm)
    if name == "2rc":
        return optimize_2rc(ch, cfg, warm=warm)
    if name == "3pc":
        return optimize_3pc(ch, cfg, warm=warm)
    if name == "3fc":
        return optimize_3fc(ch, cfg, warm=warm)
    raise ConfigurationError(f"unknown bound: {name}")


def iter_sweep(
    spec: SweepSpec,
    progress: Optional[Callable[[int, int, float], None]] = None,
):
    """Yield one optimized :class:`SweepRow` per grid point, warm-chained.

    ``progress(index, total, coop_db)`` is called before each grid point.
    Rows arrive in grid order regardless of evaluation scheduling.
    """
    grid = spec.grid()
    warm: dict[str, BoundResult] = {}
    for i, coop_db in enumerate(grid):
        if progress is not None:
            progress(i, len(grid), float(coop_db))
        ch = from_db(spec.main_db, float(coop_db))
        values: dict[str, float] = {}
        terms: dict[str, str] = {}
        for name in spec.bounds:
            result = _evaluate_bound(name, ch, spec.optimizer, warm.get(name))
            warm[name] = result
            values[name] = result.value
            terms[name] = result.active_term
        yield SweepRow(coop_db=float(coop_db), values=values, active_terms=terms)


def run_sweep(
    spec: SweepSpec,
    progress: Optional[Callable[[int, int, float], None]] = None,
) -> list[SweepRow]:
    """Optimize every requested bound at every grid point; see iter_sweep."""
    return list(iter_sweep(spec, progress))


def csv_header(bounds: tuple[str, ...]) -> list[str]:
    """Column names of a sweep CSV: values first, then the binding terms."""
    return ["coop_db"] + list(bounds) + [f"{b}_term" for b in bounds]


def csv_record(row: SweepRow, bounds: tuple[str, ...]) -> list[str]:
    """One serialized CSV record; rates fixed to 6 decimal places so identical
    runs diff byte-for-byte."""
    return (
        [f"{row.coop_db:g}"]
        + [f"{row.values[b]:.6f}" for b in bounds]
        + [row.active_terms[b] for b in bounds]
    )


def write_csv(rows: list[SweepRow], bounds: tuple[str, ...], path) -> None:
    """Serialize sweep rows to ``path`` (see csv_header / csv_record)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(bounds))
        for row in rows:
            writer.writerow(csv_record(row, bounds))


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Read a sweep CSV back: (bound column names, parsed rows).

    Each parsed row maps ``coop_db`` and every bound column to floats and
    keeps the ``*_term`` columns as strings.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "coop_db" not in fields:
            raise ConfigurationError(f"{path}: not a sweep CSV (no coop_db column)")
        bound_cols = [c for c in fields if c != "coop_db" and not c.endswith("_term")]
        rows = []
        for rec in reader:
            parsed: dict = {"coop_db": float(rec["coop_db"])}
            for col in bound_cols:
                parsed[col] = float(rec[col])
            for col in fields:
                if col.endswith("_term"):
                    parsed[col] = rec[col]
            rows.append(parsed)
    return bound_cols, rows
