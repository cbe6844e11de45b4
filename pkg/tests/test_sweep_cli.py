"""Sweeps, CSV serialization, reference-curve fixtures and the command line."""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from mcbounds import (
    BOUND_ORDER,
    ConfigurationError,
    FixtureError,
    OptimizerConfig,
    SweepSpec,
    compare_csv,
    load_reference_curves,
    reference_curves_path,
    run_sweep,
    write_csv,
)
from mcbounds.sweep import csv_header, csv_record, iter_sweep, read_csv
from mcbounds.cli import main, parse_config

SMALL = OptimizerConfig(starts=6, max_iters=300, tol=1e-4, seed=0)


# ---------------------------------------------------------------------------
# sweep specification


def test_sweep_spec_validation():
    with pytest.raises(ConfigurationError):
        SweepSpec(main_db=[10, 7], coop_db_range=(0, 10, 1))
    with pytest.raises(ConfigurationError):
        SweepSpec(main_db=[10, 7, 5], coop_db_range=(0, 10, 0.0))
    with pytest.raises(ConfigurationError):
        SweepSpec(main_db=[10, 7, 5], coop_db_range=(10, 0, 1))
    with pytest.raises(ConfigurationError):
        SweepSpec(main_db=[10, 7, 5], coop_db_range=(0, 10, 1), bounds=())
    with pytest.raises(ConfigurationError):
        SweepSpec(main_db=[10, 7, 5], coop_db_range=(0, 10, 1), bounds=("nc", "xx"))


def test_sweep_spec_bounds_canonical_order():
    spec = SweepSpec(main_db=[10, 7, 5], coop_db_range=(0, 10, 5),
                     bounds=("3fc", "nc", "3fc", "cutset"))
    assert spec.bounds == ("nc", "cutset", "3fc")
    assert SweepSpec(main_db=[1, 2, 3], coop_db_range=(0, 0, 1)).bounds == BOUND_ORDER


@pytest.mark.parametrize(
    "rng,expected",
    [
        ((-20.0, 30.0, 1.0), 51),
        ((0.0, 1.0, 0.25), 5),   # endpoint on the grid is included
        ((0.0, 1.0, 0.3), 4),    # endpoint off the grid is dropped
        ((5.0, 5.0, 2.0), 1),
    ],
)
def test_sweep_grid(rng, expected):
    spec = SweepSpec(main_db=[10, 7, 5], coop_db_range=rng, bounds=("nc",))
    grid = spec.grid()
    assert len(grid) == expected
    assert grid[0] == rng[0]
    assert np.all(np.diff(grid) == pytest.approx(rng[2]))
    assert grid[-1] <= rng[1] + 1e-9


# ---------------------------------------------------------------------------
# running sweeps


@pytest.fixture(scope="module")
def small_sweep():
    spec = SweepSpec(
        main_db=[10.0, 7.0, 5.0],
        coop_db_range=(-10.0, 10.0, 10.0),
        bounds=("nc", "cutset", "nnc", "3pc"),
        optimizer=SMALL,
    )
    return spec, run_sweep(spec)


def test_run_sweep_rows(small_sweep):
    spec, rows = small_sweep
    assert [row.coop_db for row in rows] == [-10.0, 0.0, 10.0]
    for row in rows:
        assert set(row.values) == set(spec.bounds)
        assert set(row.active_terms) == set(spec.bounds)
        # the baseline ignores cooperation entirely
        assert row.values["nc"] == pytest.approx(2.0574, abs=1e-3)
        # emitted rows keep the bound ordering within optimizer slack
        assert row.values["nc"] <= row.values["3pc"] + 1e-3
        assert row.values["3pc"] <= row.values["cutset"] + 1e-3
        assert row.values["nnc"] <= row.values["cutset"] + 1e-3


def test_sweep_columns_monotone_in_coop(small_sweep):
    spec, rows = small_sweep
    for name in spec.bounds:
        series = [row.values[name] for row in rows]
        assert np.diff(series).min() >= -1e-3, name


def test_sweep_is_deterministic(small_sweep):
    spec, rows = small_sweep
    again = run_sweep(spec)
    for a, b in zip(rows, again):
        assert a.values == b.values and a.active_terms == b.active_terms


def test_iter_sweep_progress_and_streaming():
    spec = SweepSpec(main_db=[5.0, 5.0, 5.0], coop_db_range=(0.0, 5.0, 5.0),
                     bounds=("nc",), optimizer=SMALL)
    seen = []
    gen = iter_sweep(spec, progress=lambda i, n, db: seen.append((i, n, db)))
    first = next(gen)
    assert seen == [(0, 2, 0.0)]  # progress fires before each point
    assert first.coop_db == 0.0
    assert [row.coop_db for row in gen] == [5.0]
    assert seen[-1] == (1, 2, 5.0)


# ---------------------------------------------------------------------------
# CSV serialization


def test_csv_round_trip_and_format(tmp_path, small_sweep):
    spec, rows = small_sweep
    path = tmp_path / "sweep.csv"
    write_csv(rows, spec.bounds, path)
    header = path.read_text().splitlines()[0]
    assert header == "coop_db,nc,cutset,nnc,3pc,nc_term,cutset_term,nnc_term,3pc_term"
    record = csv_record(rows[0], spec.bounds)
    assert record[0] == "-10"
    for cell in record[1 : 1 + len(spec.bounds)]:
        whole, frac = cell.lstrip("-").split(".")
        assert len(frac) == 6  # fixed decimal places for byte-stable diffs

    cols, parsed = read_csv(path)
    assert cols == list(spec.bounds)
    assert len(parsed) == len(rows)
    for row, rec in zip(rows, parsed):
        assert rec["coop_db"] == row.coop_db
        for b in spec.bounds:
            assert rec[b] == pytest.approx(row.values[b], abs=5e-7)
            assert rec[f"{b}_term"] == row.active_terms[b]


def test_csv_reruns_are_byte_identical(tmp_path):
    spec = SweepSpec(main_db=[8.0, 6.0, 4.0], coop_db_range=(-5.0, 5.0, 5.0),
                     bounds=("nc", "nnc", "cutset"), optimizer=SMALL)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_sweep(spec), spec.bounds, p1)
    write_csv(run_sweep(spec), spec.bounds, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_read_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        read_csv(path)


def test_csv_header_layout():
    assert csv_header(("nc", "3fc")) == ["coop_db", "nc", "3fc", "nc_term", "3fc_term"]


# ---------------------------------------------------------------------------
# reference curves


def test_reference_curves_ship_with_package():
    path = reference_curves_path()
    assert path.is_file()
    curves = load_reference_curves()
    for figure in ("fig3a", "fig3b", "fig3c"):
        for curve in ("nc", "cutset", "nnc", "3pc", "3fc"):
            assert (figure, curve) in curves
    for curve in ("3fc_m0", "3fc_m5", "3fc_m10", "3fc_m15"):
        assert ("fig4", curve) in curves
    arr = curves[("fig3b", "cutset")]
    assert arr.ndim == 2 and arr.shape[1] == 2
    assert np.all(np.diff(arr[:, 0]) > 0)  # sorted by coop SNR


def test_load_reference_curves_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("figure,curve,coop_db,rate\nfig3a,nc,zero,3.46\n")
    with pytest.raises(FixtureError):
        load_reference_curves(bad)
    missing = tmp_path / "cols.csv"
    missing.write_text("figure,curve,value\n")
    with pytest.raises(FixtureError):
        load_reference_curves(missing)


def nc_sweep_csv(path):
    spec = SweepSpec(main_db=[10.0, 10.0, 10.0], coop_db_range=(-20.0, 30.0, 1.0),
                     bounds=("nc",), optimizer=SMALL)
    write_csv(run_sweep(spec), spec.bounds, path)


def test_compare_csv_analytic_baseline(tmp_path):
    path = tmp_path / "nc.csv"
    nc_sweep_csv(path)
    reports = compare_csv(path, "fig3a", tolerance=1e-3, bounds=("nc",))
    assert len(reports) == 1
    rep = reports[0]
    assert rep.curve == "nc" and rep.column == "nc"
    assert rep.passed and rep.max_abs_dev <= 1e-3
    # a stricter tolerance than the digitization error must fail
    loose = compare_csv(path, "fig3a", tolerance=1e-9, bounds=("nc",))
    assert not loose[0].passed


def test_compare_csv_error_paths(tmp_path):
    path = tmp_path / "nc.csv"
    nc_sweep_csv(path)
    with pytest.raises(FixtureError):
        compare_csv(path, "fig9", tolerance=0.05)  # unknown figure
    with pytest.raises(FixtureError):
        compare_csv(path, "fig3a", tolerance=0.05)  # CSV lacks most curves
    with pytest.raises(FixtureError):
        compare_csv(path, "fig3a", tolerance=0.05, bounds=("3fc",))


# ---------------------------------------------------------------------------
# command line


def write_config(tmp_path, text):
    path = tmp_path / "cfg.txt"
    path.write_text(text)
    return str(path)


def test_parse_config(tmp_path):
    cfg = parse_config(write_config(tmp_path, """
# comment line
main_db = 10 7 5
bound = nc   # trailing comment
bound = nnc
deltas = 1, 2, 3
"""))
    assert cfg["main_db"] == ["10 7 5"]
    assert cfg["bound"] == ["nc", "nnc"]
    assert cfg["deltas"] == ["1, 2, 3"]
    from mcbounds import ParseError

    with pytest.raises(ParseError):
        parse_config(write_config(tmp_path, "main_db 10 7 5\n"))
    with pytest.raises(ParseError):
        parse_config(str(tmp_path / "missing.txt"))


def test_cli_evaluate_baseline(tmp_path, capsys):
    cfg = write_config(tmp_path, "main_db = 10 7 5\nbound = nc\n")
    assert main(["evaluate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "bound = nc" in out
    assert "value = 2.0574" in out
    assert "active_term = rx3" in out


def test_cli_evaluate_multiple_bounds_and_out(tmp_path, capsys):
    cfg = write_config(tmp_path, """
main_db = 10 7 5
coop_db = 0
bounds = nc nnc cutset
deltas = 1 1 1
""")
    out_path = tmp_path / "report.txt"
    assert main(["evaluate", "--config", cfg, "--out", str(out_path)]) == 0
    text = out_path.read_text()
    assert "bound = nnc" in text and "bound = cutset" in text
    assert "deltas = 1, 1, 1" in text
    assert capsys.readouterr().out.strip() + "\n" == text


def test_cli_evaluate_strategy_params(tmp_path, capsys):
    cfg = write_config(tmp_path, """
main_db = 10 7 5
coop_db = 10
bound = 3fc
strategy = 3 2 1
rho_x = 0.7
rho_ak = 0.5
delta_k = 1.0
""")
    assert main(["evaluate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "strategy = 3,2,1" in out
    assert "rho_ak = 0.5" in out


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, "main_db = 10 7\nbound = nc\n")
    assert main(["evaluate", "--config", bad]) == 2
    unknown_bound = write_config(tmp_path, "main_db = 10 7 5\nbound = abc\n")
    assert main(["evaluate", "--config", unknown_bound]) == 2
    infeasible = write_config(tmp_path, """
main_db = 10 7 5
bound = 3pc
rho_u = 1.0
rho_al = 1.0
rho_xl = 1.0
""")
    assert main(["evaluate", "--config", infeasible]) == 3
    ok = write_config(tmp_path, "main_db = 10 7 5\nbound = nc\n")
    missing_dir = tmp_path / "no" / "such" / "dir" / "x.txt"
    assert main(["evaluate", "--config", ok, "--out", str(missing_dir)]) == 4
    capsys.readouterr()


def test_cli_optimize(tmp_path, capsys):
    cfg = write_config(tmp_path, "main_db = 10 7 5\ncoop_db = 0\nbounds = nnc\n")
    assert main(["optimize", "--config", cfg, "--starts", "4"]) == 0
    out = capsys.readouterr().out
    assert "bound = nnc" in out
    value = float(next(l for l in out.splitlines() if l.startswith("value")).split("=")[1])
    assert 2.0 < value < 3.0  # loose bracket around the optimum


def test_cli_sweep_and_compare(tmp_path, capsys):
    cfg = write_config(tmp_path, """
main_db = 10 10 10
coop_db_range = -20 30 1
bounds = nc
""")
    out_path = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out_path)]) == 0
    capsys.readouterr()
    assert out_path.read_text().splitlines()[0] == "coop_db,nc,nc_term"

    assert main([
        "compare-fixtures", str(out_path),
        "--figure", "fig3a", "--bounds", "nc", "--tol", "1e-3",
    ]) == 0
    out = capsys.readouterr().out
    assert "overall: PASS" in out

    # a deliberately zeroed CSV must fail the comparison
    zeroed = tmp_path / "zero.csv"
    lines = out_path.read_text().splitlines()
    zeroed.write_text("\n".join(
        [lines[0]] + [",".join([r.split(",")[0], "0.000000", "rx1"]) for r in lines[1:]]
    ) + "\n")
    assert main([
        "compare-fixtures", str(zeroed),
        "--figure", "fig3a", "--bounds", "nc", "--tol", "1e-3",
    ]) == 5
    assert "FAIL" in capsys.readouterr().out

    # asking for curves the CSV does not carry reports a missing curve
    assert main(["compare-fixtures", str(out_path), "--figure", "fig3a"]) == 6
    assert main([
        "compare-fixtures", str(out_path), "--figure", "nope", "--bounds", "nc",
    ]) == 6
    capsys.readouterr()


def test_cli_sweep_requires_out(tmp_path, capsys):
    cfg = write_config(tmp_path, """
main_db = 10 7 5
coop_db_range = 0 10 5
bounds = nc
""")
    assert main(["sweep", "--config", cfg]) == 2
    missing = tmp_path / "no" / "dir" / "s.csv"
    assert main(["sweep", "--config", cfg, "--out", str(missing)]) == 4
    capsys.readouterr()


def test_cli_sweep_bytes_stable_and_plot(tmp_path, capsys):
    cfg = write_config(tmp_path, """
main_db = 10 7 5
coop_db_range = -5 5 5
bounds = nc nnc
starts = 4
""")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()

    png = tmp_path / "curves.png"
    assert main(["sweep", "--config", cfg, "--out", str(b), "--plot", str(png)]) == 0
    assert png.stat().st_size > 1000
    capsys.readouterr()


def test_cli_rejects_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_console_script_installed():
    exe = shutil.which("mcbounds")
    assert exe is not None
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "mcbounds" in proc.stdout


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, "main_db = 10 7 5\nbound = nc\n")
    proc = subprocess.run(
        [sys.executable, "-m", "mcbounds.cli", "evaluate", "--config", cfg],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "value = 2.0574" in proc.stdout
