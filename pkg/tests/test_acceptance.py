"""End-to-end acceptance checks.

Each test covers one release criterion, appends a single PASS/FAIL verdict
line to the shared report (echoed after the pytest summary), and then
asserts.  Optimized curve values are compared against the shipped reference
coordinates, which were read off plots, so those tolerances are dominated by
digitization error rather than optimizer noise.
"""

import itertools
import time

import numpy as np
import pytest

from helpers import ACCEPTANCE_LINES, random_channel, random_params
from mcbounds import (
    OptimizerConfig,
    SubStrategy,
    SweepSpec,
    evaluate_3fc,
    evaluate_3pc,
    from_db,
    gain_3fc,
    gain_3pc,
    no_coop_rate,
    optimize_3fc,
    optimize_3pc,
    optimize_cutset,
    optimize_nnc,
    run_sweep,
)
from mcbounds.bounds import strategy_values_batch
from mcbounds.gaussian import scale_to_identity_cap
from mcbounds.oracle import validate_terms

# Budget that reproduces every reference point deterministically in well
# under the stated runtime caps (seeded, so reruns repeat the exact values).
CURVES = OptimizerConfig(starts=24, max_iters=600, tol=1e-4, seed=0)


def report(tag, ok, detail):
    ACCEPTANCE_LINES.append(f"{tag}: {'PASS' if ok else 'FAIL'}  ({detail})")
    return ok


@pytest.fixture(scope="module")
def fig3b_rows():
    spec = SweepSpec(
        main_db=[10.0, 7.0, 5.0],
        coop_db_range=(-20.0, 30.0, 10.0),
        bounds=("nc", "cutset", "nnc", "3pc", "3fc"),
        optimizer=CURVES,
    )
    start = time.time()
    rows = run_sweep(spec)
    return rows, time.time() - start


def test_a1_asymmetric_reference_curves(fig3b_rows):
    rows, elapsed = fig3b_rows
    targets = {
        "nc": ([2.057] * 6, 1e-3),
        "cutset": ([2.215, 2.547, 3.329, 4.261, 4.261, 4.261], 0.05),
        "nnc": ([2.061, 2.094, 2.377, 3.246, 3.920, 4.154], 0.05),
        "3pc": ([2.064, 2.125, 2.623, 3.692, 3.937, 3.994], 0.05),
        "3fc": ([2.064, 2.125, 2.623, 3.725, 4.053, 4.196], 0.05),
    }
    devs = {
        name: float(np.max(np.abs(np.array([r.values[name] for r in rows]) - vals)))
        for name, (vals, _) in targets.items()
    }
    ok = all(devs[name] <= tol for name, (_, tol) in targets.items())
    ok &= elapsed < 300.0
    detail = ", ".join(
        f"{name} dev {devs[name]:.4f}/{tol}" for name, (_, tol) in targets.items()
    )
    assert report("A1 curves fig3b, main 10/7/5 dB", ok, f"{detail}; {elapsed:.0f} s")


def test_a2_symmetric_scheme_meets_compression_bound():
    spec = SweepSpec(
        main_db=[10.0, 10.0, 10.0],
        coop_db_range=(-20.0, 30.0, 10.0),
        bounds=("nnc", "3fc"),
        optimizer=CURVES,
    )
    rows = run_sweep(spec)
    gap = max(abs(r.values["3fc"] - r.values["nnc"]) for r in rows)
    anchors = {-20.0: 3.461, 10.0: 4.026, 30.0: 4.839}
    dev = max(
        abs(r.values[name] - anchors[r.coop_db])
        for r in rows
        if r.coop_db in anchors
        for name in ("nnc", "3fc")
    )
    ok = gap <= 0.02 and dev <= 0.05
    assert report(
        "A2 curves fig3a, symmetric 10 dB",
        ok,
        f"max |3fc-nnc| {gap:.4f}/0.02, anchor dev {dev:.4f}/0.05",
    )


def test_a3_spread_channel_saturation():
    nc = no_coop_rate(from_db([10.0, 5.0, 0.0], 0.0)).value
    sat = SweepSpec(
        main_db=[10.0, 5.0, 0.0],
        coop_db_range=(8.0, 30.0, 2.0),
        bounds=("cutset",),
        optimizer=CURVES,
    )
    cut_dev = max(abs(r.values["cutset"] - 3.922) for r in run_sweep(sat))
    chain = SweepSpec(
        main_db=[10.0, 5.0, 0.0],
        coop_db_range=(0.0, 30.0, 10.0),
        bounds=("3fc",),
        optimizer=CURVES,
    )
    f30 = run_sweep(chain)[-1].values["3fc"]
    ok = nc == 1.0 and cut_dev <= 1e-3 and abs(f30 - 3.886) <= 0.05
    assert report(
        "A3 curves fig3c, main 10/5/0 dB",
        ok,
        f"nc {nc} (exact 1), cutset sat dev {cut_dev:.5f}/1e-3, "
        f"3fc@30 dev {abs(f30 - 3.886):.4f}/0.05",
    )


def test_a4_symmetric_direct_snr_family():
    targets = {0.0: 1.965, 5.0: 3.323, 10.0: 4.839, 15.0: 6.375}
    devs = {}
    for main_db, target in targets.items():
        spec = SweepSpec(
            main_db=[main_db] * 3,
            coop_db_range=(0.0, 30.0, 10.0),
            bounds=("3fc",),
            optimizer=CURVES,
        )
        devs[main_db] = abs(run_sweep(spec)[-1].values["3fc"] - target)
    ok = max(devs.values()) <= 0.05
    assert report(
        "A4 curves fig4, 3fc@30 dB",
        ok,
        ", ".join(f"main {m:g} dev {d:.4f}/0.05" for m, d in devs.items()),
    )


def test_a5_saturation_gain_formulas(fig3b_rows):
    rows, _ = fig3b_rows
    snrs = [10.0 ** 1.0, 10.0 ** 0.7, 10.0 ** 0.5]
    g_full = gain_3fc(snrs)
    g_part = gain_3pc(snrs)
    nc = rows[0].values["nc"]
    cut30 = rows[-1].values["cutset"]
    sym60 = gain_3fc([1e6, 1e6, 1e6])
    checks = {
        "gain_3fc": (abs(g_full - 2.204), 1e-3),
        "vs cutset sat": (abs((cut30 - nc) - g_full), 2e-3),
        "gain_3pc": (abs(g_part - 1.944), 1e-3),
        "3pc asymptote": (abs((nc + g_part) - 4.001), 1e-3),
        "sym 60 dB vs log2(3)": (abs(sym60 - np.log2(3.0)), 0.01),
    }
    ok = all(dev <= tol for dev, tol in checks.values())
    detail = ", ".join(f"{k} dev {d:.1e}/{tol:g}" for k, (d, tol) in checks.items())
    assert report("A5 saturation gains", ok, detail)


def test_a6_sampled_term_values_match_closed_forms():
    rng = np.random.default_rng(0)
    strategies = SubStrategy.all()
    start = time.time()
    worst_z = 0.0
    failures = []
    for i in range(25):
        ch = random_channel(rng)
        p = random_params(rng, delta_range=(-1.0, 1.0))
        reports = validate_terms(ch, strategies[i % 6], p, samples=10**6, seed=1000 + i)
        for tid, rep in reports.items():
            z = abs(rep.estimate.mean - rep.closed_form) / rep.estimate.stderr
            worst_z = max(worst_z, z)
            if not rep.passed:
                failures.append((i, tid))
    elapsed = time.time() - start
    ok = not failures and elapsed < 600.0
    assert report(
        "A6 Monte-Carlo term audit",
        ok,
        f"25 draws x 13 terms, worst |z| {worst_z:.2f}/3, "
        f"failures {failures or 'none'}; {elapsed:.0f} s",
    )


def test_a7_search_beats_coarse_grid():
    mags = np.array(list(itertools.product([0.0, 0.5, 1.0], repeat=8)))
    deltas = np.array(list(itertools.product([0.1, 1.0, 10.0], repeat=2)))
    grid = np.zeros((len(mags) * len(deltas), 13))
    grid[:, :8] = np.repeat(mags, len(deltas), axis=0)
    grid[:, 11:] = np.tile(deltas, (len(mags), 1))
    grid = scale_to_identity_cap(grid)

    rng = np.random.default_rng(0)
    margins = []
    for _ in range(5):
        ch = random_channel(rng)
        floor = max(
            strategy_values_batch(ch, s, grid, "3fc").max() for s in SubStrategy.all()
        )
        margins.append(optimize_3fc(ch, OptimizerConfig(seed=0)).value - floor)
    ok = min(margins) >= 0.0
    assert report(
        "A7 search vs 59049-point grid floor",
        ok,
        "margins " + ", ".join(f"{m:+.4f}" for m in margins),
    )


def test_a8_bound_ordering_and_collapse():
    cfg = OptimizerConfig(starts=8, max_iters=300, tol=1e-4, seed=0)
    rng = np.random.default_rng(0)
    worst = {"nc<=3pc": 0.0, "3pc<=3fc": 0.0, "3fc<=cutset": 0.0, "nnc<=cutset": 0.0}
    collapse = 0.0
    for _ in range(100):
        ch = random_channel(rng)
        p3 = optimize_3pc(ch, cfg)
        f3 = optimize_3fc(ch, cfg, warm=p3)
        cut = optimize_cutset(ch, cfg).value
        worst["nc<=3pc"] = max(worst["nc<=3pc"], no_coop_rate(ch).value - p3.value)
        worst["3pc<=3fc"] = max(worst["3pc<=3fc"], p3.value - f3.value)
        worst["3fc<=cutset"] = max(worst["3fc<=cutset"], f3.value - cut)
        worst["nnc<=cutset"] = max(worst["nnc<=cutset"], optimize_nnc(ch, cfg).value - cut)
        p = random_params(rng).replace(delta_q=np.inf, rho_xq=0.0)
        collapse = max(
            collapse,
            max(
                abs(evaluate_3fc(ch, s, p).value - evaluate_3pc(ch, s, p).value)
                for s in SubStrategy.all()
            ),
        )
    ok = max(worst.values()) <= 1e-3 and collapse <= 1e-9
    detail = ", ".join(f"{k} slack {v:+.1e}" for k, v in worst.items())
    assert report(
        "A8 ordering on 100 random channels",
        ok,
        f"{detail} (tol 1e-3); collapse dev {collapse:.1e}/1e-9",
    )
