"""Shared random draws for the test suite.

Callers pass their own seeded generator so every test stays deterministic.
Raw magnitude draws are projected through ``scale_to_identity_cap``, which
makes each parameter row feasible for the layered codebook construction (and
therefore for the per-node power budgets).
"""

import numpy as np

from mcbounds import ChannelConfig, StrategyParams, from_db, scale_to_identity_cap

TWO_PI = 2.0 * np.pi

# Filled by tests/test_acceptance.py; conftest echoes it after the run so the
# per-criterion verdicts survive pytest's output capture.
ACCEPTANCE_LINES: list = []


def random_param_matrix(rng, n, coherent=False, delta_range=(-2.0, 2.0)):
    """(n, 13) feasible parameter rows.

    Magnitudes are uniform on [0, 1], phases uniform on [0, 2*pi) (pinned to
    zero when ``coherent``), quantization noises log-uniform over
    ``delta_range`` decades.
    """
    pmat = np.empty((n, 13))
    pmat[:, :8] = rng.uniform(0.0, 1.0, size=(n, 8))
    pmat[:, 8:11] = 0.0 if coherent else rng.uniform(0.0, TWO_PI, size=(n, 3))
    pmat[:, 11:13] = 10.0 ** rng.uniform(*delta_range, size=(n, 2))
    return scale_to_identity_cap(pmat)


def random_params(rng, **kwargs) -> StrategyParams:
    """One feasible StrategyParams draw (see random_param_matrix)."""
    return StrategyParams.from_array(random_param_matrix(rng, 1, **kwargs)[0])


def random_channel(rng, symmetric_coop=False) -> ChannelConfig:
    """Random channel: direct links in [-5, 15] dB, coop links in [-10, 25] dB."""
    main_db = rng.uniform(-5.0, 15.0, size=3)
    if symmetric_coop:
        return from_db(main_db, float(rng.uniform(-10.0, 25.0)))
    return from_db(main_db, rng.uniform(-10.0, 25.0, size=(3, 3)))
