"""Independent cross-checks for the closed-form Gaussian rate terms.

Every scalar term used by the scheme evaluators equals a signed combination of
conditional mutual informations of one jointly Gaussian vector: the five
codebook layers, the three receiver observations, and the two compressed
copies forwarded over the cooperation links (:data:`JOINT_VARS`).  This module
recomputes the terms through that vector along two independent routes:

* exact -- :func:`exact_conditional_mi` evaluates each conditional mutual
  information from the joint covariance by log-determinants of conditional
  (Schur-complement) blocks; agreement with the closed forms is to machine
  precision.
* sampled -- :func:`mc_mutual_info` draws from the joint law, fits block
  covariances on one half of the draw, and averages the information
  log-ratio over the disjoint half.  The two routes share no code with the
  evaluators beyond the covariance itself, so an index-mapping or algebra bug
  in either place shows up as a mismatch.

:func:`validate_term` glues both ends together: it maps a term label to its
combination of conditional mutual informations, combines the per-sample
log-ratios with the same coefficients (so the reported standard error is the
exact standard error of the combination, correlations included), and passes
iff the closed form lies within three standard errors of the sampled mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelConfig, capacity
from .gaussian import StrategyParams, SubStrategy, build_sigma, check_power, ingredients
from .bounds import (
    TERM_LABELS_2RC,
    TERM_LABELS_3FC,
    TERM_LABELS_3PC,
    terms_2rc_batch,
    terms_3fc_batch,
    terms_3pc_batch,
)
from .gaussian import ingredients_batch

_INV_LN2 = 1.0 / np.log(2.0)

# Diagonal ridge applied to a covariance block that is numerically singular
# (e.g. a switched-off layer with exactly zero power).
_RIDGE = 1e-12

# Stand-in variance for a switched-off compressed copy (delta = +inf).  The
# copy then carries ~1e-12 bit -- far below anything a sampled estimate can
# resolve -- while keeping the joint covariance finite.
_DELTA_SURROGATE = 1e12

#: Variable order of the joint Gaussian vector built by :func:`joint_covariance`:
#: the five codebook layers for decoding order (l, k, q), the three receiver
#: observations, and the compressed copies of y_k and y_q forwarded to the
#: first decoder.  Each compressed copy shares the receiver noise of the
#: observation it quantizes.
JOINT_VARS = ("u", "x", "x_l", "x_k", "x_q", "y_l", "y_k", "y_q", "yhat_k", "yhat_q")

_U, _X, _XL, _XK, _XQ, _YL, _YK, _YQ, _YHK, _YHQ = range(10)


@dataclass(frozen=True)
class McEstimate:
    """Sampled conditional-information estimate in bits.

    ``samples`` counts the total draw; half fits the block covariances and the
    disjoint half is averaged, so ``stderr`` is the standard error over
    ``samples // 2`` evaluation points.  ``regularized`` flags that at least
    one fitted block was numerically singular and received a 1e-12 diagonal
    ridge.
    """

    mean: float
    stderr: float
    samples: int
    regularized: bool = False

    def __post_init__(self):
        if not self.stderr >= 0.0:
            raise ValueError("stderr must be >= 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass(frozen=True)
class TermReport:
    """One closed-form-vs-sampled comparison; passes at three standard errors."""

    term_id: str
    closed_form: float
    estimate: McEstimate
    passed: bool


# ---------------------------------------------------------------------------
# joint covariance of layers, observations and compressed copies


def joint_covariance(
    ch: ChannelConfig, s: SubStrategy, p: StrategyParams, power: float = 1.0
) -> np.ndarray:
    """Covariance of the ten-variable Gaussian vector listed in JOINT_VARS.

    Receiver observations combine the codebook layers through the square-root
    link SNRs plus unit receiver noise; a receiver's own transmission does not
    appear in its observation.  The compressed copies add independent
    quantization noise delta_k / delta_q on top of the corresponding
    observation (sharing its receiver noise); an infinite delta is represented
    by a large finite surrogate variance.
    """
    sigma = build_sigma(p, power)
    l, k, q = s.as_tuple()
    # Rows: observations at l, k, q.  Columns: layers (U, X, X_l, X_k, X_q).
    gains = np.zeros((3, 5))
    gains[0, 1] = np.sqrt(ch.main(l))
    gains[0, 3] = np.sqrt(ch.coop(k, l))
    gains[0, 4] = np.sqrt(ch.coop(q, l))
    gains[1, 1] = np.sqrt(ch.main(k))
    gains[1, 2] = np.sqrt(ch.coop(l, k))
    gains[1, 4] = np.sqrt(ch.coop(q, k))
    gains[2, 1] = np.sqrt(ch.main(q))
    gains[2, 2] = np.sqrt(ch.coop(l, q))
    gains[2, 3] = np.sqrt(ch.coop(k, q))

    deltas = np.array([p.delta_k, p.delta_q])
    deltas[~np.isfinite(deltas)] = _DELTA_SURROGATE

    # Mixing of the independent base vector (layers, z_l, z_k, z_q, zhat_k,
    # zhat_q) into the observables; yhat rows reuse the y noise coordinate.
    mix = np.zeros((10, 10))
    mix[:5, :5] = np.eye(5)
    mix[5:8, :5] = gains
    mix[8, :5] = gains[1]
    mix[9, :5] = gains[2]
    mix[[5, 6, 7], [5, 6, 7]] = 1.0
    mix[8, 6] = mix[8, 8] = 1.0
    mix[9, 7] = mix[9, 9] = 1.0

    base = np.zeros((10, 10), dtype=complex)
    base[:5, :5] = sigma
    base[[5, 6, 7], [5, 6, 7]] = 1.0
    base[[8, 9], [8, 9]] = deltas
    return mix @ base @ mix.T


# ---------------------------------------------------------------------------
# exact route: conditional mutual information by log-determinants


def _logdet(cov: np.ndarray) -> tuple[float, bool]:
    """log det of a Hermitian PSD block, ridging once if it is singular."""
    sign, val = np.linalg.slogdet(cov)
    if np.real(sign) > 0.0 and np.isfinite(val):
        return float(val), False
    sign, val = np.linalg.slogdet(cov + _RIDGE * np.eye(cov.shape[0]))
    if np.real(sign) <= 0.0 or not np.isfinite(val):
        raise np.linalg.LinAlgError("covariance block is not positive semidefinite")
    return float(val), True


def _check_partition(joint_cov, part_a, part_b, part_c):
    cov = np.asarray(joint_cov, dtype=complex)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("joint covariance must be a square matrix")
    if not np.allclose(cov, cov.conj().T, atol=1e-10):
        raise ValueError("joint covariance must be Hermitian")
    w = np.linalg.eigvalsh(cov)
    if w.min() < -1e-8 * max(1.0, float(w.max())):
        raise ValueError("joint covariance must be positive semidefinite")
    dim = cov.shape[0]
    parts = []
    for name, part in (("A", part_a), ("B", part_b), ("C", part_c)):
        idx = tuple(int(i) for i in np.atleast_1d(np.asarray(part, dtype=int)))
        if name != "C" and not idx:
            raise ValueError(f"partition {name} must be nonempty")
        if len(set(idx)) != len(idx) or not all(0 <= i < dim for i in idx):
            raise ValueError(f"partition {name} must hold distinct indices in [0, {dim})")
        parts.append(idx)
    a, b, c = parts
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise ValueError("partitions A, B, C must be disjoint")
    return cov, a, b, c


def exact_conditional_mi(joint_cov, part_a, part_b, part_c=()) -> float:
    """I(A;B|C) in bits via log-determinants of the covariance blocks.

    Exact for Gaussians: the conditional mutual information equals
    log2 det Sigma_AC + log2 det Sigma_BC - log2 det Sigma_C
    - log2 det Sigma_ABC.  Singular blocks (from switched-off layers) are
    ridged by 1e-12; the ridge cancels between numerator and denominator.
    """
    cov, a, b, c = _check_partition(joint_cov, part_a, part_b, part_c)
    total = 0.0
    for sign, idx in ((1.0, a + c), (1.0, b + c), (-1.0, c), (-1.0, a + b + c)):
        if idx:
            total += sign * _logdet(cov[np.ix_(idx, idx)])[0]
    return total * _INV_LN2


# ---------------------------------------------------------------------------
# sampled route


def _sample(cov: np.ndarray, n: int, seed, chunk: int = 1 << 17) -> np.ndarray:
    """Draw n zero-mean circularly-symmetric rows with the given covariance.

    The draw is produced in fixed-size chunks with per-chunk derived seeds, so
    the merged result is deterministic no matter how chunks are scheduled.
    """
    w, v = np.linalg.eigh(np.asarray(cov, dtype=complex))
    factor = v * np.sqrt(np.clip(w.real, 0.0, None))
    dim = factor.shape[0]
    out = np.empty((n, dim), dtype=complex)
    for i, sub in enumerate(np.random.SeedSequence(seed).spawn(-(-n // chunk))):
        rng = np.random.default_rng(sub)
        m = min(chunk, n - i * chunk)
        z = rng.standard_normal((m, dim)) + 1j * rng.standard_normal((m, dim))
        out[i * chunk : i * chunk + m] = (z / np.sqrt(2.0)) @ factor.T
    return out


class _BlockDensities:
    """Per-sample Gaussian log-densities of index blocks, computed lazily.

    Block covariances are fitted on the fitting half of a draw and densities
    are evaluated on the held-out half, so the averaged log-ratio is an honest
    estimate.  The additive pi^dim constant is dropped -- it cancels in every
    conditional-information combination.
    """

    def __init__(self, fit: np.ndarray, held_out: np.ndarray):
        self._cov = fit.T @ fit.conj() / fit.shape[0]
        self._x = held_out
        self._cache: dict[tuple[int, ...], np.ndarray] = {}
        self.regularized = False

    def logdens(self, idx: tuple[int, ...]) -> np.ndarray:
        if idx not in self._cache:
            block = self._cov[np.ix_(idx, idx)]
            try:
                chol = np.linalg.cholesky(block)
            except np.linalg.LinAlgError:
                chol = np.linalg.cholesky(block + _RIDGE * np.eye(len(idx)))
                self.regularized = True
            white = np.linalg.solve(chol, self._x[:, idx].T)
            quad = np.abs(white).real ** 2
            logdet = 2.0 * np.log(np.abs(np.diagonal(chol))).sum()
            self._cache[idx] = -(quad.sum(axis=0) + logdet)
        return self._cache[idx]

    def mi_summand(self, part_a, part_b, part_c) -> np.ndarray:
        """Per-sample log-ratio whose mean estimates I(A;B|C), in bits."""
        a, b, c = tuple(part_a), tuple(part_b), tuple(part_c)
        total = self.logdens(a + b + c) - self.logdens(a + c) - self.logdens(b + c)
        if c:
            total = total + self.logdens(c)
        return total * _INV_LN2


def _estimate(summand: np.ndarray, samples: int, regularized: bool) -> McEstimate:
    return McEstimate(
        mean=float(summand.mean()),
        stderr=float(summand.std(ddof=1) / np.sqrt(summand.shape[0])),
        samples=samples,
        regularized=regularized,
    )


def mc_mutual_info(
    joint_cov, part_a, part_b, part_c=(), samples: int = 1_000_000, seed=0
) -> McEstimate:
    """Sampled estimate of I(A;B|C) in bits for a joint Gaussian covariance.

    Splits the draw into a fitting half (empirical block covariances) and an
    evaluation half (averaged log-density ratio); deterministic given seed.
    """
    cov, a, b, c = _check_partition(joint_cov, part_a, part_b, part_c)
    samples = int(samples)
    if samples < 4:
        raise ValueError("need at least 4 samples to fit and evaluate disjoint halves")
    draw = _sample(cov, samples, seed)
    dens = _BlockDensities(draw[: samples // 2], draw[samples // 2 :])
    summand = dens.mi_summand(a, b, c)
    return _estimate(summand, samples, dens.regularized)


# ---------------------------------------------------------------------------
# term registry: each scalar term as a combination of conditional MIs

#: (A, B, C) index triples over :data:`JOINT_VARS` for every named
#: information atom appearing in the closed-form terms.
_ATOMS: dict[str, tuple[tuple, tuple, tuple]] = {
    # fresh transmit layer at one receiver, everything else resolved
    "gamma_l": ((_X,), (_YL,), (_U, _XL, _XK, _XQ)),
    "gamma_k": ((_X,), (_YK,), (_U, _XL, _XK, _XQ)),
    "gamma_q": ((_X,), (_YQ,), (_U, _XL, _XK, _XQ)),
    # + another node's codeword still unresolved at the first decoder
    "kappa_l": ((_X, _XK), (_YL,), (_U, _XL, _XQ)),
    "lambda_l": ((_X, _XQ), (_YL,), (_U, _XL, _XK)),
    "beta_l": ((_X, _XK, _XQ), (_YL,), (_U, _XL)),
    # second decoder: last receiver's codeword unresolved / coherent X+X_l
    "kappa_k": ((_X, _XQ), (_YK,), (_U, _XL, _XK)),
    "coherent_k": ((_X, _XL), (_YK,), (_U, _XK, _XQ)),
    "beta_k": ((_X, _XL, _XQ), (_YK,), (_U, _XK)),
    # last receiver decodes the full stack knowing only its own codeword
    "beta_q_prime": ((_U, _X, _XL, _XK), (_YQ,), (_XQ,)),
    # compression bill: observation against its own compressed copy
    "r_k": ((_YK,), (_YHK,), (_U, _X, _XL, _XK, _XQ, _YL, _YHQ)),
    "r_q": ((_YQ,), (_YHQ,), (_U, _X, _XL, _XK, _XQ, _YL, _YHK)),
    # combining a direct observation with forwarded compressed copies
    "simo_lk": ((_X,), (_YL, _YHK), (_U, _XL, _XK, _XQ)),
    "simo_lq": ((_X,), (_YL, _YHQ), (_U, _XL, _XK, _XQ)),
    "simo_lkq": ((_X,), (_YL, _YHK, _YHQ), (_U, _XL, _XK, _XQ)),
    "simo_kq": ((_X,), (_YK, _YHQ), (_U, _XL, _XK, _XQ)),
}

#: Signed atom combinations reproducing each closed-form term.
_TERM_COMBOS: dict[str, tuple[tuple[float, str], ...]] = {
    "T1": ((1.0, "beta_q_prime"),),
    "T2": (
        (0.5, "simo_lk"),
        (0.5, "simo_lq"),
        (0.5, "beta_l"),
        (-0.5, "gamma_l"),
        (-0.5, "r_k"),
        (-0.5, "r_q"),
    ),
    "T3": (
        (0.5, "simo_lq"),
        (0.5, "gamma_k"),
        (0.5, "beta_k"),
        (-0.5, "kappa_k"),
        (0.5, "beta_l"),
        (-0.5, "gamma_l"),
        (-0.5, "r_k"),
        (-0.5, "r_q"),
    ),
    "T4": ((1.0, "simo_lq"), (1.0, "kappa_l"), (-1.0, "gamma_l"), (-1.0, "r_k")),
    "T5": ((1.0, "simo_lk"), (1.0, "lambda_l"), (-1.0, "gamma_l"), (-1.0, "r_q")),
    "T6": (
        (1.0, "gamma_k"),
        (1.0, "beta_k"),
        (-1.0, "kappa_k"),
        (1.0, "lambda_l"),
        (-1.0, "gamma_l"),
        (-1.0, "r_q"),
    ),
    "T7": ((1.0, "simo_lk"), (1.0, "kappa_k"), (-1.0, "gamma_k"), (-1.0, "r_q")),
    "T8": ((1.0, "beta_k"), (-1.0, "r_q")),
    "T9": (
        (1.0, "kappa_l"),
        (1.0, "lambda_l"),
        (-1.0, "gamma_l"),
        (-1.0, "r_k"),
        (-1.0, "r_q"),
    ),
    "T10": ((1.0, "beta_l"), (-1.0, "r_k"), (-1.0, "r_q")),
    "T11": (
        (1.0, "kappa_l"),
        (1.0, "kappa_k"),
        (-1.0, "gamma_k"),
        (-1.0, "r_k"),
        (-1.0, "r_q"),
    ),
    "T12": ((1.0, "simo_lkq"),),
    "T13": ((1.0, "simo_kq"), (1.0, "beta_k"), (-1.0, "kappa_k")),
    "P1": ((1.0, "beta_q_prime"),),
    "P2": ((1.0, "coherent_k"),),
    "P3": ((1.0, "simo_lk"),),
    "P4": ((1.0, "kappa_l"), (-1.0, "r_k")),
}
_TERM_COMBOS["R1"] = _TERM_COMBOS["P2"]
_TERM_COMBOS["R2"] = _TERM_COMBOS["P3"]
_TERM_COMBOS["R3"] = _TERM_COMBOS["P4"]
_TERM_COMBOS.update({name: ((1.0, name),) for name in _ATOMS})

#: Every label accepted by validate_term / exact_term_value.
TERM_IDS = tuple(_TERM_COMBOS)


def _closed_values(ch: ChannelConfig, s: SubStrategy, p: StrategyParams) -> dict:
    """Closed-form value of every term label, straight from the evaluators."""
    batch = ingredients_batch(ch, s, p.to_array()[None, :])
    out = {}
    for labels, kernel in (
        (TERM_LABELS_3FC, terms_3fc_batch),
        (TERM_LABELS_3PC, terms_3pc_batch),
        (TERM_LABELS_2RC, terms_2rc_batch),
    ):
        for label, value in zip(labels, kernel(batch)[:, 0]):
            out[label] = float(value)
    ing = ingredients(ch, s, p)
    disc_k = 1.0 / (1.0 + p.delta_k)
    disc_q = 1.0 / (1.0 + p.delta_q)
    out.update(
        {
            "gamma_l": capacity(ing.gamma_l),
            "gamma_k": capacity(ing.gamma_k),
            "gamma_q": capacity(ing.gamma_q),
            "kappa_l": capacity(ing.kappa_l),
            "kappa_k": capacity(ing.kappa_k),
            "lambda_l": capacity(ing.lambda_l),
            "beta_l": capacity(ing.beta_l),
            "beta_k": capacity(ing.beta_k),
            "beta_q_prime": capacity(ing.beta_q_prime),
            "coherent_k": capacity(ing.beta_k - ing.kappa_k + ing.gamma_k),
            "r_k": ing.r_k,
            "r_q": ing.r_q,
            "simo_lk": capacity(ing.gamma_l + ing.gamma_k * disc_k),
            "simo_lq": capacity(ing.gamma_l + ing.gamma_q * disc_q),
            "simo_lkq": capacity(ing.gamma_l + ing.gamma_k * disc_k + ing.gamma_q * disc_q),
            "simo_kq": capacity(ing.gamma_k + ing.gamma_q * disc_q),
        }
    )
    return out


def _lookup_combo(term_id: str):
    try:
        return _TERM_COMBOS[term_id]
    except KeyError:
        raise KeyError(
            f"unknown term id {term_id!r}; known ids: {', '.join(TERM_IDS)}"
        ) from None


def exact_term_value(term_id: str, ch: ChannelConfig, s: SubStrategy, p: StrategyParams) -> float:
    """Closed-form term recomputed through the joint-covariance log-det route."""
    combo = _lookup_combo(term_id)
    cov = joint_covariance(ch, s, p)
    return float(
        sum(coef * exact_conditional_mi(cov, *_ATOMS[name]) for coef, name in combo)
    )


def validate_terms(
    ch: ChannelConfig,
    s: SubStrategy,
    p: StrategyParams,
    term_ids: Optional[Sequence[str]] = None,
    samples: int = 1_000_000,
    seed=0,
) -> dict[str, TermReport]:
    """Cross-check many term labels against one shared draw (default: all).

    Sharing the draw makes a full sweep over the thirteen fully-interactive
    terms roughly as cheap as a single term, and the per-term standard error
    still accounts for correlations because the atom log-ratios are combined
    per sample before averaging.
    """
    check_power(p)
    ids = tuple(term_ids) if term_ids is not None else TERM_IDS
    combos = {tid: _lookup_combo(tid) for tid in ids}
    samples = int(samples)
    if samples < 4:
        raise ValueError("need at least 4 samples to fit and evaluate disjoint halves")
    closed = _closed_values(ch, s, p)
    draw = _sample(joint_covariance(ch, s, p), samples, seed)
    dens = _BlockDensities(draw[: samples // 2], draw[samples // 2 :])
    needed = sorted({name for combo in combos.values() for _, name in combo})
    summands = {name: dens.mi_summand(*_ATOMS[name]) for name in needed}
    reports = {}
    for tid, combo in combos.items():
        total = np.zeros(samples - samples // 2)
        for coef, name in combo:
            total += coef * summands[name]
        est = _estimate(total, samples, dens.regularized)
        reports[tid] = TermReport(
            term_id=tid,
            closed_form=closed[tid],
            estimate=est,
            passed=bool(abs(closed[tid] - est.mean) <= 3.0 * est.stderr),
        )
    return reports


def validate_term(
    term_id: str,
    ch: ChannelConfig,
    s: SubStrategy,
    p: StrategyParams,
    samples: int = 1_000_000,
    seed=0,
) -> TermReport:
    """Compare one closed-form term against its sampled estimate.

    Passes iff the closed form lies within three standard errors of the
    sampled conditional-information combination.  Unknown labels raise
    KeyError; the known ones are the scheme term labels (T1..T13, P1..P4,
    R1..R3) and the named atoms they are built from.
    """
    return validate_terms(ch, s, p, (term_id,), samples=samples, seed=seed)[term_id]
