"""Gaussian codebook layering for the interactive cooperation schemes.

The transmitter and the two relaying receivers superpose their codewords on a
shared lattice of Gaussian layers.  With decoding order (l, k, q) — receiver l
decodes first, then k, then q — the layers are

    U   : cloud center carrying stale message blocks, reconstructed by all
          cooperating nodes,
    X_l : first decoder's relay codeword  = fresh part + coupling * U,
    X   : transmit codeword              = fresh part + coupling * X_l,
    X_k : second decoder's relay codeword = fresh part + coupling * U,
    X_q : last receiver's codeword, independent of the rest.

Couplings are complex scalars rho * exp(j*theta); fresh parts are independent
Gaussians.  ``StrategyParams`` collects the power splits (rho_*), coupling
phases (theta_*) and the two quantization noise variances (delta_*) used when
receivers compress-and-forward their observations.

Everything downstream consumes either the structured covariance of
(U, X, X_l, X_k, X_q) from :func:`build_sigma` or the scalar interference
aggregates from :func:`ingredients`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig, capacity
from .errors import InfeasibleParamsError

TWO_PI = 2.0 * np.pi

#: Canonical ordering of the 13 strategy parameters, used by to_array/from_array
#: and by the optimizer's vectorized kernels.
PARAM_NAMES = (
    "rho_u",
    "rho_xl",
    "rho_al",
    "rho_x",
    "rho_ak",
    "rho_xk",
    "rho_bl",
    "rho_xq",
    "theta_al",
    "theta_ak",
    "theta_bl",
    "delta_k",
    "delta_q",
)

# Tolerated numerical slack on the power-budget inequalities.
POWER_TOL = 1e-9


@dataclass(frozen=True, order=True)
class SubStrategy:
    """Decoding order (l, k, q): a permutation of the receiver labels 1..3.

    Receiver l is served first by the compress-and-forward round, k decodes
    second helped by l, and q decodes last helped by l, k and the cloud
    center.
    """

    l: int
    k: int
    q: int

    def __post_init__(self):
        if sorted((self.l, self.k, self.q)) != [1, 2, 3]:
            raise ValueError("(l, k, q) must be a permutation of (1, 2, 3)")

    @classmethod
    def all(cls) -> tuple["SubStrategy", ...]:
        """The six decoding orders, lexicographically sorted."""
        return tuple(cls(*p) for p in itertools.permutations((1, 2, 3)))

    @classmethod
    def from_pair(cls, l: int, k: int) -> "SubStrategy":
        """Decoding order for a two-receiver session: q is the left-over label."""
        q = ({1, 2, 3} - {l, k}).pop()
        return cls(l, k, q)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.l, self.k, self.q)


@dataclass(frozen=True)
class StrategyParams:
    """Power splits, coupling phases and compression noises of one strategy.

    Magnitudes live in [0, 1]:

    rho_u   : power of the cloud center U,
    rho_xl  : fresh power of the first decoder's relay codeword,
    rho_al  : coupling magnitude X_l <- U,
    rho_x   : fresh power of the transmit codeword,
    rho_ak  : coupling magnitude X <- X_l,
    rho_xk  : fresh power of the second decoder's relay codeword,
    rho_bl  : coupling magnitude X_k <- U,
    rho_xq  : power of the last receiver's codeword.

    theta_al/theta_ak/theta_bl are the coupling phases (stored wrapped into
    [0, 2*pi)).  delta_k/delta_q > 0 are the quantization noise variances of
    the compressed observations forwarded by receivers k and q; ``+inf`` means
    the compressed copy is pure noise, i.e. compression is switched off.

    The total-power budgets (unit budget per node) are

        rho_x + rho_xl*rho_ak**2 + rho_u*(rho_al*rho_ak)**2 <= 1
        rho_xl + rho_u*rho_al**2 <= 1
        rho_xk + rho_u*rho_bl**2 <= 1

    Range violations raise ValueError immediately; the budget inequalities are
    enforced by :func:`check_power` / :func:`build_sigma` with tolerance
    ``POWER_TOL``.
    """

    rho_u: float = 0.0
    rho_xl: float = 1.0
    rho_al: float = 0.0
    rho_x: float = 1.0
    rho_ak: float = 0.0
    rho_xk: float = 1.0
    rho_bl: float = 0.0
    rho_xq: float = 1.0
    theta_al: float = 0.0
    theta_ak: float = 0.0
    theta_bl: float = 0.0
    delta_k: float = np.inf
    delta_q: float = np.inf

    def __post_init__(self):
        for name in PARAM_NAMES[:8]:
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} outside [0, 1]")
            object.__setattr__(self, name, v)
        for name in PARAM_NAMES[8:11]:
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v % TWO_PI)
        for name in ("delta_k", "delta_q"):
            v = float(getattr(self, name))
            if np.isnan(v) or v <= 0.0:
                raise ValueError(f"{name} must be > 0 (may be +inf)")
            object.__setattr__(self, name, v)

    def to_array(self) -> np.ndarray:
        """Parameters as a length-13 vector in ``PARAM_NAMES`` order."""
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, vec) -> "StrategyParams":
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.shape != (len(PARAM_NAMES),):
            raise ValueError(f"expected {len(PARAM_NAMES)} entries, got {vec.shape}")
        return cls(**dict(zip(PARAM_NAMES, vec)))

    def replace(self, **changes) -> "StrategyParams":
        vals = {n: getattr(self, n) for n in PARAM_NAMES}
        vals.update(changes)
        return StrategyParams(**vals)


@dataclass(frozen=True)
class TermIngredients:
    """Scalar link aggregates entering the closed-form rate terms.

    For decoding order (l, k, q) with direct SNRs S_* and cooperation SNRs
    C_src,dst, writing rho_* for the entries of :class:`StrategyParams`:

    gamma_r  = S_r * rho_x                      (r in {l, k, q}); the fresh
               transmit layer seen at receiver r once everything else is known,
    kappa_l  = gamma_l + C_kl * rho_xk          (+ k's relay codeword),
    lambda_l = gamma_l + C_ql * rho_xq          (+ q's codeword),
    beta_l   = gamma_l + C_kl * rho_xk + C_ql * rho_xq,
    kappa_k  = gamma_k + C_qk * rho_xq,
    beta_k   = everything unresolved at k knowing (U, X_k), including the
               coherent cross term between X and X_l,
    beta_q_prime = everything unresolved at q knowing only X_q, including all
               coherent cross terms through the cloud center,
    r_k, r_q = capacity(1/delta): rate spent describing the compression noise
               of receiver k's (resp. q's) forwarded observation.
    """

    gamma_l: float
    gamma_k: float
    gamma_q: float
    kappa_l: float
    kappa_k: float
    lambda_l: float
    beta_l: float
    beta_k: float
    beta_q_prime: float
    r_k: float
    r_q: float


def r_loss(delta):
    """Compression-rate penalty capacity(1/delta) = log2(1 + 1/delta).

    delta is the quantization noise variance, in (0, +inf]; elementwise on
    arrays.  r_loss(1) = 1, r_loss(1/3) = 2, r_loss(inf) = 0.
    """
    arr = np.asarray(delta, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0.0):
        raise ValueError("delta must be > 0 (may be +inf)")
    with np.errstate(divide="ignore"):
        out = capacity(np.where(np.isinf(arr), 0.0, 1.0 / arr))
    return out if arr.ndim else float(out)


def check_power(p: StrategyParams, tol: float = POWER_TOL) -> None:
    """Raise :class:`InfeasibleParamsError` if a power budget is exceeded."""
    slacks = _power_slack(p.to_array()[None, :])
    for name, slack in zip(("x", "xl", "xk"), slacks[0]):
        if slack < -tol:
            raise InfeasibleParamsError(name, -float(slack))


def _power_slack(pmat: np.ndarray) -> np.ndarray:
    """Budget minus allocated power, shape (N, 3) for the x/xl/xk budgets."""
    rho_u, rho_xl, rho_al, rho_x, rho_ak, rho_xk, rho_bl = pmat[:, :7].T
    used_x = rho_x + rho_xl * rho_ak**2 + rho_u * (rho_al * rho_ak) ** 2
    used_xl = rho_xl + rho_u * rho_al**2
    used_xk = rho_xk + rho_u * rho_bl**2
    return 1.0 - np.stack([used_x, used_xl, used_xk], axis=1)


def feasible_mask(pmat: np.ndarray, tol: float = POWER_TOL) -> np.ndarray:
    """Boolean mask of rows of an (N, 13) parameter matrix meeting the budgets."""
    return np.all(_power_slack(pmat) >= -tol, axis=1)


def build_sigma(p: StrategyParams, power: float = 1.0, check: bool = True) -> np.ndarray:
    """Covariance of the layered input vector (U, X, X_l, X_k, X_q).

    Returns a 5x5 complex Hermitian PSD matrix.  ``power`` is the per-node
    transmit budget P; with ``check=True`` (default) the X/X_l/X_k diagonal
    entries are verified against it.  The construction is a Gram matrix of
    independent layers, so the result is PSD for any magnitudes in [0, 1],
    even power-infeasible ones (useful for diagnostics with ``check=False``).
    """
    if power <= 0:
        raise ValueError("power must be > 0")
    if check:
        check_power(p)
    a_l = p.rho_al * np.exp(1j * p.theta_al)
    a_k = p.rho_ak * np.exp(1j * p.theta_ak)
    b_l = p.rho_bl * np.exp(1j * p.theta_bl)

    # Layer loadings: rows (U, X, X_l, X_k, X_q) over the independent fresh
    # layers (U, X', X_l', X_k', X_q) with variances (rho_u, rho_x, rho_xl,
    # rho_xk, rho_xq).  X_l = X_l' + A_l U, X = X' + A_k X_l, X_k = X_k' + B_l U.
    load = np.zeros((5, 5), dtype=complex)
    load[0, 0] = 1.0
    load[2, 0] = a_l
    load[2, 2] = 1.0
    load[1, 0] = a_k * a_l
    load[1, 1] = 1.0
    load[1, 2] = a_k
    load[3, 0] = b_l
    load[3, 3] = 1.0
    load[4, 4] = 1.0
    fresh = np.array([p.rho_u, p.rho_x, p.rho_xl, p.rho_xk, p.rho_xq])
    sigma = power * (load * fresh) @ load.conj().T
    # U carries no phase of its own: rotate so Q(U, X_l) = |Q| e^{-j theta_al}
    # etc. -- already encoded through the conjugate-transposed loadings.
    return sigma


def identity_cap_ok(sigma: np.ndarray, power: float = 1.0, tol: float = 1e-9) -> bool:
    """Whether the input covariance also satisfies the stronger cap Sigma <= P*I.

    The closed-form term evaluators only require per-node budgets (diagonal
    <= P); this flags points where the spectral cap would fail.  The codebook
    construction that the optimizers search draws all layers from a common
    unit-power pool, so their returned parameter points always pass this.
    """
    return bool(np.linalg.eigvalsh(sigma).max() <= power * (1.0 + tol))


def sigma_batch(pmat: np.ndarray, power: float = 1.0) -> np.ndarray:
    """Vectorized :func:`build_sigma` over an (N, 13) parameter matrix.

    Returns (N, 5, 5) complex covariances of (U, X, X_l, X_k, X_q).  No
    feasibility check is performed; rows may violate the power budgets.
    """
    pmat = np.atleast_2d(np.asarray(pmat, dtype=float))
    n = pmat.shape[0]
    a_l = pmat[:, 2] * np.exp(1j * pmat[:, 8])
    a_k = pmat[:, 4] * np.exp(1j * pmat[:, 9])
    b_l = pmat[:, 6] * np.exp(1j * pmat[:, 10])
    load = np.zeros((n, 5, 5), dtype=complex)
    load[:, 0, 0] = 1.0
    load[:, 2, 0] = a_l
    load[:, 2, 2] = 1.0
    load[:, 1, 0] = a_k * a_l
    load[:, 1, 1] = 1.0
    load[:, 1, 2] = a_k
    load[:, 3, 0] = b_l
    load[:, 3, 3] = 1.0
    load[:, 4, 4] = 1.0
    fresh = pmat[:, (0, 3, 1, 5, 7)]  # variances of (U, X', X_l', X_k', X_q)
    return power * np.einsum("nif,nf,njf->nij", load, fresh, load.conj())


#: pmat columns holding fresh-layer variances; the layered covariance is
#: linear in these, so scaling them scales the covariance spectrum.
_FRESH_COLUMNS = (0, 1, 3, 5, 7)


def scale_to_identity_cap(pmat: np.ndarray, power: float = 1.0) -> np.ndarray:
    """Shrink fresh-layer powers until the layered covariance fits Sigma <= P*I.

    The covariance is linear in the five fresh-layer variances with the
    coupling magnitudes and phases held fixed, so dividing them by the excess
    spectral radius lands exactly on the cap (which in turn implies every
    per-node diagonal budget).  Rows already inside the cap are untouched.
    Returns a rescaled copy of the (N, 13) parameter matrix.
    """
    pmat = np.atleast_2d(np.asarray(pmat, dtype=float))
    lam = np.linalg.eigvalsh(sigma_batch(pmat, power))[:, -1]
    t = np.where(lam > power, power / np.maximum(lam, power), 1.0)
    out = pmat.copy()
    out[:, _FRESH_COLUMNS] *= t[:, None]
    return out


def ingredients_batch(ch: ChannelConfig, s: SubStrategy, pmat: np.ndarray) -> dict:
    """Vectorized :func:`ingredients` over an (N, 13) parameter matrix.

    No feasibility check is performed here; callers mask infeasible rows.
    Returns a dict of (N,) arrays keyed by TermIngredients field names, plus
    the raw ``delta_k``/``delta_q`` columns for the quantized-copy discounts.
    """
    s_l, s_k, s_q = (ch.main(r) for r in s.as_tuple())
    c_kl = ch.coop(s.k, s.l)
    c_ql = ch.coop(s.q, s.l)
    c_lk = ch.coop(s.l, s.k)
    c_qk = ch.coop(s.q, s.k)
    c_lq = ch.coop(s.l, s.q)
    c_kq = ch.coop(s.k, s.q)

    rho_u, rho_xl, rho_al, rho_x, rho_ak, rho_xk, rho_bl, rho_xq = pmat[:, :8].T
    theta_al, theta_ak, theta_bl = pmat[:, 8:11].T
    delta_k, delta_q = pmat[:, 11], pmat[:, 12]

    gamma_l = s_l * rho_x
    gamma_k = s_k * rho_x
    gamma_q = s_q * rho_x
    kappa_l = gamma_l + c_kl * rho_xk
    lambda_l = gamma_l + c_ql * rho_xq
    kappa_k = gamma_k + c_qk * rho_xq
    beta_l = gamma_l + c_kl * rho_xk + c_ql * rho_xq

    cloud_l = rho_u * rho_al**2  # cloud power inside X_l
    cloud_k = rho_u * rho_bl**2  # cloud power inside X_k
    cross_x_xl = rho_xl * rho_ak + cloud_l * rho_ak  # |Q(X, X_l)| / P

    beta_k = (
        s_k * (rho_x + rho_xl * rho_ak**2)
        + c_lk * rho_xl
        + c_qk * rho_xq
        + 2.0 * np.sqrt(s_k * c_lk) * rho_xl * rho_ak * np.cos(theta_ak)
    )
    beta_q_prime = (
        s_q * (rho_x + (rho_xl + cloud_l) * rho_ak**2)
        + c_lq * (rho_xl + cloud_l)
        + c_kq * (rho_xk + cloud_k)
        + 2.0 * np.sqrt(s_q * c_lq) * cross_x_xl * np.cos(theta_ak)
        + 2.0
        * np.sqrt(s_q * c_kq)
        * rho_u
        * rho_al
        * rho_ak
        * rho_bl
        * np.cos(theta_al + theta_ak - theta_bl)
        + 2.0 * np.sqrt(c_lq * c_kq) * rho_u * rho_al * rho_bl * np.cos(theta_al - theta_bl)
    )

    return {
        "gamma_l": gamma_l,
        "gamma_k": gamma_k,
        "gamma_q": gamma_q,
        "kappa_l": kappa_l,
        "kappa_k": kappa_k,
        "lambda_l": lambda_l,
        "beta_l": beta_l,
        "beta_k": beta_k,
        "beta_q_prime": beta_q_prime,
        "r_k": r_loss(delta_k),
        "r_q": r_loss(delta_q),
        "delta_k": delta_k,
        "delta_q": delta_q,
    }


def ingredients(ch: ChannelConfig, s: SubStrategy, p: StrategyParams) -> TermIngredients:
    """Link aggregates for one decoding order and one feasible parameter point."""
    check_power(p)
    batch = ingredients_batch(ch, s, p.to_array()[None, :])
    fields = TermIngredients.__dataclass_fields__
    return TermIngredients(**{name: float(batch[name][0]) for name in fields})
