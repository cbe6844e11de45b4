"""Deterministic multi-start maximization of the rate bounds.

The bounds are nonsmooth (minima of several concave terms) but cheap to batch,
so the workhorse is a coordinate pattern search run in lockstep over many
start points: every iteration polls +/- one step along each coordinate for
every active start, takes the best improvement per start, and halves the step
where nothing improved.  After a start first stalls its step is re-expanded
once, which reliably escapes poll-bound corners of min-term objectives.

Start points come from :func:`seeded_starts`: a fixed list of structured
corners followed by a scrambled Sobol sequence.  Identical seeds give
identical start lists, the first ``n`` points of a ``2n``-point list are the
``n``-point list, and every trajectory is independent of the others -- so
rerunning with more starts can only improve the result.

Search coordinates are not raw strategy parameters: power splits are encoded
as *fill fractions* of the remaining budget and then rescaled onto the shared
power pool's spectral cap, so every box point decodes to a feasible codebook;
quantization noises live on a log10 scale and coupling phases wrap around.
The cutset covariance is parametrized through per-receiver correlation
coefficients with the transmit codeword, which keeps it positive semidefinite
with a pinned diagonal by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from . import bounds as _bounds
from .bounds import BoundResult
from .channel import ChannelConfig
from .gaussian import PARAM_NAMES, StrategyParams, SubStrategy, scale_to_identity_cap

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the deterministic multi-start search.

    starts          : number of start points (structured corners + Sobol).
    max_iters       : hard cap on poll iterations per sub-problem.
    tol             : target accuracy; the per-coordinate step shrinks to
                      tol/100 of the box before a start is considered done.
    seed            : seed of the scrambled Sobol start sequence.
    delta_log_range : log10 search window for quantization noise variances.
    """

    starts: int = 64
    max_iters: int = 2000
    tol: float = 1e-4
    seed: int = 0
    delta_log_range: tuple[float, float] = (-6.0, 6.0)

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tol must be in (0, 1)")
        lo, hi = self.delta_log_range
        if not lo < hi:
            raise ValueError("delta_log_range must be increasing")


@dataclass(frozen=True)
class SearchSpace:
    """A box of internal search coordinates plus its decoding rule.

    lower/upper : box bounds, shape (D,).
    wrap        : boolean mask of coordinates that wrap around (phases).
    corners     : structured start points in internal coordinates; the first
                  one is the canonical "no-correlation" point of the space.
    decode      : maps an (N, D) block of internal points to whatever the
                  matching batch evaluator consumes.
    """

    name: str
    lower: np.ndarray
    upper: np.ndarray
    wrap: np.ndarray
    corners: tuple
    decode: Callable

    @property
    def dim(self) -> int:
        return self.lower.size


def seeded_starts(space: SearchSpace, n: int, seed: int) -> np.ndarray:
    """The first ``n`` start points of a space: corners, then Sobol fill.

    Deterministic given (space, n, seed) and prefix-stable: increasing ``n``
    appends points without changing earlier ones.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    corners = np.array(space.corners, dtype=float)[: min(n, len(space.corners))]
    n_fill = n - len(corners)
    if n_fill == 0:
        return corners
    sampler = qmc.Sobol(d=space.dim, scramble=True, seed=seed)
    draw = sampler.random(int(2 ** np.ceil(np.log2(max(2, n_fill)))))[:n_fill]
    fill = space.lower + draw * (space.upper - space.lower)
    return np.vstack([corners, fill])


def _snap(space: SearchSpace, x: np.ndarray) -> np.ndarray:
    """Clip box coordinates; wrap phase coordinates."""
    out = np.clip(x, space.lower, space.upper)
    if space.wrap.any():
        w = space.wrap
        span = space.upper[w] - space.lower[w]
        out[..., w] = space.lower[w] + (x[..., w] - space.lower[w]) % span
    return out


def optimize(
    objective: Callable[[np.ndarray], np.ndarray],
    space: SearchSpace,
    cfg: OptimizerConfig,
    extra_starts: Sequence[np.ndarray] = (),
) -> tuple[np.ndarray, float]:
    """Maximize a batch objective over the space; returns (best_x, best_value).

    ``objective`` maps (N, D) internal points to (N,) values and may return
    -inf for infeasible points.  ``extra_starts`` (e.g. warm starts from a
    neighbouring sweep point) are appended after the seeded starts.
    """
    starts = seeded_starts(space, cfg.starts, cfg.seed)
    if len(extra_starts):
        starts = np.vstack([starts] + [_snap(space, np.asarray(x, float)) for x in extra_starts])
    x = _snap(space, starts.copy())
    v = objective(x)
    span = space.upper - space.lower
    step = np.full_like(x, 0.25) * span
    # phase 0 -> first stall -> re-expand once (phase 1) -> second stall -> done
    phase = np.zeros(len(x), dtype=int)
    done = np.zeros(len(x), dtype=bool)
    step_floor = max(cfg.tol * 1e-2, 1e-12)

    d = space.dim
    for _ in range(cfg.max_iters):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        xa, va, sa = x[act], v[act], step[act]
        cand = np.repeat(xa[:, None, :], 2 * d, axis=1)
        for j in range(d):
            cand[:, 2 * j, j] += sa[:, j]
            cand[:, 2 * j + 1, j] -= sa[:, j]
        cand = _snap(space, cand.reshape(-1, d)).reshape(len(act), 2 * d, d)
        vals = objective(cand.reshape(-1, d)).reshape(len(act), 2 * d)
        pick = np.argmax(vals, axis=1)
        best = vals[np.arange(len(act)), pick]
        moved = best > va
        x[act[moved]] = cand[moved, pick[moved]]
        v[act[moved]] = best[moved]
        step[act[~moved]] *= 0.5
        stalled = (step[act] / span).max(axis=1) < step_floor
        fresh_stall = stalled & ~moved
        # first stall: re-expand and keep going; second stall: finished
        expand = fresh_stall & (phase[act] == 0)
        finish = fresh_stall & (phase[act] == 1)
        step[act[expand]] = 0.05 * span
        phase[act[expand]] = 1
        done[act[finish]] = True

    best = int(np.argmax(v))
    return x[best].copy(), float(v[best])


# ---------------------------------------------------------------------------
# strategy-parameter spaces (2RC / 3PC / 3FC)

# internal coordinate layout per scheme: magnitudes and budget fills first,
# then phases (wrapping), then log10 quantization noises.
_AXES = {
    "3fc": ("rho_u", "rho_al", "rho_ak", "rho_bl", "fill_xl", "fill_x", "fill_xk",
            "rho_xq", "theta_al", "theta_ak", "theta_bl", "log_delta_k", "log_delta_q"),
    "3pc": ("rho_u", "rho_al", "rho_ak", "rho_bl", "fill_xl", "fill_x", "fill_xk",
            "theta_al", "theta_ak", "theta_bl", "log_delta_k"),
    "2rc": ("rho_ak", "fill_xl", "fill_x", "rho_xk", "theta_ak", "log_delta_k"),
}


def _axis_bounds(axis: str, cfg: OptimizerConfig):
    if axis.startswith("theta"):
        return 0.0, TWO_PI, True
    if axis.startswith("log_delta"):
        lo, hi = cfg.delta_log_range
        return lo, hi, False
    return 0.0, 1.0, False


def _decode_strategy(zmat: np.ndarray, axes: tuple, cfg: OptimizerConfig) -> np.ndarray:
    """Internal coordinates -> (N, 13) StrategyParams rows on the shared pool.

    Budget fills keep every row inside the per-node power budgets; the final
    rescale then shrinks fresh-layer powers onto the joint spectral cap
    Sigma <= P*I, the feasible set of the layered codebook construction.
    Decoded rows are therefore always feasible for both.
    """
    col = {name: zmat[:, i] for i, name in enumerate(axes)}
    n = zmat.shape[0]
    zero = np.zeros(n)
    one = np.ones(n)
    rho_u = col.get("rho_u", zero)
    rho_al = col.get("rho_al", zero)
    rho_ak = col["rho_ak"]
    rho_bl = col.get("rho_bl", zero)
    cloud_l = rho_u * rho_al**2
    cloud_k = rho_u * rho_bl**2
    rho_xl = col["fill_xl"] * (1.0 - cloud_l)
    rho_x = col["fill_x"] * (1.0 - rho_xl * rho_ak**2 - cloud_l * rho_ak**2)
    rho_xk = col["rho_xk"] if "rho_xk" in col else col["fill_xk"] * (1.0 - cloud_k)
    rho_xq = col.get("rho_xq", zero if "log_delta_q" not in axes else one)
    hi = cfg.delta_log_range[1]
    out = np.empty((n, len(PARAM_NAMES)))
    out[:, 0] = rho_u
    out[:, 1] = rho_xl
    out[:, 2] = rho_al
    out[:, 3] = rho_x
    out[:, 4] = rho_ak
    out[:, 5] = rho_xk
    out[:, 6] = rho_bl
    out[:, 7] = rho_xq
    out[:, 8] = col.get("theta_al", zero)
    out[:, 9] = col["theta_ak"]
    out[:, 10] = col.get("theta_bl", zero)
    out[:, 11] = 10.0 ** col["log_delta_k"]
    out[:, 12] = 10.0 ** col.get("log_delta_q", np.full(n, hi))
    return scale_to_identity_cap(out)


def _encode_strategy(p: StrategyParams, axes: tuple, cfg: OptimizerConfig) -> np.ndarray:
    """Best-effort inverse of :func:`_decode_strategy` for warm starts."""
    lo, hi = cfg.delta_log_range

    def safe_fill(num, denom):
        return float(np.clip(num / denom, 0.0, 1.0)) if denom > 1e-12 else 0.0

    cloud_l = p.rho_u * p.rho_al**2
    cloud_k = p.rho_u * p.rho_bl**2
    vals = {
        "rho_u": p.rho_u,
        "rho_al": p.rho_al,
        "rho_ak": p.rho_ak,
        "rho_bl": p.rho_bl,
        "fill_xl": safe_fill(p.rho_xl, 1.0 - cloud_l),
        "fill_x": safe_fill(p.rho_x, 1.0 - (p.rho_xl + cloud_l) * p.rho_ak**2),
        "fill_xk": safe_fill(p.rho_xk, 1.0 - cloud_k),
        "rho_xk": p.rho_xk,
        "rho_xq": p.rho_xq,
        "theta_al": p.theta_al,
        "theta_ak": p.theta_ak,
        "theta_bl": p.theta_bl,
        "log_delta_k": float(np.clip(np.log10(p.delta_k), lo, hi)),
        "log_delta_q": float(np.clip(np.log10(p.delta_q), lo, hi)),
    }
    return np.array([vals[a] for a in axes])


def strategy_space(scheme: str, cfg: OptimizerConfig) -> SearchSpace:
    """Search space of an interactive scheme's strategy parameters."""
    axes = _AXES[scheme]
    lo_hi_wrap = [_axis_bounds(a, cfg) for a in axes]
    lower = np.array([b[0] for b in lo_hi_wrap])
    upper = np.array([b[1] for b in lo_hi_wrap])
    wrap = np.array([b[2] for b in lo_hi_wrap])
    hi = cfg.delta_log_range[1]

    def corner(**overrides):
        base = {a: 0.0 for a in axes}
        for a in axes:
            if a.startswith("fill") or a in ("rho_xq", "rho_xk"):
                base[a] = 1.0
            if a.startswith("log_delta"):
                base[a] = hi
        base.update(overrides)
        return np.array([base[a] for a in axes])

    corners = [
        corner(rho_u=1.0) if "rho_u" in axes else corner(),  # no correlation
        corner(**{a: 1.0 for a in axes if a.startswith("rho")}),  # full DF
        corner(rho_u=1.0, **{a: 0.0 for a in axes if a.startswith("log_delta")}),
        corner(rho_u=1.0, **{a: -2.0 for a in axes if a.startswith("log_delta")}),
    ] if "rho_u" in axes else [
        corner(),
        corner(rho_ak=1.0),
        corner(**{a: 0.0 for a in axes if a.startswith("log_delta")}),
        corner(**{a: -2.0 for a in axes if a.startswith("log_delta")}),
    ]

    return SearchSpace(
        name=scheme,
        lower=lower,
        upper=upper,
        wrap=wrap,
        corners=tuple(corners),
        decode=lambda z: _decode_strategy(np.asarray(z, float), axes, cfg),
    )


def _optimize_scheme(
    ch: ChannelConfig,
    scheme: str,
    orders: Sequence[SubStrategy],
    cfg: OptimizerConfig,
    warm: Optional[BoundResult],
    evaluate,
) -> BoundResult:
    space = strategy_space(scheme, cfg)
    axes = _AXES[scheme]
    best: Optional[BoundResult] = None
    for s in orders:
        extra = []
        if warm is not None and warm.strategy is not None and isinstance(warm.params, StrategyParams):
            if warm.strategy.as_tuple() == s.as_tuple():
                extra.append(_encode_strategy(warm.params, axes, cfg))
        objective = lambda z, s=s: _bounds.strategy_values_batch(ch, s, space.decode(z), scheme)
        x, _ = optimize(objective, space, cfg, extra_starts=extra)
        params = StrategyParams.from_array(space.decode(x[None, :])[0])
        result = evaluate(ch, s, params)
        if best is None or result.value > best.value:
            best = result
    return best


def optimize_3fc(
    ch: ChannelConfig, cfg: Optional[OptimizerConfig] = None, warm: Optional[BoundResult] = None
) -> BoundResult:
    """Best fully interactive rate over all six decoding orders and parameters.

    ``warm`` (a previous BoundResult for this or a related scheme, e.g. the
    3-receiver partially interactive optimum) adds one extra start to the
    matching decoding order.
    """
    cfg = cfg or OptimizerConfig()
    return _optimize_scheme(ch, "3fc", SubStrategy.all(), cfg, warm, _bounds.evaluate_3fc)


def optimize_3pc(
    ch: ChannelConfig, cfg: Optional[OptimizerConfig] = None, warm: Optional[BoundResult] = None
) -> BoundResult:
    """Best partially interactive rate over decoding orders and parameters."""
    cfg = cfg or OptimizerConfig()
    return _optimize_scheme(ch, "3pc", SubStrategy.all(), cfg, warm, _bounds.evaluate_3pc)


def optimize_2rc(
    ch: ChannelConfig,
    cfg: Optional[OptimizerConfig] = None,
    warm: Optional[BoundResult] = None,
    pair: Optional[tuple[int, int]] = None,
) -> BoundResult:
    """Best two-receiver-session rate; all six ordered pairs unless one is given."""
    cfg = cfg or OptimizerConfig()
    if pair is None:
        orders = [s for s in SubStrategy.all()]
    else:
        orders = [SubStrategy.from_pair(*pair)]
    evaluate = lambda c, s, p: _bounds.evaluate_2rc(c, (s.l, s.k), p)
    return _optimize_scheme(ch, "2rc", orders, cfg, warm, evaluate)


def nnc_space(cfg: OptimizerConfig) -> SearchSpace:
    """Log10 box of the single compression noise shared by all receivers.

    Each receiver quantizes its observation with the same noise variance;
    decoding broadcasts the scalar into the per-receiver triple the batch
    evaluator consumes.  (Per-receiver noises remain available through
    :func:`mcbounds.bounds.evaluate_nnc` directly.)
    """
    lo, hi = cfg.delta_log_range
    return SearchSpace(
        name="nnc",
        lower=np.array([lo]),
        upper=np.array([hi]),
        wrap=np.zeros(1, dtype=bool),
        corners=(np.array([hi]), np.array([0.0]), np.array([lo])),
        decode=lambda z: np.repeat(10.0 ** np.asarray(z, float), 3, axis=1),
    )


def optimize_nnc(
    ch: ChannelConfig, cfg: Optional[OptimizerConfig] = None, warm: Optional[BoundResult] = None
) -> BoundResult:
    """Best noisy-network-coding rate over the shared compression noise."""
    cfg = cfg or OptimizerConfig()
    space = nnc_space(cfg)
    extra = []
    if warm is not None and isinstance(warm.params, np.ndarray) and warm.params.shape == (3,):
        lo, hi = cfg.delta_log_range
        logs = np.log10(np.clip(warm.params.astype(float), 10.0**lo, 10.0**hi))
        extra.append(np.array([logs.mean()]))
    objective = lambda z: _bounds.nnc_values_batch(ch, space.decode(z))
    x, _ = optimize(objective, space, cfg, extra_starts=extra)
    return _bounds.evaluate_nnc(ch, space.decode(x[None, :])[0])


def _factor_coeffs(zmat: np.ndarray) -> np.ndarray:
    """(N, 6) magnitude/phase coordinates -> (N, 3) complex factor loadings."""
    zmat = np.asarray(zmat, dtype=float)
    return zmat[:, :3] * np.exp(1j * zmat[:, 3:6])


def _q_source_factor(c: np.ndarray) -> np.ndarray:
    """Covariances with every relay codeword loaded on the transmit codeword.

    X_j = c_j * X + independent remainder, so Q(X_j, X) = c_j and the
    receiver pair correlations follow as c_i * conj(c_j).  Unit diagonal and
    positive semidefiniteness hold by construction for |c_j| <= 1.
    """
    n = c.shape[0]
    q = np.zeros((n, 4, 4), dtype=complex)
    q[:, range(4), range(4)] = 1.0
    q[:, 1:, 0] = c
    q[:, 0, 1:] = c.conj()
    pair = c[:, :, None] * c.conj()[:, None, :]
    pair[:, range(3), range(3)] = 1.0
    q[:, 1:, 1:] = pair
    return q


def _q_receiver_factor(e: np.ndarray) -> np.ndarray:
    """Covariances with the relay codewords loaded on a factor the transmit
    codeword does not see: X_j = e_j * W + independent remainder, X unit and
    independent.  Complements :func:`_q_source_factor`: it can correlate the
    receivers without spending any transmit-codeword coherence.
    """
    n = e.shape[0]
    q = np.zeros((n, 4, 4), dtype=complex)
    q[:, range(4), range(4)] = 1.0
    pair = e[:, :, None] * e.conj()[:, None, :]
    pair[:, range(3), range(3)] = 1.0
    q[:, 1:, 1:] = pair
    return q


def cutset_spaces(cfg: OptimizerConfig) -> tuple[SearchSpace, SearchSpace]:
    """The two cutset covariance branches searched by :func:`optimize_cutset`.

    Each is a 6-coordinate box (three loading magnitudes in [0, 1] and three
    phases) decoding into unit-diagonal PSD covariances: one loads the relay
    codewords on the transmit codeword (coherent beamforming toward the weak
    receiver), the other on a receiver-only common factor (conferencing gains
    that leave the broadcast cut untouched).  Restricting to these structured
    branches keeps every decoded point feasible without rejection sampling.
    """
    lower = np.zeros(6)
    upper = np.concatenate([np.ones(3), np.full(3, TWO_PI)])
    wrap = np.concatenate([np.zeros(3, bool), np.ones(3, bool)])
    corners = (
        np.zeros(6),  # independent inputs
        np.concatenate([np.ones(3), np.zeros(3)]),  # fully loaded
        np.concatenate([np.full(3, 0.5), np.zeros(3)]),
    )
    common = dict(lower=lower, upper=upper, wrap=wrap, corners=corners)
    return (
        SearchSpace(name="cutset_source_factor",
                    decode=lambda z: _q_source_factor(_factor_coeffs(z)), **common),
        SearchSpace(name="cutset_receiver_factor",
                    decode=lambda z: _q_receiver_factor(_factor_coeffs(z)), **common),
    )


def _factor_warm(q: np.ndarray) -> list[np.ndarray]:
    """Project a covariance onto both factor branches for warm starts."""
    coords = []
    c = q[1:, 0]
    coords.append(np.concatenate([np.abs(c).clip(max=1.0), np.angle(c) % TWO_PI]))
    # receiver-factor magnitudes from the pair products e_i*e_j when resolvable
    r = np.abs([q[2, 3], q[1, 3], q[1, 2]])  # (e2*e3, e1*e3, e1*e2)
    e = np.zeros(3)
    if np.all(r > 1e-12):
        prod = np.sqrt(r[0] * r[1] * r[2])  # e1*e2*e3
        e = np.clip(prod / r, 0.0, 1.0)
    coords.append(np.concatenate([e, np.zeros(3)]))
    return coords


def optimize_cutset(
    ch: ChannelConfig, cfg: Optional[OptimizerConfig] = None, warm: Optional[BoundResult] = None
) -> BoundResult:
    """Tightest cutset bound over the two structured covariance branches."""
    cfg = cfg or OptimizerConfig()
    warm_coords = []
    if warm is not None and isinstance(warm.params, np.ndarray) and warm.params.shape == (4, 4):
        warm_coords = _factor_warm(warm.params)
    best = None
    for space in cutset_spaces(cfg):
        objective = lambda z, d=space.decode: _bounds.cutset_values_batch(ch, d(z))
        x, _ = optimize(objective, space, cfg, extra_starts=warm_coords)
        result = _bounds.evaluate_cutset(ch, space.decode(x[None, :])[0])
        if best is None or result.value > best.value:
            best = result
    return best
