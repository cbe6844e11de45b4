"""Rate bounds for the three-receiver multicast channel with cooperation.

Evaluators (all in bit/s/Hz, all taking a :class:`~mcbounds.channel.ChannelConfig`):

* :func:`no_coop_rate`      -- weakest-receiver baseline min_r capacity(SNR_r).
* :func:`evaluate_2rc`      -- two-receiver session: one compress-and-forward
  round towards the first decoder, then decode-and-forward to the second.
* :func:`evaluate_3pc`      -- partially interactive three-receiver scheme
  (no compressed feedback from the last receiver).
* :func:`evaluate_3fc`      -- fully interactive three-receiver scheme; the
  rate is the minimum of the 13 terms listed in ``TERM_LABELS_3FC``.
* :func:`evaluate_nnc`      -- noisy network coding with independent inputs
  and one compression noise per receiver.
* :func:`evaluate_cutset`   -- cutset upper bound for a given input covariance.

Each evaluator returns a :class:`BoundResult` whose ``active_term`` names the
binding minimum (ties resolve to the lowest-indexed label).  ``*_batch``
variants evaluate (N, ...) parameter stacks in one vectorized pass; they are
the kernels behind both the scalar API and the optimizer, so a scalar call and
a batch row produce bit-identical values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ChannelConfig, capacity
from .errors import InfeasibleParamsError
from .gaussian import (
    StrategyParams,
    SubStrategy,
    check_power,
    feasible_mask,
    ingredients_batch,
    r_loss,
)

_INV_LN2 = 1.0 / np.log(2.0)

#: The 13 minimum-terms of the fully interactive scheme, in canonical order.
#: dk/dq denote the quantized-copy discounts 1/(1+delta_k) and 1/(1+delta_q);
#: cap() is capacity(); rk/rq are the compression penalties r_loss(delta).
#:
#: T1  cap(beta_q_prime)
#: T2  (cap(gamma_l + gamma_k*dk) + cap(gamma_l + gamma_q*dq)
#:      + cap(beta_l) - cap(gamma_l) - rk - rq) / 2
#: T3  (cap(gamma_l + gamma_q*dq) + cap(gamma_k) + cap(beta_k) - cap(kappa_k)
#:      + cap(beta_l) - cap(gamma_l) - rk - rq) / 2
#: T4  cap(gamma_l + gamma_q*dq) + cap(kappa_l) - cap(gamma_l) - rk
#: T5  cap(gamma_l + gamma_k*dk) + cap(lambda_l) - cap(gamma_l) - rq
#: T6  cap(gamma_k) + cap(beta_k) - cap(kappa_k) + cap(lambda_l) - cap(gamma_l) - rq
#: T7  cap(gamma_l + gamma_k*dk) + cap(kappa_k) - cap(gamma_k) - rq
#: T8  cap(beta_k) - rq
#: T9  cap(kappa_l) + cap(lambda_l) - cap(gamma_l) - rk - rq
#: T10 cap(beta_l) - rk - rq
#: T11 cap(kappa_l) + cap(kappa_k) - cap(gamma_k) - rk - rq
#: T12 cap(gamma_l + gamma_k*dk + gamma_q*dq)
#: T13 cap(gamma_k + gamma_q*dq) + cap(beta_k) - cap(kappa_k)
TERM_LABELS_3FC = tuple(f"T{i}" for i in range(1, 14))

#: Terms of the partially interactive scheme:
#: P1 cap(beta_q_prime)                        (last receiver decodes the stack)
#: P2 cap(beta_k - kappa_k + gamma_k)          (second decoder, q's codeword known)
#: P3 cap(gamma_l + gamma_k*dk)                (first decoder with k's compressed copy)
#: P4 cap(kappa_l) - rk                        (first decoder pays the compression bill)
TERM_LABELS_3PC = ("P1", "P2", "P3", "P4")

#: Terms of the two-receiver session (same expressions as P2..P4).
TERM_LABELS_2RC = ("R1", "R2", "R3")


@dataclass(frozen=True)
class BoundResult:
    """Outcome of one bound evaluation or optimization.

    value       : rate in bit/s/Hz.
    active_term : label of the binding minimum term.
    strategy    : decoding order for the interactive schemes, else None.
    params      : whatever parameter object the bound consumes --
                  StrategyParams (2rc/3pc/3fc), length-3 compression-noise
                  vector (nnc), 4x4 input covariance (cutset), None (nc).
    terms       : all term values keyed by label, for diagnostics.
    """

    value: float
    active_term: str
    strategy: Optional[SubStrategy] = None
    params: object = None
    terms: Optional[dict] = field(default=None, repr=False)


@dataclass(frozen=True)
class CutSpec:
    """One network cut: ``source_side`` relays grouped with the transmitter.

    destination : receiver that must sit on the sink side.
    source_side : receivers cut off together with the transmitter (may be
                  empty; never contains the destination).
    """

    destination: int
    source_side: tuple[int, ...] = ()

    def __post_init__(self):
        if self.destination not in (1, 2, 3):
            raise ValueError("destination must be 1, 2 or 3")
        side = tuple(sorted(set(int(t) for t in self.source_side)))
        if not set(side) <= {1, 2, 3}:
            raise ValueError("source_side must contain receiver labels 1..3")
        if self.destination in side:
            raise ValueError("destination cannot be on the source side")
        object.__setattr__(self, "source_side", side)

    @property
    def sink_side(self) -> tuple[int, ...]:
        return tuple(r for r in (1, 2, 3) if r not in self.source_side)

    def label(self) -> str:
        return f"d{self.destination}:" + "+".join(
            ["tx"] + [str(t) for t in self.source_side]
        )


def _cap(x):
    # capacity() for internal term arithmetic: arguments are variances that can
    # round to tiny negatives, so clamp at zero instead of raising.
    return np.log1p(np.maximum(x, 0.0)) * _INV_LN2


# ---------------------------------------------------------------------------
# no cooperation


def no_coop_rate(ch: ChannelConfig) -> BoundResult:
    """Baseline without cooperation: min over receivers of capacity(SNR_r)."""
    rates = capacity(ch.snr_main)
    idx = int(np.argmin(rates))
    return BoundResult(
        value=float(rates[idx]),
        active_term=f"rx{idx + 1}",
        terms={f"rx{r + 1}": float(rates[r]) for r in range(3)},
    )


# ---------------------------------------------------------------------------
# interactive schemes (2RC / 3PC / 3FC)


def terms_3fc_batch(ing: dict) -> np.ndarray:
    """The 13 fully-interactive terms, shape (13, N), from an ingredient batch."""
    gl, gk, gq = ing["gamma_l"], ing["gamma_k"], ing["gamma_q"]
    kl, kk, ll = ing["kappa_l"], ing["kappa_k"], ing["lambda_l"]
    bl, bk, bq = ing["beta_l"], ing["beta_k"], ing["beta_q_prime"]
    rk, rq = ing["r_k"], ing["r_q"]
    dk = 1.0 / (1.0 + ing["delta_k"])
    dq = 1.0 / (1.0 + ing["delta_q"])

    c_gl = _cap(gl)
    c_gk = _cap(gk)
    c_bl = _cap(bl)
    c_bk = _cap(bk)
    c_kl = _cap(kl)
    c_kk = _cap(kk)
    c_ll = _cap(ll)
    c_l_k = _cap(gl + gk * dk)  # first decoder + k's compressed copy
    c_l_q = _cap(gl + gq * dq)  # first decoder + q's compressed copy
    c_l_kq = _cap(gl + gk * dk + gq * dq)
    c_k_q = _cap(gk + gq * dq)

    df_k = c_bk - c_kk  # second decoder's relay-resolution step

    return np.stack(
        [
            _cap(bq),
            0.5 * (c_l_k + c_l_q + c_bl - c_gl - rk - rq),
            0.5 * (c_l_q + c_gk + df_k + c_bl - c_gl - rk - rq),
            c_l_q + c_kl - c_gl - rk,
            c_l_k + c_ll - c_gl - rq,
            c_gk + df_k + c_ll - c_gl - rq,
            c_l_k + c_kk - c_gk - rq,
            c_bk - rq,
            c_kl + c_ll - c_gl - rk - rq,
            c_bl - rk - rq,
            c_kl + c_kk - c_gk - rk - rq,
            c_l_kq,
            c_k_q + df_k,
        ]
    )


def terms_3pc_batch(ing: dict) -> np.ndarray:
    """The 4 partially-interactive terms, shape (4, N)."""
    gl, gk = ing["gamma_l"], ing["gamma_k"]
    dk = 1.0 / (1.0 + ing["delta_k"])
    return np.stack(
        [
            _cap(ing["beta_q_prime"]),
            _cap(ing["beta_k"] - ing["kappa_k"] + gk),
            _cap(gl + gk * dk),
            _cap(ing["kappa_l"]) - ing["r_k"],
        ]
    )


def terms_2rc_batch(ing: dict) -> np.ndarray:
    """The 3 two-receiver-session terms, shape (3, N)."""
    return terms_3pc_batch(ing)[1:]


_SCHEME_TERMS = {
    "3fc": (terms_3fc_batch, TERM_LABELS_3FC),
    "3pc": (terms_3pc_batch, TERM_LABELS_3PC),
    "2rc": (terms_2rc_batch, TERM_LABELS_2RC),
}


def strategy_values_batch(
    ch: ChannelConfig, s: SubStrategy, pmat: np.ndarray, scheme: str
) -> np.ndarray:
    """Min-term values of an interactive scheme over an (N, 13) parameter stack.

    Power-infeasible rows map to -inf instead of raising.
    """
    kernel, _ = _SCHEME_TERMS[scheme]
    values = kernel(ingredients_batch(ch, s, pmat)).min(axis=0)
    return np.where(feasible_mask(pmat), values, -np.inf)


def _evaluate_strategy(ch, s, p, scheme) -> BoundResult:
    check_power(p)
    kernel, labels = _SCHEME_TERMS[scheme]
    terms = kernel(ingredients_batch(ch, s, p.to_array()[None, :]))[:, 0]
    idx = int(np.argmin(terms))  # ties resolve to the lowest index
    return BoundResult(
        value=float(terms[idx]),
        active_term=labels[idx],
        strategy=s,
        params=p,
        terms=dict(zip(labels, terms.tolist())),
    )


def evaluate_3fc(ch: ChannelConfig, s: SubStrategy, p: StrategyParams) -> BoundResult:
    """Fully interactive scheme: both later receivers compress-and-forward to
    the first decoder, then decode-and-forward refines k and finally q.

    Minimum of the 13 terms documented at ``TERM_LABELS_3FC``.  Setting
    ``delta_q=inf``, ``rho_xq=0`` and zero couplings through the cloud center
    reproduces :func:`evaluate_3pc` exactly.
    """
    return _evaluate_strategy(ch, s, p, "3fc")


def evaluate_3pc(ch: ChannelConfig, s: SubStrategy, p: StrategyParams) -> BoundResult:
    """Partially interactive scheme: no compressed feedback from receiver q.

    ``p.delta_q`` and ``p.rho_xq`` do not enter any term and are ignored.
    """
    return _evaluate_strategy(ch, s, p, "3pc")


def evaluate_2rc(ch: ChannelConfig, pair: tuple[int, int], p: StrategyParams) -> BoundResult:
    """Two-receiver session between ``pair = (l, k)``; the third receiver is
    ignored entirely (it neither decodes nor transmits usefully here).

    Requires the cloud center to be switched off: rho_u*rho_al and
    rho_u*rho_bl must both be zero (the session has no stale common message).
    """
    if p.rho_u * p.rho_al != 0.0 or p.rho_u * p.rho_bl != 0.0:
        raise ValueError(
            "two-receiver session requires rho_u*rho_al == rho_u*rho_bl == 0"
        )
    s = SubStrategy.from_pair(*pair)
    return _evaluate_strategy(ch, s, p, "2rc")


# ---------------------------------------------------------------------------
# noisy network coding

# Precomputed (destination, forwarding-set) pairs: for destination d the
# compressed observations of every receiver in T are decoded jointly with the
# message, paying r_loss(delta_j) for each j in T.
_NNC_CASES = tuple(
    (d, t)
    for d in (1, 2, 3)
    for t in itertools.chain(
        [()],
        itertools.combinations(tuple(r for r in (1, 2, 3) if r != d), 1),
        itertools.combinations(tuple(r for r in (1, 2, 3) if r != d), 2),
    )
)


def _nnc_label(d: int, t: tuple[int, ...]) -> str:
    return f"d{d}" + ("+" + "".join(str(j) for j in t) if t else "")


def nnc_term_values_batch(ch: ChannelConfig, dmat: np.ndarray) -> np.ndarray:
    """All 12 noisy-network-coding terms, shape (12, N), for (N, 3) noise stacks.

    Term (d, T): receivers outside T keep their raw/compressed observations on
    the sink side; the codewords of T are decoded together with the message:

        log2 det(I + G^T N^-1 G) - sum_{j in T} r_loss(delta_j)

    with G the gain matrix from (tx, T) into the sink-side observations and N
    the (quantization-augmented) noise variances.  Inputs are independent and
    full power.
    """
    dmat = np.asarray(dmat, dtype=float)
    n = dmat.shape[0]
    penalties = r_loss(dmat)  # (N, 3)
    out = np.empty((len(_NNC_CASES), n))
    for i, (d, t) in enumerate(_NNC_CASES):
        sink = tuple(r for r in (1, 2, 3) if r not in t)  # always contains d
        cols = (0,) + t
        gain = np.zeros((len(sink), len(cols)))
        for a, j in enumerate(sink):
            gain[a, 0] = np.sqrt(ch.main(j))
            for b, m in enumerate(t, start=1):
                gain[a, b] = np.sqrt(ch.coop(m, j))
        noise = np.ones((n, len(sink)))
        for a, j in enumerate(sink):
            if j != d:  # destination keeps its raw observation
                noise[:, a] = 1.0 + dmat[:, j - 1]
        gram = np.einsum("ri,nr,rj->nij", gain, 1.0 / noise, gain)
        gram[:, range(len(cols)), range(len(cols))] += 1.0
        _, logdet = np.linalg.slogdet(gram)
        out[i] = logdet * _INV_LN2 - penalties[:, [j - 1 for j in t]].sum(axis=1)
    return out


def nnc_values_batch(ch: ChannelConfig, dmat: np.ndarray) -> np.ndarray:
    """Min over the 12 terms, shape (N,)."""
    return nnc_term_values_batch(ch, dmat).min(axis=0)


def evaluate_nnc(ch: ChannelConfig, deltas) -> BoundResult:
    """Noisy network coding with per-receiver compression noises ``deltas``.

    deltas : three quantization noise variances in (0, +inf], shared by all
    destinations.  Independent full-power inputs (no codeword correlation).
    """
    deltas = np.asarray(deltas, dtype=float).reshape(-1)
    if deltas.shape != (3,):
        raise ValueError("deltas must contain exactly 3 values")
    if np.any(np.isnan(deltas)) or np.any(deltas <= 0.0):
        raise ValueError("deltas must be > 0 (may be +inf)")
    terms = nnc_term_values_batch(ch, deltas[None, :])[:, 0]
    labels = [_nnc_label(d, t) for d, t in _NNC_CASES]
    idx = int(np.argmin(terms))
    deltas = deltas.copy()
    deltas.setflags(write=False)
    return BoundResult(
        value=float(terms[idx]),
        active_term=labels[idx],
        params=deltas,
        terms=dict(zip(labels, terms.tolist())),
    )


# ---------------------------------------------------------------------------
# cutset bound

_RIDGE = 1e-11  # regularizer for conditioning on possibly-singular blocks


def _gain_matrix(ch: ChannelConfig) -> np.ndarray:
    """Rows = receivers 1..3, columns = transmitting nodes (tx, rx1, rx2, rx3)."""
    h = np.zeros((3, 4))
    for j in (1, 2, 3):
        h[j - 1, 0] = np.sqrt(ch.main(j))
        for m in (1, 2, 3):
            if m != j:
                h[j - 1, m] = np.sqrt(ch.coop(m, j))
    return h


def _check_q_matrix(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=complex)
    if q.shape != (4, 4):
        raise ValueError("input covariance must be 4x4 (tx, rx1, rx2, rx3)")
    if not np.allclose(q, q.conj().T, atol=1e-10):
        raise ValueError("input covariance must be Hermitian")
    diag = q.diagonal().real
    if np.any(diag > 1.0 + 1e-9):
        raise InfeasibleParamsError("q_diag", float(diag.max() - 1.0))
    w = np.linalg.eigvalsh(q)
    if w.min() < -1e-8 * max(1.0, w.max()):
        raise InfeasibleParamsError("q_psd", float(-w.min()))
    return q


def _cut_values_batch(ch: ChannelConfig, qstack: np.ndarray, source_side) -> np.ndarray:
    """log2 det Cov(Y_sink | X_sink) for one source set, over (N, 4, 4) stacks."""
    t = tuple(sorted(source_side))
    sink = tuple(r for r in (1, 2, 3) if r not in t)
    s_nodes = np.array((0,) + t)
    r_nodes = np.array(sink)  # relay-node indices == receiver labels
    q_ss = qstack[:, s_nodes[:, None], s_nodes[None, :]]
    q_sr = qstack[:, s_nodes[:, None], r_nodes[None, :]]
    q_rr = qstack[:, r_nodes[:, None], r_nodes[None, :]].copy()
    q_rr[:, range(len(sink)), range(len(sink))] += _RIDGE
    cond = q_ss - q_sr @ np.linalg.solve(q_rr, q_sr.conj().transpose(0, 2, 1))
    h_rows = _gain_matrix(ch)[[j - 1 for j in sink]][:, s_nodes]  # (r, c) real
    m = np.einsum("rc,ncd,sd->nrs", h_rows, cond, h_rows)
    m[:, range(len(sink)), range(len(sink))] += 1.0
    _, logdet = np.linalg.slogdet(m)
    return logdet * _INV_LN2


_CUT_SOURCE_SETS = tuple(
    t
    for size in (0, 1, 2)
    for t in itertools.combinations((1, 2, 3), size)
)


def cutset_cut_value(ch: ChannelConfig, cut: CutSpec, q) -> float:
    """Rate across one cut for input covariance ``q`` (4x4 over tx, rx1..rx3).

    Equals the conditional mutual information between the source-side
    codewords and the sink-side observations given the sink-side codewords,
    computed as a conditional-covariance log-determinant.
    """
    q = _check_q_matrix(q)
    return float(_cut_values_batch(ch, q[None, :, :], cut.source_side)[0])


def cutset_values_batch(ch: ChannelConfig, qstack: np.ndarray) -> np.ndarray:
    """Min over all cuts for a stack of input covariances (no validation)."""
    qstack = np.asarray(qstack, dtype=complex)
    values = np.full(qstack.shape[0], np.inf)
    for t in _CUT_SOURCE_SETS:
        np.minimum(values, _cut_values_batch(ch, qstack, t), out=values)
    return values


def evaluate_cutset(ch: ChannelConfig, q) -> BoundResult:
    """Cutset upper bound at input covariance ``q``: min over destinations and,
    per destination, over the four cuts separating it from the transmitter."""
    q = _check_q_matrix(q)
    by_source = {
        t: float(_cut_values_batch(ch, q[None, :, :], t)[0]) for t in _CUT_SOURCE_SETS
    }
    terms = {}
    for d in (1, 2, 3):
        for t in _CUT_SOURCE_SETS:
            if d not in t:
                terms[CutSpec(d, t).label()] = by_source[t]
    label = min(terms, key=lambda lab: (terms[lab],))  # dict order breaks ties
    q = q.copy()
    q.setflags(write=False)
    return BoundResult(value=terms[label], active_term=label, params=q, terms=terms)


# ---------------------------------------------------------------------------
# asymptotic cooperation gains


def gain_3fc(snr_main) -> float:
    """Rate gain of the fully interactive scheme from zero to unbounded
    cooperation: log2(1 + (sum of the two stronger SNRs) / (1 + weakest)).

    ``snr_main`` holds the three linear direct-link SNRs in any order.
    """
    snr = _check_snr_triple(snr_main)
    weakest = snr.min()
    return float(np.log2(1.0 + (snr.sum() - weakest) / (1.0 + weakest)))


def gain_3pc(snr_main) -> float:
    """Same limit gain for the partially interactive scheme:
    log2((1 + sum of the two stronger SNRs) / (1 + weakest))."""
    snr = _check_snr_triple(snr_main)
    weakest = snr.min()
    return float(np.log2((1.0 + snr.sum() - weakest) / (1.0 + weakest)))


def gain_kfc(snrs) -> float:
    """K-receiver generalization of :func:`gain_3fc`.

    ``snrs`` are linear SNRs sorted strongest-first; the weakest (last)
    receiver is the no-cooperation bottleneck.  For a symmetric channel the
    gain grows to log2(K) as the SNR grows.
    """
    snrs = np.asarray(snrs, dtype=float).reshape(-1)
    if snrs.size == 0:
        raise ValueError("need at least one receiver")
    if np.any(np.isnan(snrs)) or np.any(snrs < 0):
        raise ValueError("SNRs must be >= 0")
    if np.any(np.diff(snrs) > 0):
        raise ValueError("SNRs must be sorted strongest-first")
    return float(np.log2(1.0 + snrs[:-1].sum() / (1.0 + snrs[-1])))


def _check_snr_triple(snr_main) -> np.ndarray:
    snr = np.asarray(snr_main, dtype=float).reshape(-1)
    if snr.shape != (3,):
        raise ValueError("snr_main must contain exactly 3 values")
    if np.any(np.isnan(snr)) or np.any(snr < 0):
        raise ValueError("SNRs must be >= 0")
    return snr
