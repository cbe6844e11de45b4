"""Channel description for the three-receiver Gaussian multicast network.

One transmitter broadcasts to receivers 1..3 over a complex AWGN channel while
the receivers exchange information over full-duplex cooperation links.  After
normalizing transmit power and noise variance, the channel is fully described
by signal-to-noise ratios: ``snr_main[k]`` on the direct link to receiver k+1
and ``snr_coop[j, k]`` on the cooperation link from receiver j+1 towards
receiver k+1.  Self links are unused and kept at zero.  Line-of-sight phases
are absorbed into codebook phase parameters, so SNRs are all that is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def db_to_linear(x_db):
    """10**(x/10) elementwise."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """10*log10(x) elementwise; requires x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("dB conversion requires strictly positive linear values")
    return 10.0 * np.log10(x)


def capacity(x):
    """Gaussian capacity log2(1 + x) in bit/s/Hz, elementwise.

    Accepts scalars or arrays; x must be >= 0 (``+inf`` allowed).  Uses log1p
    so small link gains keep full relative precision.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("capacity argument must be >= 0")
    out = np.log1p(arr) / np.log(2.0)
    return out if arr.ndim else float(out)


@dataclass(frozen=True, eq=False)
class ChannelConfig:
    """Linear-scale SNRs of the multicast network.

    snr_main : shape (3,), direct-link SNR per receiver.
    snr_coop : shape (3, 3), ``snr_coop[j, k]`` is the SNR of the link from
        receiver j+1 to receiver k+1; the diagonal must be zero (a receiver
        cancels its own transmission).
    """

    snr_main: np.ndarray
    snr_coop: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        main = np.asarray(self.snr_main, dtype=float).reshape(-1)
        if main.shape != (3,):
            raise ConfigurationError("snr_main must contain exactly 3 values")
        coop = self.snr_coop
        coop = np.zeros((3, 3)) if coop is None else np.array(coop, dtype=float)
        if coop.shape != (3, 3):
            raise ConfigurationError("snr_coop must be a 3x3 matrix")
        if np.any(~np.isfinite(main)) or np.any(~np.isfinite(coop)):
            raise ConfigurationError("SNRs must be finite")
        if np.any(main < 0) or np.any(coop < 0):
            raise ConfigurationError("SNRs must be >= 0")
        if np.any(np.diagonal(coop) != 0.0):
            raise ConfigurationError("snr_coop diagonal must be zero (self links)")
        main = main.copy()
        coop = coop.copy()
        main.setflags(write=False)
        coop.setflags(write=False)
        object.__setattr__(self, "snr_main", main)
        object.__setattr__(self, "snr_coop", coop)

    def main(self, rx: int) -> float:
        """Direct-link SNR of receiver ``rx`` (1-based)."""
        return float(self.snr_main[rx - 1])

    def coop(self, src: int, dst: int) -> float:
        """Cooperation-link SNR from receiver ``src`` towards ``dst`` (1-based)."""
        return float(self.snr_coop[src - 1, dst - 1])

    def permuted(self, perm: tuple[int, int, int]) -> "ChannelConfig":
        """Relabel receivers so that new receiver i is old receiver perm[i-1]."""
        idx = np.asarray(perm, dtype=int) - 1
        if sorted(idx.tolist()) != [0, 1, 2]:
            raise ConfigurationError("perm must be a permutation of (1, 2, 3)")
        return ChannelConfig(self.snr_main[idx], self.snr_coop[np.ix_(idx, idx)])


def from_db(main_db, coop_db) -> ChannelConfig:
    """Build a ChannelConfig from dB quantities.

    ``main_db`` is a length-3 vector.  ``coop_db`` is either a scalar
    (symmetric cooperation links, the usual sweep setting) or a full 3x3
    matrix in dB whose diagonal is ignored.
    """
    main = db_to_linear(main_db)
    coop_arr = np.asarray(coop_db, dtype=float)
    if coop_arr.ndim == 0:
        coop = np.full((3, 3), float(db_to_linear(coop_arr)))
    elif coop_arr.shape == (3, 3):
        coop = db_to_linear(coop_arr)
    else:
        raise ConfigurationError("coop_db must be a scalar or a 3x3 matrix")
    np.fill_diagonal(coop, 0.0)
    return ChannelConfig(main, coop)
