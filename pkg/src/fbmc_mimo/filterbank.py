"""Prototype design and polyphase synthesis/analysis banks for a real-PAM FBMC modem.

Modulation convention
---------------------
Each subcarrier ``k`` carries one real PAM symbol ``a[k, n]`` every half
multicarrier symbol (``hop = L/2`` samples).  The transmitted pulse of slot
``(k, n)`` is

    g_kn[t] = j**(k + n) * p[t - n*hop] * exp(j*2*pi*k*(t - n*hop - D/2) / L)

where ``p`` is the symmetric prototype of length ``Lp`` and ``D = Lp - 1`` its
group-delay span.  The ``j**(k+n)`` rotation alternates between in-phase and
quadrature across both time and frequency, so every neighbouring pulse is
orthogonal to ``g_kn`` in the real part of the inner product.  The analysis bank
correlates with ``g_kn`` and keeps the real part.

Synthesis is scaled by ``1/sqrt(2)`` so the steady-state signal has unit mean
power per sample for unit-power symbols; analysis is scaled by ``sqrt(2)`` so
the back-to-back chain is the identity.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConfigurationError, ShapeError

ALLOWED_OVERLAP = (3, 4, 6)

# Optimized frequency-sampling values for 0 < k < K/2; the remaining ones
# follow from H_k**2 + H_(K-k)**2 = 1 and H_(K/2) = 1/sqrt(2).
_FREE_COEFFS = {
    3: (0.911438,),
    4: (0.971960,),
    6: (0.99912, 0.94715),
}

_SQRT2 = np.sqrt(2.0)


def frequency_sampling_coefficients(overlap_factor):
    """Frequency-sampling values ``H_0 .. H_(K-1)`` for overlap factor ``K``."""
    if overlap_factor not in _FREE_COEFFS:
        raise ConfigurationError(
            f"overlap_factor must be one of {ALLOWED_OVERLAP}, got {overlap_factor!r}"
        )
    K = overlap_factor
    H = np.zeros(K)
    H[0] = 1.0
    for k, v in enumerate(_FREE_COEFFS[K], start=1):
        H[k] = v
        H[K - k] = np.sqrt(1.0 - v * v)
    if K % 2 == 0:
        H[K // 2] = np.sqrt(0.5)
    return H


def _is_pow2(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PrototypeFilter:
    """Real symmetric FIR pulse shared by the synthesis and analysis banks."""

    taps: np.ndarray
    overlap_factor: int
    num_subcarriers: int
    coefficients: tuple = field(default=(), compare=False)

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size == 0:
            raise ConfigurationError("taps must be a nonempty 1-D sequence")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def length(self):
        return self.taps.size

    @property
    def delay(self):
        """Span ``D`` between first and last tap, in samples."""
        return self.taps.size - 1

    def __eq__(self, other):
        if not isinstance(other, PrototypeFilter):
            return NotImplemented
        return (self.overlap_factor == other.overlap_factor
                and self.num_subcarriers == other.num_subcarriers
                and np.array_equal(self.taps, other.taps))

    __hash__ = None


def design_prototype(L, overlap_factor=4):
    """Frequency-sampling prototype of length ``overlap_factor * L + 1``.

    The continuous-frequency response interpolates the samples returned by
    :func:`frequency_sampling_coefficients` at spacing ``1/(K*L)``; the taps
    are normalized to unit energy.

    Parameters
    ----------
    L : int
        Number of subcarriers, a power of two.
    overlap_factor : int
        Pulse length in multicarrier symbols; one of 3, 4 or 6.

    Returns
    -------
    PrototypeFilter
    """
    if not _is_pow2(L) or L < 4:
        raise ConfigurationError(f"L must be a power of two >= 4, got {L!r}")
    H = frequency_sampling_coefficients(overlap_factor)
    K = overlap_factor
    n = np.arange(K * L + 1)
    taps = np.full(n.size, H[0])
    for k in range(1, K):
        taps += 2.0 * (-1) ** k * H[k] * np.cos(2.0 * np.pi * k * n / (K * L))
    # force exact symmetry against rounding in cos
    taps = 0.5 * (taps + taps[::-1])
    taps /= np.sqrt(np.sum(taps * taps))
    return PrototypeFilter(taps, K, int(L), tuple(H))


def rectangular_prototype(L, overlap_factor=4):
    """Unit-energy boxcar of the same length as :func:`design_prototype`.

    Not a valid FBMC pulse; used as a reference when assessing a design.
    """
    taps = np.ones(overlap_factor * L + 1)
    return PrototypeFilter(taps / np.sqrt(taps.size), overlap_factor, int(L))


@dataclass(frozen=True)
class FbmcConfig:
    num_subcarriers: int
    overlap_factor: int = 4
    num_symbols: int = 64
    pam_order: int = 2

    def __post_init__(self):
        L = self.num_subcarriers
        if not _is_pow2(L) or L < 4:
            raise ConfigurationError(f"L must be a power of two >= 4, got {L!r}")
        if self.overlap_factor not in ALLOWED_OVERLAP:
            raise ConfigurationError(
                f"overlap_factor must be one of {ALLOWED_OVERLAP}, got {self.overlap_factor!r}"
            )
        if self.num_symbols < 2 * self.overlap_factor:
            raise ConfigurationError(
                f"num_symbols must be >= 2*overlap_factor = {2 * self.overlap_factor}, "
                f"got {self.num_symbols}"
            )
        if self.pam_order not in (2, 4):
            raise ConfigurationError(f"pam_order must be 2 or 4, got {self.pam_order!r}")

    @property
    def L(self):
        return self.num_subcarriers

    @property
    def hop(self):
        return self.num_subcarriers // 2

    @property
    def steady(self):
        """Slice of symbol instants free of filter transients."""
        return slice(self.overlap_factor, self.num_symbols - self.overlap_factor)

    def with_symbols(self, num_symbols):
        return FbmcConfig(self.num_subcarriers, self.overlap_factor, num_symbols, self.pam_order)


def signal_length(cfg, filt=None):
    """Number of samples emitted by :func:`synthesize` for ``cfg``."""
    lp = cfg.overlap_factor * cfg.L + 1 if filt is None else filt.length
    return (cfg.num_symbols - 1) * cfg.hop + lp


def pam_alphabet(order):
    """Unit-average-power PAM levels."""
    if order not in (2, 4):
        raise ConfigurationError(f"pam_order must be 2 or 4, got {order!r}")
    levels = np.arange(-(order - 1), order, 2, dtype=np.float64)
    return levels / np.sqrt(np.mean(levels ** 2))


def random_grid(cfg, rng, shape=()):
    """Draw i.i.d. PAM symbols of shape ``shape + (L, N)``."""
    alphabet = pam_alphabet(cfg.pam_order)
    return rng.choice(alphabet, size=tuple(shape) + (cfg.L, cfg.num_symbols))


def _phase(L, N):
    return (1j) ** ((np.arange(L)[:, None] + np.arange(N)[None, :]) % 4)


def _check_filter(cfg, filt):
    if filt.num_subcarriers != cfg.L:
        raise ShapeError(
            f"filter designed for L={filt.num_subcarriers}, config has L={cfg.L}"
        )


def synthesize(grid, cfg, filt):
    """Synthesis filter bank.

    Parameters
    ----------
    grid : array_like, shape (..., L, N)
        Real PAM symbols; leading axes are batched (e.g. one grid per user).
    cfg : FbmcConfig
    filt : PrototypeFilter

    Returns
    -------
    numpy.ndarray, shape (..., signal_length(cfg, filt))
        Complex baseband samples, filter tails included.
    """
    grid = np.asarray(grid, dtype=np.float64)
    L, N = cfg.L, cfg.num_symbols
    if grid.ndim < 2 or grid.shape[-2:] != (L, N):
        raise ShapeError(f"grid must end in shape ({L}, {N}), got {grid.shape}")
    _check_filter(cfg, filt)
    lead = grid.shape[:-2]
    k = np.arange(L)[:, None]
    coeffs = grid * _phase(L, N) * np.exp(-1j * np.pi * k * filt.delay / L)
    blocks = np.fft.ifft(coeffs, axis=-2) * (L / _SQRT2)
    blocks = np.swapaxes(blocks, -1, -2).reshape((-1, N, L))
    out = _kernels.overlap_add(blocks, filt.taps, cfg.hop, signal_length(cfg, filt))
    return out.reshape(lead + (out.shape[-1],))


def analyze(signal, cfg, filt, project=True):
    """Matched analysis filter bank.

    Parameters
    ----------
    signal : array_like, shape (..., signal_length(cfg, filt))
    cfg : FbmcConfig
    filt : PrototypeFilter
    project : bool
        When true return the real-part projection (the PAM estimates);
        otherwise return the de-rotated complex outputs, whose imaginary part
        holds the intrinsic interference.  Linear combining across antennas
        must operate on the complex outputs.

    Returns
    -------
    numpy.ndarray, shape (..., L, N)
    """
    signal = np.asarray(signal)
    expected = signal_length(cfg, filt)
    if signal.ndim < 1 or signal.shape[-1] != expected:
        raise ShapeError(f"signal must have {expected} samples, got shape {signal.shape}")
    _check_filter(cfg, filt)
    L, N = cfg.L, cfg.num_symbols
    lead = signal.shape[:-1]
    folded = _kernels.fold_frames(signal.reshape(-1, expected), filt.taps, cfg.hop, L, N)
    spec = np.fft.fft(folded, axis=-1) * _SQRT2
    spec = np.swapaxes(spec, -1, -2).reshape(lead + (L, N))
    k = np.arange(L)[:, None]
    out = spec * np.exp(1j * np.pi * k * filt.delay / L) * np.conj(_phase(L, N))
    return out.real.copy() if project else out


def system_response(cfg, filt, subcarrier=None, instant=None):
    """Complex back-to-back response to a unit symbol in one slot.

    Defaults to the slot in the middle of the grid.
    """
    k0 = cfg.L // 2 if subcarrier is None else subcarrier
    n0 = cfg.num_symbols // 2 if instant is None else instant
    grid = np.zeros((cfg.L, cfg.num_symbols))
    grid[k0, n0] = 1.0
    return analyze(synthesize(grid, cfg, filt), cfg, filt, project=False)


def intrinsic_interference_profile(cfg, filt):
    """Interference power each slot receives from a unit symbol at the centre slot.

    The entries are ``|r - delta|**2`` for the complex response ``r``; away from
    the centre this is dominated by the imaginary part that the real-part
    projection removes.  Compare :func:`real_residue_db` for what survives
    the projection.

    Returns
    -------
    numpy.ndarray, shape (L, N)
    """
    resp = system_response(cfg, filt)
    resp[cfg.L // 2, cfg.num_symbols // 2] -= 1.0
    return np.abs(resp) ** 2


def real_residue_db(cfg, filt):
    """Total real-part leakage of one slot into all others, in dB.

    Equals the back-to-back reconstruction error power for unit-power i.i.d.
    symbols in the steady state.
    """
    resp = system_response(cfg, filt).real
    resp[cfg.L // 2, cfg.num_symbols // 2] -= 1.0
    return 10.0 * np.log10(np.sum(resp ** 2))


def write_taps(path, filt):
    """Write taps one per line with 17 significant digits."""
    text = "".join(f"{v:.17g}\n" for v in filt.taps)
    Path(path).write_text(text)


def read_taps(path):
    return np.array([float(s) for s in Path(path).read_text().split()])
