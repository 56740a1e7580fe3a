"""Block-fading multi-user Rayleigh channels for the uplink of a BS array."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap delays (samples, strictly increasing from 0) and normalized tap powers."""

    delays: tuple
    powers: tuple

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        powers = np.asarray(self.powers, dtype=np.float64)
        if len(delays) == 0:
            raise ConfigurationError("power delay profile needs at least one tap")
        if len(delays) != powers.size:
            raise ConfigurationError(
                f"{len(delays)} delays but {powers.size} powers in power delay profile"
            )
        if delays[0] != 0 or any(b <= a for a, b in zip(delays, delays[1:])):
            raise ConfigurationError("tap delays must start at 0 and be strictly increasing")
        if np.any(powers < 0) or not np.all(np.isfinite(powers)) or powers.sum() <= 0:
            raise ConfigurationError("tap powers must be finite, nonnegative and not all zero")
        object.__setattr__(self, "delays", delays)
        if abs(powers.sum() - 1.0) > 1e-12:
            powers = powers / powers.sum()
        object.__setattr__(self, "powers", tuple(float(p) for p in powers))

    @property
    def num_taps(self):
        return len(self.delays)

    @property
    def max_delay(self):
        return self.delays[-1]

    @classmethod
    def flat(cls):
        return cls((0,), (1.0,))

    @classmethod
    def exponential(cls, num_taps=8, decay=1.0):
        """Consecutive taps with power proportional to ``exp(-d / decay)``."""
        if num_taps < 1:
            raise ConfigurationError("num_taps must be >= 1")
        d = np.arange(num_taps)
        return cls(tuple(d), tuple(np.exp(-d / decay)))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Impulse responses ``taps[m, k, i]`` at ``delays[i]`` from user ``k`` to antenna ``m``."""

    taps: np.ndarray
    delays: tuple
    cell_gains: np.ndarray
    seed: object = None

    @property
    def num_antennas(self):
        return self.taps.shape[0]

    @property
    def num_users(self):
        return self.taps.shape[1]

    def scaled(self, factor):
        return ChannelSet(self.taps * factor, self.delays, self.cell_gains, self.seed)

    def select_users(self, users):
        users = list(users)
        return ChannelSet(self.taps[:, users], self.delays, self.cell_gains[users], self.seed)

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return (self.delays == other.delays
                and np.array_equal(self.taps, other.taps)
                and np.array_equal(self.cell_gains, other.cell_gains))


def draw_channels(pdp, M, K, cell_gains=None, seed=0):
    """Draw i.i.d. circularly-symmetric Gaussian taps.

    Tap ``i`` of link ``(m, k)`` has variance ``pdp.powers[i] * cell_gains[k]``.

    Parameters
    ----------
    pdp : PowerDelayProfile
    M, K : int
        Number of BS antennas and of users.
    cell_gains : array_like of length K, optional
        Large-scale power gain per user; defaults to all ones.
    seed : int or numpy.random.Generator

    Returns
    -------
    ChannelSet
    """
    if M < 1 or K < 1:
        raise ConfigurationError(f"need M >= 1 and K >= 1, got M={M}, K={K}")
    if not isinstance(pdp, PowerDelayProfile):
        raise ConfigurationError("pdp must be a PowerDelayProfile")
    gains = np.ones(K) if cell_gains is None else np.asarray(cell_gains, dtype=np.float64)
    if gains.shape != (K,) or np.any(gains < 0):
        raise ConfigurationError("cell_gains must be K nonnegative values")
    rng = _as_rng(seed)
    shape = (M, K, pdp.num_taps)
    taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)
    taps *= np.sqrt(np.asarray(pdp.powers))
    taps *= np.sqrt(gains)[None, :, None]
    return ChannelSet(taps, pdp.delays, gains, seed if not isinstance(seed, np.random.Generator) else None)


def frequency_response(ch, L):
    """Channel gain of every link at the ``L`` subcarrier centre frequencies.

    Returns
    -------
    numpy.ndarray, shape (M, K, L)
        ``sum_i taps[m, k, i] * exp(-2j*pi*delays[i]*l/L)``.
    """
    if L < ch.delays[-1] + 1:
        raise ConfigurationError(
            f"L={L} is shorter than the channel length {ch.delays[-1] + 1}"
        )
    impulse = np.zeros(ch.taps.shape[:2] + (L,), dtype=np.complex128)
    impulse[:, :, list(ch.delays)] = ch.taps
    return np.fft.fft(impulse, axis=-1)


def noise_variance(snr_in_db):
    """Per-sample complex noise variance for unit received power per user."""
    return 10.0 ** (-np.asarray(snr_in_db, dtype=np.float64) / 10.0)


def apply_channel(signals, ch, snr_in_db, seed=0):
    """Propagate user signals to the array and add white Gaussian noise.

    ``y[m] = sum_k h[m, k] * x[k] + n[m]`` with the convolution truncated to
    the input length (framing is preserved).  Noise is circular with variance
    ``10**(-snr_in_db/10)`` per sample, i.e. ``snr_in_db`` is the per-antenna
    SNR of each unit-power user received through a unit-gain link.  Pass
    ``snr_in_db=None`` for a noise-free output.

    Parameters
    ----------
    signals : array_like, shape (K, T)
    ch : ChannelSet
    snr_in_db : float or None
    seed : int or numpy.random.Generator

    Returns
    -------
    numpy.ndarray, shape (M, T)
    """
    x = np.asarray(signals, dtype=np.complex128)
    if x.ndim != 2 or x.shape[0] != ch.num_users:
        raise ShapeError(
            f"signals must have shape ({ch.num_users}, T), got {x.shape}"
        )
    T = x.shape[1]
    y = np.zeros((ch.num_antennas, T), dtype=np.complex128)
    for i, d in enumerate(ch.delays):
        if d >= T:
            continue
        y[:, d:] += ch.taps[:, :, i] @ x[:, :T - d]
    if snr_in_db is not None:
        rng = _as_rng(seed)
        sigma = np.sqrt(noise_variance(snr_in_db) / 2.0)
        y += sigma * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y
