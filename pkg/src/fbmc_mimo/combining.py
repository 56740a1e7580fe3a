"""Pilot-based channel estimation and per-subcarrier linear combiners."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError, ShapeError, SingularityError
from .filterbank import FbmcConfig, analyze, synthesize


@dataclass(frozen=True)
class ContaminationConfig:
    """Multicell pilot reuse.

    ``cross_gains[j]`` is the large-scale power gain of interfering cell
    ``j + 1`` relative to the home cell (cell 0, gain 1).
    """

    num_cells: int = 7
    cross_gains: tuple = (0.3,) * 6
    shared_pilots: bool = True

    def __post_init__(self):
        gains = tuple(float(b) for b in np.atleast_1d(self.cross_gains))
        if self.num_cells < 1:
            raise ConfigurationError("contamination.num_cells must be >= 1")
        if len(gains) == 1 and self.num_cells > 2:
            gains = gains * (self.num_cells - 1)
        if len(gains) != self.num_cells - 1:
            raise ConfigurationError(
                f"contamination.cross_gains needs num_cells - 1 = {self.num_cells - 1} "
                f"values, got {len(gains)}"
            )
        if any(not 0.0 <= b <= 1.0 for b in gains):
            raise ConfigurationError("contamination.cross_gains must lie in [0, 1]")
        object.__setattr__(self, "cross_gains", gains)

    @property
    def cell_gains(self):
        """Large-scale gains of all cells, home cell first."""
        return (1.0,) + self.cross_gains


def pilot_sequence(L):
    """Known real pilot symbols, pattern ``+1 +1 -1 -1`` across subcarriers.

    With this pattern the imaginary interference from both neighbouring
    subcarriers adds up, giving every subcarrier a large pseudo-pilot.
    """
    return np.resize(np.array([1.0, 1.0, -1.0, -1.0]), L)


@dataclass(frozen=True)
class PilotPlan:
    """Isolated pilot symbols in a dedicated frame, one column per pilot slot.

    Slot ``s`` sits at column ``overlap + 2*overlap*s`` so that consecutive
    pilots are one prototype length apart and do not interfere.
    """

    fbmc: FbmcConfig
    num_slots: int
    sequence: np.ndarray = field(compare=False)

    @classmethod
    def build(cls, fbmc, num_slots):
        if num_slots < 1:
            raise ConfigurationError("at least one pilot slot is required")
        K = fbmc.overlap_factor
        frame = fbmc.with_symbols(2 * K * num_slots + 1)
        return cls(frame, int(num_slots), pilot_sequence(fbmc.L))

    def column(self, slot):
        if not 0 <= slot < self.num_slots:
            raise ConfigurationError(f"pilot slot {slot} outside 0..{self.num_slots - 1}")
        K = self.fbmc.overlap_factor
        return K + 2 * K * slot

    def grids(self, slots):
        """Pilot frames, shape (len(slots), L, Np), one per transmitting user."""
        out = np.zeros((len(slots), self.fbmc.L, self.fbmc.num_symbols))
        for i, s in enumerate(slots):
            out[i, :, self.column(s)] = self.sequence
        return out

    def pseudo_pilots(self, filt):
        """Complex analysis output of a back-to-back pilot, shape (num_slots, L).

        The real part is the pilot itself; the imaginary part is the
        deterministic interference from the neighbouring pilot subcarriers.
        """
        slots = list(range(self.num_slots))
        sig = synthesize(self.grids(slots), self.fbmc, filt)
        resp = analyze(sig, self.fbmc, filt, project=False)
        cols = [self.column(s) for s in slots]
        return resp[np.arange(self.num_slots), :, cols]


def check_slot_assignment(slots_by_cell):
    """Reject two users of the same cell sharing a pilot slot."""
    for c, slots in enumerate(slots_by_cell):
        if len(set(slots)) != len(slots):
            raise ConfigurationError(f"pilot slot collision within cell {c}: {list(slots)}")


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    """Per-subcarrier channel estimates ``gains[m, k, l]``."""

    gains: np.ndarray
    noise_var_estimate: float = 0.0
    contaminated: bool = False
    contamination_terms: tuple = ()

    @property
    def num_antennas(self):
        return self.gains.shape[0]

    @property
    def num_users(self):
        return self.gains.shape[1]


def estimate_channels(received, plan, filt, slots, noise_var=0.0, contamination=None):
    """Least-squares estimate from isolated pilot symbols.

    Parameters
    ----------
    received : array_like, shape (M, L, Np)
        Complex (unprojected) analysis outputs of the received pilot frame.
    plan : PilotPlan
    filt : PrototypeFilter
    slots : sequence of int
        Pilot slot of each home-cell user.
    noise_var : float
        Per-sample noise variance, recorded for MMSE regularization.
    contamination : ContaminationConfig, optional
        Recorded in the result; users of other cells that reuse a slot are
        already superimposed in ``received``.

    Returns
    -------
    ChannelEstimate
        ``gains[:, k, l] = received[:, l, col_k] / q[slot_k, l]`` with ``q``
        the pseudo-pilot of :meth:`PilotPlan.pseudo_pilots`.
    """
    check_slot_assignment([list(slots)])
    received = np.asarray(received)
    shape = (plan.fbmc.L, plan.fbmc.num_symbols)
    if received.ndim != 3 or received.shape[1:] != shape:
        raise ShapeError(f"received pilots must have shape (M, {shape[0]}, {shape[1]}), "
                         f"got {received.shape}")
    q = plan.pseudo_pilots(filt)
    cols = [plan.column(s) for s in slots]
    gains = received[:, :, cols] / q[list(slots)].T[None, :, :]
    gains = np.transpose(gains, (0, 2, 1))
    contaminated = bool(contamination is not None and contamination.shared_pilots
                        and any(b > 0 for b in contamination.cross_gains))
    terms = ()
    if contaminated:
        terms = tuple((j + 1, b) for j, b in enumerate(contamination.cross_gains) if b > 0)
    return ChannelEstimate(np.ascontiguousarray(gains), float(noise_var), contaminated, terms)


def perfect_estimate(freq_response, noise_var=0.0):
    """Genie estimate equal to the true subcarrier gains."""
    return ChannelEstimate(np.asarray(freq_response, dtype=np.complex128), float(noise_var))


def mf_combiner(est):
    """Matched-filter weights with unit intended-signal gain.

    ``weights[k, l, :] = conj(h[:, k, l]) / ||h[:, k, l]||**2``.
    """
    h = np.transpose(np.asarray(est.gains if isinstance(est, ChannelEstimate) else est),
                     (1, 2, 0))
    energy = np.sum(np.abs(h) ** 2, axis=-1)
    bad = np.argwhere(energy == 0)
    if bad.size:
        k, l = bad[0]
        raise SingularityError(f"estimated channel of user {k} on subcarrier {l} is zero")
    return np.conj(h) / energy[..., None]


def mmse_combiner(est, noise_var, users=None):
    """Multiuser MMSE weights per subcarrier.

    Row ``k`` of ``(H^H H + noise_var I)^-1 H^H`` with ``H`` the (M, K)
    estimate on each subcarrier.

    Parameters
    ----------
    est : ChannelEstimate or array_like of shape (M, K, L)
    noise_var : float
        Must be positive.
    users : sequence of int, optional
        Rows to return; all users by default.

    Returns
    -------
    numpy.ndarray, shape (len(users), L, M)
    """
    if not noise_var > 0:
        raise ConfigurationError(f"noise_var must be > 0, got {noise_var!r}")
    H = np.asarray(est.gains if isinstance(est, ChannelEstimate) else est)
    if not np.all(np.isfinite(H)):
        raise NumericalError("channel estimate contains non-finite entries")
    Hl = np.transpose(H, (2, 0, 1))  # (L, M, K)
    Hh = np.conj(np.swapaxes(Hl, 1, 2))  # (L, K, M)
    K = Hl.shape[2]
    gram = Hh @ Hl + noise_var * np.eye(K)
    W = np.linalg.solve(gram, Hh)  # (L, K, M)
    if not np.all(np.isfinite(W)):
        raise NumericalError("MMSE solve produced non-finite weights")
    W = np.transpose(W, (1, 0, 2))
    return W if users is None else W[list(users)]


def combine(outputs, weights):
    """Combine per-antenna analysis outputs and project onto the real axis.

    Parameters
    ----------
    outputs : array_like, shape (M, L, N)
        Complex analysis outputs of every antenna.
    weights : array_like, shape (K, L, M)

    Returns
    -------
    numpy.ndarray, shape (K, L, N)
        ``Re(sum_m weights[k, l, m] * outputs[m, l, n])``.
    """
    x = np.asarray(outputs)
    w = np.asarray(weights)
    if x.ndim != 3 or w.ndim != 3 or w.shape[2] != x.shape[0] or w.shape[1] != x.shape[1]:
        raise ShapeError(f"weights {w.shape} do not match antenna outputs {x.shape}")
    # batched over subcarriers: (L, K, M) @ (L, M, N)
    z = np.matmul(np.transpose(w, (1, 0, 2)), np.transpose(x, (1, 0, 2)))
    return np.transpose(z.real, (1, 0, 2))


def target_sinr_db(snr_in_db, M):
    """Output SINR predicted by the array spreading gain, ``snr_in + 10 log10 M``."""
    if M < 1:
        raise ConfigurationError(f"M must be >= 1, got {M!r}")
    return float(snr_in_db) + 10.0 * np.log10(M)
