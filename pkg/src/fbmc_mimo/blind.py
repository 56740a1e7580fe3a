"""Blind dispersion-based adaptation of per-subcarrier combiner weights.

For real PAM the combiner output is ``z = Re(w . x)`` and the cost is
``J(w) = mean((z**2 - R)**2)``.  Writing ``w = a + jb``, ``dz/da = Re(x)`` and
``dz/db = -Im(x)``, so the complex gradient ``dJ/da + j dJ/db`` equals
``4 mean((z**2 - R) z conj(x))``.  Updates step along
``mean((z**2 - R) z conj(x))`` (the factor 4 folded into the step size),
normalized per block by the mean input energy ``mean ||x||**2`` and the mean
output power ``mean z**2``, which makes the step size dimensionless.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .combining import combine, mf_combiner, mmse_combiner, perfect_estimate
from .errors import ConfigurationError, DivergenceError
from .filterbank import design_prototype, pam_alphabet
from .link import simulate_multicell, trial_streams
from .metrics import measure_sinr

INIT_MODES = ("mf_contaminated", "custom")


def dispersion_constant(pam_order):
    """``E[a**4] / E[a**2]`` of the unit-power PAM alphabet (1 for PAM-2)."""
    a = pam_alphabet(pam_order)
    return float(np.mean(a ** 4) / np.mean(a ** 2))


@dataclass(frozen=True)
class BlindConfig:
    step_size: float = 0.3
    dispersion_constant: float = None
    iterations: int = 100
    block_size: int = 32
    init: str = "mf_contaminated"
    max_growth: float = 1e6

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigurationError(f"blind.step_size must be > 0, got {self.step_size!r}")
        if self.dispersion_constant is not None and not self.dispersion_constant > 0:
            raise ConfigurationError("blind.dispersion_constant must be > 0")
        if self.iterations < 1:
            raise ConfigurationError("blind.iterations must be >= 1")
        if self.block_size < 1:
            raise ConfigurationError("blind.block_size must be >= 1")
        if self.init not in INIT_MODES:
            raise ConfigurationError(f"blind.init must be one of {INIT_MODES}, got {self.init!r}")

    def resolved_R(self, pam_order=2):
        if self.dispersion_constant is not None:
            return float(self.dispersion_constant)
        return dispersion_constant(pam_order)


def godard_cost(outputs, R):
    z = np.asarray(outputs, dtype=np.float64)
    if z.size == 0:
        raise ValueError("godard_cost needs at least one output sample")
    return float(np.mean((z * z - R) ** 2))


def godard_gradient(w, x, R):
    """Exact complex gradient of :func:`godard_cost` for ``z = Re(w @ x)``.

    Parameters
    ----------
    w : array_like, shape (M,)
    x : array_like, shape (M, S)

    Returns
    -------
    numpy.ndarray, shape (M,)
        ``dJ/dRe(w) + 1j * dJ/dIm(w)``.
    """
    w = np.asarray(w)
    x = np.asarray(x)
    z = (w @ x).real
    return 4.0 * np.mean((z * z - R) * z * np.conj(x), axis=-1)


def _check_growth(w, ref_norm, max_growth, step_size):
    norms = np.linalg.norm(w, axis=-1)
    if not np.all(np.isfinite(w)) or np.any(norms > max_growth * ref_norm):
        raise DivergenceError(
            f"blind weights diverged (norm grew beyond {max_growth:g}x its initial value); "
            f"reduce step_size (currently {step_size:g})"
        )


def blind_update(w, outputs, cfg, R=None, ref_norm=None):
    """Block-gradient dispersion updates for one (user, subcarrier) combiner.

    Parameters
    ----------
    w : array_like, shape (M,)
    outputs : array_like, shape (M, S)
        Complex antenna-domain analysis outputs of the slot, one column per
        symbol; processed in consecutive blocks of ``cfg.block_size``.
    cfg : BlindConfig
    R : float, optional
        Dispersion constant; defaults to the PAM-2 value unless set in ``cfg``.
    ref_norm : float, optional
        Norm the divergence check compares against; defaults to ``||w||``.

    Returns
    -------
    numpy.ndarray, shape (M,)
    """
    w0 = np.array(w, dtype=np.complex128)
    x = np.asarray(outputs, dtype=np.complex128)
    if x.ndim != 2 or x.shape[0] != w0.shape[0]:
        raise ValueError(f"outputs must have shape ({w0.shape[0]}, S), got {x.shape}")
    R = cfg.resolved_R() if R is None else R
    ref = np.linalg.norm(w0) if ref_norm is None else ref_norm
    w_new = w0[None, :].copy()
    with np.errstate(over="ignore", invalid="ignore"):
        _kernels.godard_sweep(w_new, x[None], R, cfg.step_size, cfg.block_size)
    _check_growth(w_new, ref, cfg.max_growth, cfg.step_size)
    return w_new[0]


def track_weights(outputs, w0, cfg, R, measure):
    """Run ``cfg.iterations`` records of the blind tracker over one packet.

    Parameters
    ----------
    outputs : array_like, shape (L, M, S)
        Steady-state analysis outputs per subcarrier.
    w0 : array_like, shape (L, M)
        Initial weights.
    measure : callable
        Maps weights of shape (L, M) to the scalar SINR that gets recorded.

    Returns
    -------
    w : numpy.ndarray, shape (L, M)
    trace : numpy.ndarray, shape (cfg.iterations,)
        ``trace[i]`` is the SINR after ``i`` full sweeps of the packet, so
        ``trace[0]`` is the initial combiner.
    """
    x = np.ascontiguousarray(outputs, dtype=np.complex128)
    w = np.array(w0, dtype=np.complex128)
    ref = np.linalg.norm(w, axis=-1)
    trace = np.empty(cfg.iterations)
    trace[0] = measure(w)
    for i in range(1, cfg.iterations):
        with np.errstate(over="ignore", invalid="ignore"):
            _kernels.godard_sweep(w, x, R, cfg.step_size, cfg.block_size)
        _check_growth(w, ref, cfg.max_growth, cfg.step_size)
        trace[i] = measure(w)
    return w, trace


@dataclass
class TrackingTrace:
    sinr_db: np.ndarray
    baselines: dict
    metadata: dict = field(default_factory=dict)


BASELINES = ("mf_noisy", "mf_clean", "mmse_clean")


def mean_sinr_db(outputs, weights, symbols):
    """Average over users and subcarriers of the per-slot SINR in dB."""
    return float(np.mean(measure_sinr(combine(outputs, weights), symbols)))


def track(scenario, cfg=None, seed=None, trial=0, initial_weights=None, filt=None,
          noiseless_pilots=False):
    """Simulate one contaminated multicell packet and track the home-cell combiners.

    Parameters
    ----------
    scenario : Scenario
        Must carry a contamination block.
    cfg : BlindConfig, optional
        Defaults to ``scenario.blind`` or :class:`BlindConfig` defaults.
    seed : int, optional
        Overrides ``scenario.seed``.
    trial : int
        Trial index mixed into the random streams.
    initial_weights : array_like of shape (K, L, M), optional
        Required when ``cfg.init == "custom"``.
    noiseless_pilots : bool
        Estimate from a noise-free pilot phase (contamination still applies).

    Returns
    -------
    TrackingTrace
        Trace averaged over home-cell users, plus the three baselines measured
        on the same packet.
    """
    if scenario.contamination is None:
        raise ConfigurationError("blind tracking needs a [contamination] block")
    cfg = cfg or scenario.blind or BlindConfig()
    seed = scenario.seed if seed is None else seed
    fbmc = scenario.fbmc
    filt = filt or design_prototype(fbmc.L, fbmc.overlap_factor)
    K = scenario.K
    rngs = trial_streams(seed, trial)
    data, est = simulate_multicell(scenario, filt, rngs, noiseless_pilots)

    ss = fbmc.steady
    X = data.outputs[:, :, ss]
    S = data.grids[:K, :, ss]
    nv = data.noise_var if data.noise_var > 0 else 1e-12
    w_noisy = mf_combiner(est)
    weights = {
        "mf_noisy": w_noisy,
        "mf_clean": mf_combiner(perfect_estimate(data.freq[:, :K])),
        "mmse_clean": mmse_combiner(data.freq, nv, users=range(K)),
    }
    baselines = {name: mean_sinr_db(X, weights[name], S) for name in BASELINES}

    if cfg.init == "custom":
        if initial_weights is None:
            raise ConfigurationError("blind.init = custom requires initial_weights")
        w0 = np.asarray(initial_weights, dtype=np.complex128)
    else:
        w0 = w_noisy
    R = cfg.resolved_R(fbmc.pam_order)
    x_lms = np.ascontiguousarray(np.transpose(X, (1, 0, 2)))
    traces = []
    final = []
    for k in range(K):
        def measure(w, k=k):
            z = np.matmul(w[:, None, :], x_lms)[:, 0, :].real
            return float(np.mean(measure_sinr(z, S[k])))

        wk, tr = track_weights(x_lms, w0[k], cfg, R, measure)
        traces.append(tr)
        final.append(wk)
    return TrackingTrace(
        sinr_db=np.mean(traces, axis=0),
        baselines=baselines,
        metadata={"seed": seed, "trial": trial, "R": R, "weights": np.array(final)},
    )
