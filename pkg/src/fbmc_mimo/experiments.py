"""Monte Carlo runners for self-equalization and blind-tracking experiments.

Trials may run on a thread pool (``Scenario.workers``); each trial draws only
from its own ``(seed, trial)`` streams and results are collected in trial
order, so the worker count never changes a report.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .blind import BASELINES, track
from .channel import draw_channels
from .combining import (ContaminationConfig, combine, mf_combiner, mmse_combiner,
                        perfect_estimate, target_sinr_db)
from .errors import ConfigurationError, FbmcMimoError
from .filterbank import design_prototype
from .link import simulate_uplink, trial_streams
from .metrics import SINR_CAP_DB, measure_sinr
from .scenario import Scenario

__all__ = [
    "Scenario", "SinrReport", "TrackingReport", "SweepPoint", "SINR_CAP_DB",
    "measure_sinr", "run_self_equalization", "run_blind_tracking", "run_scenario",
    "run_sweep", "SWEEP_AXES",
]

log = logging.getLogger(__name__)

COMBINERS = ("mf", "mmse")
SWEEP_AXES = ("M", "L", "snr_in_db", "beta")


def _map_trials(fn, trials, workers):
    if workers <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


@dataclass
class SinrReport:
    """Per-subcarrier SINR curves of every combiner over all trials.

    ``per_trial[c]`` has shape (trials, L): for each trial, the per-subcarrier
    SINR in dB averaged (in dB) over the users.  ``per_user[c]`` keeps the
    (trials, K, L) values.
    """

    scenario: Scenario
    per_trial: dict
    per_user: dict
    target_sinr_db: float
    kind: str = field(default="self_equalization", init=False)

    @property
    def mean(self):
        return {c: v.mean(axis=0) for c, v in self.per_trial.items()}

    @property
    def var(self):
        return {c: v.var(axis=0) for c, v in self.per_trial.items()}

    def subcarrier_variance(self, combiner):
        """Variance across subcarriers, one value per trial."""
        return self.per_trial[combiner].var(axis=1)

    def dispersion(self, combiner):
        """Max minus min over subcarriers, one value per trial."""
        v = self.per_trial[combiner]
        return v.max(axis=1) - v.min(axis=1)

    def summary(self):
        out = {"target_sinr_db": self.target_sinr_db}
        for c, v in self.per_trial.items():
            out[c] = {
                "mean_sinr_db": float(v.mean()),
                "min_subcarrier_mean_db": float(v.mean(axis=0).min()),
                "max_subcarrier_mean_db": float(v.mean(axis=0).max()),
                "median_subcarrier_variance_db2": float(np.median(v.var(axis=1))),
                "median_dispersion_db": float(np.median(v.max(axis=1) - v.min(axis=1))),
            }
        return out


@dataclass
class TrackingReport:
    """Blind-tracking traces of all seeds with per-seed baselines.

    ``traces`` has shape (trials, iterations); ``baselines[name]`` has shape
    (trials,).
    """

    scenario: Scenario
    traces: np.ndarray
    baselines: dict
    kind: str = field(default="blind_tracking", init=False)

    @property
    def median_trace(self):
        return np.median(self.traces, axis=0)

    @property
    def median_baselines(self):
        return {k: float(np.median(v)) for k, v in self.baselines.items()}

    def crossing_iteration(self, baseline="mf_clean"):
        """First iteration at which the median trace reaches the median baseline."""
        hit = np.nonzero(self.median_trace >= self.median_baselines[baseline])[0]
        return int(hit[0]) if hit.size else None

    def summary(self):
        tr = self.median_trace
        return {
            "iterations": int(tr.size),
            "median_initial_sinr_db": float(tr[0]),
            "median_final_sinr_db": float(tr[-1]),
            "median_baselines_db": self.median_baselines,
            "crossing_iteration_mf_clean": self.crossing_iteration("mf_clean"),
        }


def _self_eq_trial(scenario, filt):
    fbmc = scenario.fbmc
    ss = fbmc.steady

    def run(t):
        rngs = trial_streams(scenario.seed, t)
        ch = draw_channels(scenario.pdp, scenario.M, scenario.K, None, rngs["channel"])
        data = simulate_uplink(fbmc, filt, ch, scenario.snr_in_db, rngs)
        est = perfect_estimate(data.freq, data.noise_var)
        weights = {
            "mf": mf_combiner(est),
            "mmse": mmse_combiner(est, max(data.noise_var, 1e-12)),
        }
        sent = data.grids[:, :, ss]
        X = data.outputs[:, :, ss]
        return {c: measure_sinr(combine(X, w), sent) for c, w in weights.items()}

    return run


def run_self_equalization(scenario):
    """MF and MMSE per-subcarrier SINR with perfect CSI.

    Every trial draws fresh data, channels and noise, runs the full
    synthesis, channel, per-antenna analysis, combining and SINR measurement
    chain, and records per-subcarrier SINR for both combiners.

    Returns
    -------
    SinrReport
    """
    if scenario.contamination is not None and scenario.experiment == "self_equalization":
        log.info("contamination block ignored: self-equalization uses perfect CSI")
    fbmc = scenario.fbmc
    filt = design_prototype(fbmc.L, fbmc.overlap_factor)
    results = _map_trials(_self_eq_trial(scenario, filt), scenario.trials, scenario.workers)
    per_user = {c: np.stack([r[c] for r in results]) for c in COMBINERS}
    per_trial = {c: v.mean(axis=1) for c, v in per_user.items()}
    return SinrReport(scenario, per_trial, per_user,
                      target_sinr_db(scenario.snr_in_db, scenario.M))


def run_blind_tracking(scenario):
    """Contaminated-estimate blind tracking over ``scenario.trials`` seeds.

    Trial ``t`` uses streams ``(scenario.seed, t)``.

    Returns
    -------
    TrackingReport
    """
    if scenario.experiment != "blind_tracking":
        scenario = scenario.replace(experiment="blind_tracking")
    fbmc = scenario.fbmc
    filt = design_prototype(fbmc.L, fbmc.overlap_factor)

    def run(t):
        return track(scenario, scenario.blind, scenario.seed, trial=t, filt=filt)

    results = _map_trials(run, scenario.trials, scenario.workers)
    traces = np.stack([r.sinr_db for r in results])
    baselines = {b: np.array([r.baselines[b] for r in results]) for b in BASELINES}
    return TrackingReport(scenario, traces, baselines)


def run_scenario(scenario):
    if scenario.experiment == "blind_tracking":
        return run_blind_tracking(scenario)
    return run_self_equalization(scenario)


@dataclass
class SweepPoint:
    axis: str
    value: object
    report: object = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


def sweep_seed(seed, index):
    """Seed of sweep point ``index``, derived from the base seed."""
    return int(np.random.SeedSequence([int(seed), 0x5EE9, int(index)]).generate_state(1)[0])


def _apply_axis(base, axis, value):
    if axis == "M":
        return base.replace(M=int(value))
    if axis == "L":
        return base.replace(fbmc=type(base.fbmc)(int(value), base.fbmc.overlap_factor,
                                                 base.fbmc.num_symbols, base.fbmc.pam_order))
    if axis == "snr_in_db":
        return base.replace(snr_in_db=float(value))
    if axis == "beta":
        cont = base.contamination or ContaminationConfig()
        gains = (float(value),) * (cont.num_cells - 1)
        return base.replace(contamination=ContaminationConfig(cont.num_cells, gains,
                                                              cont.shared_pilots))
    raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def run_sweep(base, axis, values, same_seed=False):
    """Run ``base`` once per axis value.

    Each point gets its own derived seed (or the base seed when
    ``same_seed``).  A point that fails is recorded with its error message and
    the sweep continues.

    Returns
    -------
    list of SweepPoint
        In the order of ``values``.
    """
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    points = []
    for i, value in enumerate(values):
        try:
            seed = base.seed if same_seed else sweep_seed(base.seed, i)
            scenario = _apply_axis(base, axis, value).replace(seed=seed)
            log.info("sweep %s=%s", axis, value)
            points.append(SweepPoint(axis, value, run_scenario(scenario)))
        except (FbmcMimoError, ValueError, ArithmeticError) as exc:
            log.warning("sweep point %s=%s failed: %s", axis, value, exc)
            points.append(SweepPoint(axis, value, error=f"{type(exc).__name__}: {exc}"))
    return points
