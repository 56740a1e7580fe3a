import numpy as np
import pytest

from fbmc_mimo.channel import PowerDelayProfile
from fbmc_mimo.combining import ContaminationConfig
from fbmc_mimo.errors import ConfigurationError
from fbmc_mimo.experiments import (
    Scenario,
    run_blind_tracking,
    run_scenario,
    run_self_equalization,
    run_sweep,
    sweep_seed,
)
from fbmc_mimo.filterbank import FbmcConfig
from fbmc_mimo.link import multicell_layout, trial_streams


def selfeq(L=16, M=8, K=2, snr=5.0, trials=4, N=32, pdp=None, **kw):
    return Scenario(FbmcConfig(L, 4, N), pdp or PowerDelayProfile.exponential(), M, K, snr,
                    trials=trials, **kw)


def tracking(M=32, trials=2, iterations=10):
    from fbmc_mimo.blind import BlindConfig

    return Scenario(FbmcConfig(16, 4, 128), PowerDelayProfile.exponential(), M, 1, 0.0,
                    ContaminationConfig(), BlindConfig(iterations=iterations), trials=trials,
                    experiment="blind_tracking")


# -- scenario --------------------------------------------------------------

@pytest.mark.parametrize("kwargs,key", [
    ({"M": 0}, "array.M"), ({"K": 0}, "array.K"), ({"trials": 0}, "run.trials"),
    ({"workers": 0}, "run.workers"), ({"experiment": "ber"}, "run.experiment"),
])
def test_scenario_validation_names_key(kwargs, key):
    with pytest.raises(ConfigurationError, match=key):
        selfeq(**kwargs)


def test_scenario_rejects_long_channel():
    with pytest.raises(ConfigurationError, match="channel.delays"):
        selfeq(pdp=PowerDelayProfile((0, 20), (1, 1)))


def test_blind_tracking_scenario_fills_defaults():
    s = selfeq(experiment="blind_tracking")
    assert s.contamination == ContaminationConfig()
    assert s.blind is not None and s.blind.step_size == 0.3


# -- random streams --------------------------------------------------------

def test_trial_streams_independent_and_reproducible():
    a, b = trial_streams(1, 0), trial_streams(1, 0)
    assert a["data"].standard_normal() == b["data"].standard_normal()
    c = trial_streams(1, 1)
    assert trial_streams(1, 0)["data"].standard_normal() != c["data"].standard_normal()
    d = trial_streams(1, 0)
    assert d["data"].standard_normal() != d["noise"].standard_normal()


def test_multicell_layout():
    gains, slots, n = multicell_layout(2, ContaminationConfig(3, (0.5,)))
    assert gains.tolist() == [1, 1, 0.5, 0.5, 0.5, 0.5]
    assert slots == [0, 1, 0, 1, 0, 1] and n == 2
    gains, slots, n = multicell_layout(2, ContaminationConfig(3, (0.5,), shared_pilots=False))
    assert slots == [0, 1, 2, 3, 4, 5] and n == 6


# -- self-equalization -----------------------------------------------------

def test_report_shapes():
    s = selfeq(trials=3)
    r = run_self_equalization(s)
    for c in ("mf", "mmse"):
        assert r.per_trial[c].shape == (3, 16)
        assert r.per_user[c].shape == (3, 2, 16)
        assert r.mean[c].shape == (16,)
        assert r.dispersion(c).shape == (3,)
    assert r.target_sinr_db == pytest.approx(5 + 10 * np.log10(8))
    assert set(r.summary()) == {"target_sinr_db", "mf", "mmse"}


def test_degenerate_array_combiners_coincide():
    s = selfeq(M=1, K=1, snr=10.0, pdp=PowerDelayProfile.flat(), trials=5, N=64)
    r = run_self_equalization(s)
    assert np.max(np.abs(r.mean["mf"] - r.mean["mmse"])) < 0.1


def test_reports_reproducible_and_worker_independent():
    a = run_self_equalization(selfeq(seed=5))
    b = run_self_equalization(selfeq(seed=5, workers=3))
    for c in ("mf", "mmse"):
        assert np.array_equal(a.per_user[c], b.per_user[c])
    other = run_self_equalization(selfeq(seed=6))
    assert not np.array_equal(a.per_user["mf"], other.per_user["mf"])


def test_mmse_not_worse_than_mf_on_average():
    r = run_self_equalization(selfeq(M=16, K=4, trials=6))
    assert np.all(r.mean["mmse"] >= r.mean["mf"])


# -- blind tracking --------------------------------------------------------

def test_tracking_report():
    r = run_blind_tracking(tracking(trials=3, iterations=8))
    assert r.traces.shape == (3, 8)
    assert all(v.shape == (3,) for v in r.baselines.values())
    s = r.summary()
    assert s["iterations"] == 8
    assert s["median_initial_sinr_db"] == pytest.approx(r.median_baselines["mf_noisy"])
    cross = r.crossing_iteration()
    assert cross is None or 0 <= cross < 8


def test_tracking_worker_independent():
    a = run_scenario(tracking())
    b = run_scenario(tracking().replace(workers=2))
    assert np.array_equal(a.traces, b.traces)


# -- sweeps ----------------------------------------------------------------

def test_empty_sweep():
    assert run_sweep(selfeq(), "M", []) == []


def test_unknown_axis():
    with pytest.raises(ConfigurationError):
        run_sweep(selfeq(), "N", [1])


def test_sweep_records_failures_and_continues():
    pts = run_sweep(selfeq(trials=1), "L", [16, 12, 32])
    assert [p.ok for p in pts] == [True, False, True]
    assert "power of two" in pts[1].error
    assert pts[2].report.per_trial["mf"].shape == (1, 32)


def test_sweep_seeds_derived_per_point():
    pts = run_sweep(selfeq(trials=1, seed=3), "snr_in_db", [0.0, 0.0])
    assert pts[0].report.scenario.seed == sweep_seed(3, 0)
    assert pts[1].report.scenario.seed == sweep_seed(3, 1) != sweep_seed(3, 0)
    same = run_sweep(selfeq(trials=1, seed=3), "snr_in_db", [0.0, 0.0], same_seed=True)
    assert np.array_equal(same[0].report.per_user["mf"], same[1].report.per_user["mf"])


def test_beta_axis_sets_all_cross_gains():
    pts = run_sweep(tracking(trials=1, iterations=2), "beta", [0.1])
    assert pts[0].report.scenario.contamination.cross_gains == (0.1,) * 6


def test_m_sweep_spreading_gain_6db_per_step():
    base = selfeq(K=1, snr=0.0, pdp=PowerDelayProfile.flat(), trials=10, N=64)
    pts = run_sweep(base, "M", [8, 32, 128])
    means = [float(np.mean(p.report.per_trial["mf"])) for p in pts]
    np.testing.assert_allclose(np.diff(means), 10 * np.log10(4), atol=1.0)


@pytest.mark.parametrize("L,N,trials", [(16, 256, 20), (64, 256, 20), (256, 128, 8)])
def test_self_equalization_dispersion_shrinks_with_m(L, N, trials):
    base = selfeq(L=L, K=1, snr=0.0, trials=trials, N=N)
    pts = run_sweep(base, "M", [8, 32, 128])
    disp = [float(np.median(p.report.dispersion("mf"))) for p in pts]
    assert disp[0] >= disp[1] >= disp[2]
