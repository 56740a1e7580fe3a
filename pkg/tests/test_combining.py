import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbmc_mimo.channel import (ChannelSet, PowerDelayProfile, apply_channel, draw_channels,
                               frequency_response, noise_variance)
from fbmc_mimo.combining import (
    ChannelEstimate,
    ContaminationConfig,
    PilotPlan,
    check_slot_assignment,
    combine,
    estimate_channels,
    mf_combiner,
    mmse_combiner,
    perfect_estimate,
    pilot_sequence,
    target_sinr_db,
)
from fbmc_mimo.errors import ConfigurationError, NumericalError, ShapeError, SingularityError
from fbmc_mimo.filterbank import FbmcConfig, analyze, design_prototype, synthesize
from fbmc_mimo.link import simulate_uplink, trial_streams
from fbmc_mimo.metrics import measure_sinr
from oracles import mmse_normal_equations

CFG = FbmcConfig(16, 4, 32)
FILT = design_prototype(16, 4)


def pilot_phase(channels, slots, snr_in_db=None, seed=0, home=None, contamination=None):
    num_slots = max(slots) + 1
    plan = PilotPlan.build(CFG, num_slots)
    tx = synthesize(plan.grids(slots), plan.fbmc, FILT)
    rx = apply_channel(tx, channels, snr_in_db, seed)
    received = analyze(rx, plan.fbmc, FILT, project=False)
    home = slots if home is None else home
    nv = 0.0 if snr_in_db is None else float(noise_variance(snr_in_db))
    return estimate_channels(received, plan, FILT, home, nv, contamination), plan


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# -- contamination config and pilots ---------------------------------------

def test_contamination_defaults():
    c = ContaminationConfig()
    assert c.num_cells == 7 and c.cross_gains == (0.3,) * 6 and c.shared_pilots
    assert c.cell_gains[0] == 1.0 and len(c.cell_gains) == 7


def test_contamination_broadcasts_single_gain():
    assert ContaminationConfig(4, (0.5,)).cross_gains == (0.5, 0.5, 0.5)


@pytest.mark.parametrize("kwargs", [
    {"num_cells": 0}, {"cross_gains": (1.5,)}, {"cross_gains": (-0.1,)},
    {"num_cells": 3, "cross_gains": (0.1, 0.2, 0.3)},
])
def test_contamination_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ContaminationConfig(**kwargs)


def test_pilot_sequence_pattern():
    np.testing.assert_array_equal(pilot_sequence(8), [1, 1, -1, -1, 1, 1, -1, -1])


def test_pilot_plan_columns_do_not_overlap():
    plan = PilotPlan.build(CFG, 3)
    cols = [plan.column(s) for s in range(3)]
    assert np.all(np.diff(cols) == 2 * CFG.overlap_factor)
    assert plan.fbmc.num_symbols == 2 * CFG.overlap_factor * 3 + 1
    with pytest.raises(ConfigurationError):
        plan.column(3)


def test_pseudo_pilots_real_part_is_pilot():
    plan = PilotPlan.build(CFG, 2)
    q = plan.pseudo_pilots(FILT)
    np.testing.assert_allclose(q.real, np.tile(pilot_sequence(16), (2, 1)), atol=1e-3)
    assert np.all(np.abs(q) > 1.0)


def test_slot_collision_within_cell_rejected():
    with pytest.raises(ConfigurationError, match="collision"):
        check_slot_assignment([[0, 1], [0, 0]])
    check_slot_assignment([[0, 1], [0, 1]])


# -- estimation ------------------------------------------------------------

def test_noise_free_flat_estimate_exact():
    ch = draw_channels(PowerDelayProfile.flat(), 4, 3, seed=1)
    est, _ = pilot_phase(ch, [0, 1, 2])
    np.testing.assert_allclose(est.gains, frequency_response(ch, 16), atol=1e-10)
    assert not est.contaminated


def test_noise_free_selective_estimate_close():
    ch = draw_channels(PowerDelayProfile.exponential(), 8, 2, seed=2)
    est, _ = pilot_phase(ch, [0, 1])
    true = frequency_response(ch, 16)
    err = np.mean(np.abs(est.gains - true) ** 2) / np.mean(np.abs(true) ** 2)
    assert 10 * np.log10(err) < -20


def test_shared_pilot_estimate_is_sum_of_channels():
    ch = draw_channels(PowerDelayProfile.flat(), 4, 2, cell_gains=[1.0, 1.0], seed=3)
    cont = ContaminationConfig(2, (1.0,))
    est, _ = pilot_phase(ch, [0, 0], home=[0], contamination=cont)
    H = frequency_response(ch, 16)
    np.testing.assert_allclose(est.gains[:, 0], H[:, 0] + H[:, 1], atol=1e-10)
    assert est.contaminated and est.contamination_terms == ((1, 1.0),)


def test_separate_slots_remove_contamination():
    ch = draw_channels(PowerDelayProfile.flat(), 4, 2, cell_gains=[1.0, 0.3], seed=3)
    cont = ContaminationConfig(2, (0.3,), shared_pilots=False)
    est, _ = pilot_phase(ch, [0, 1], home=[0], contamination=cont)
    np.testing.assert_allclose(est.gains[:, 0], frequency_response(ch, 16)[:, 0], atol=1e-10)
    assert not est.contaminated


def test_ls_error_variance_matches_prediction():
    # white noise of variance s2 leaves the unit-energy analysis bank with
    # variance 2*s2; dividing by the pseudo-pilot q gives 2*s2/|q|^2
    M = 2000
    ch = ChannelSet(np.ones((M, 1, 1), complex), (0,), np.ones(1))
    errs = []
    for seed in range(5):
        est, plan = pilot_phase(ch, [0], snr_in_db=10.0, seed=seed)
        errs.append(est.gains[:, 0] - 1.0)
    errs = np.concatenate(errs)  # (10^4, L)
    q = plan.pseudo_pilots(FILT)[0]
    predicted = 2 * 0.1 / np.abs(q) ** 2
    np.testing.assert_allclose(np.mean(np.abs(errs) ** 2, axis=0), predicted, rtol=0.1)
    assert abs(np.mean(errs)) < 0.01  # unbiased


def test_estimate_shape_check():
    plan = PilotPlan.build(CFG, 1)
    with pytest.raises(ShapeError):
        estimate_channels(np.zeros((2, 16, 5), complex), plan, FILT, [0])


# -- combiners -------------------------------------------------------------

def test_mf_scalar_identity():
    w = mf_combiner(np.ones((1, 1, 1), complex))
    assert w.shape == (1, 1, 1) and w[0, 0, 0] == 1


def test_mf_conjugates():
    h = np.array([1, 1j]).reshape(2, 1, 1)
    w = mf_combiner(h)[0, 0]
    np.testing.assert_allclose(w / w[0], [1, -1j])


def test_mf_unit_gain_and_proportionality(rng):
    H = complex_gaussian(rng, (64, 3, 8))
    W = mf_combiner(ChannelEstimate(H))
    gain = np.einsum("klm,mkl->kl", W, H)
    np.testing.assert_allclose(gain, 1.0, atol=1e-12)
    ratio = W / np.conj(np.transpose(H, (1, 2, 0)))
    np.testing.assert_allclose(ratio, ratio[..., :1] * np.ones(64), rtol=1e-12)


def test_mf_zero_channel_names_slot():
    H = np.ones((4, 2, 8), complex)
    H[:, 1, 5] = 0
    with pytest.raises(SingularityError, match="user 1 on subcarrier 5"):
        mf_combiner(H)


def test_mmse_scalar_closed_form():
    w = mmse_combiner(np.ones((1, 1, 1), complex), 0.25)
    assert w[0, 0, 0] == pytest.approx(1 / 1.25, abs=1e-15)


def test_mmse_matches_normal_equations(rng):
    H = complex_gaussian(rng, (4, 2, 6))
    W = mmse_combiner(H, 0.3)
    for l in range(6):
        np.testing.assert_allclose(W[:, l], mmse_normal_equations(H[:, :, l], 0.3), atol=1e-10)


def test_mmse_large_noise_tends_to_mf(rng):
    H = complex_gaussian(rng, (8, 3, 4))
    W = mmse_combiner(H, 1e8)
    V = mf_combiner(H)
    cos = np.abs(np.sum(W * np.conj(V), -1)) / (np.linalg.norm(W, axis=-1) * np.linalg.norm(V, axis=-1))
    np.testing.assert_allclose(cos, 1.0, atol=1e-6)


def test_mmse_single_user_is_regularized_mf(rng):
    H = complex_gaussian(rng, (8, 1, 4))
    W = mmse_combiner(H, 0.5)
    energy = np.sum(np.abs(H[:, 0]) ** 2, axis=0)
    np.testing.assert_allclose(W[0], (np.conj(H[:, 0]) / (energy + 0.5)).T, atol=1e-12)


def test_mmse_user_subset(rng):
    H = complex_gaussian(rng, (8, 3, 4))
    np.testing.assert_array_equal(mmse_combiner(H, 0.1, users=[2]), mmse_combiner(H, 0.1)[[2]])


def test_mmse_errors(rng):
    H = complex_gaussian(rng, (4, 2, 2))
    for nv in (0.0, -1.0):
        with pytest.raises(ConfigurationError):
            mmse_combiner(H, nv)
    H[0, 0, 0] = np.nan
    with pytest.raises(NumericalError):
        mmse_combiner(H, 0.1)


def test_combine_matches_explicit_sum(rng):
    X = complex_gaussian(rng, (5, 4, 7))
    W = complex_gaussian(rng, (2, 4, 5))
    z = combine(X, W)
    ref = np.zeros((2, 4, 7))
    for k in range(2):
        for l in range(4):
            for n in range(7):
                ref[k, l, n] = np.real(sum(W[k, l, m] * X[m, l, n] for m in range(5)))
    np.testing.assert_allclose(z, ref, atol=1e-13)


def test_combine_zero_weights_and_shapes(rng):
    X = complex_gaussian(rng, (3, 4, 6))
    assert not np.any(combine(X, np.zeros((1, 4, 3))))
    with pytest.raises(ShapeError):
        combine(X, np.zeros((1, 4, 2)))


def test_single_antenna_passthrough():
    ch = ChannelSet(np.ones((1, 1, 1), complex), (0,), np.ones(1))
    data = simulate_uplink(CFG, FILT, ch, None, trial_streams(0, 0))
    z = combine(data.outputs, mf_combiner(perfect_estimate(data.freq)))
    ss = CFG.steady
    err = np.mean((z[0][:, ss] - data.grids[0][:, ss]) ** 2)
    assert 10 * np.log10(err) < -50


def test_two_antenna_array_gain_3db():
    gains = []
    for M in (1, 2):
        vals = []
        for t in range(100):
            ch = ChannelSet(np.ones((M, 1, 1), complex), (0,), np.ones(1))
            data = simulate_uplink(CFG, FILT, ch, 0.0, trial_streams(11, t))
            z = combine(data.outputs, mf_combiner(perfect_estimate(data.freq)))
            ss = CFG.steady
            vals.append(np.mean(measure_sinr(z[:, :, ss], data.grids[:, :, ss])))
        gains.append(np.mean(vals))
    assert gains[1] - gains[0] == pytest.approx(3.0103, abs=0.2)


@given(c=st.floats(0.01, 100))
def test_scaling_channels_and_noise_keeps_sinr(c):
    pdp = PowerDelayProfile.exponential()
    ch = draw_channels(pdp, 8, 2, seed=9)
    out = {}
    for scale in (1.0, c):
        rngs = trial_streams(3, 0)
        data = simulate_uplink(CFG, FILT, ch.scaled(scale), -20 * np.log10(scale), rngs)
        est = perfect_estimate(data.freq)
        nv = noise_variance(0.0) * scale ** 2
        ss = CFG.steady
        out[scale] = [measure_sinr(combine(data.outputs, w)[:, :, ss], data.grids[:, :, ss])
                      for w in (mf_combiner(est), mmse_combiner(est, nv))]
    for a, b in zip(out[1.0], out[c]):
        np.testing.assert_allclose(a, b, atol=1e-9)


# -- target law ------------------------------------------------------------

def test_target_sinr_values():
    assert target_sinr_db(-1.07, 128) == pytest.approx(20.0, abs=0.005)
    assert target_sinr_db(0.0, 1) == 0.0
    assert target_sinr_db(0.0, 100) == pytest.approx(20.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        target_sinr_db(0.0, 0)
