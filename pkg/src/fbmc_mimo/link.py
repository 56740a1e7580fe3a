"""One Monte Carlo realization of the uplink: modulate, propagate, analyze.

Random streams: trial ``t`` of a run seeded with ``seed`` draws from
``numpy.random.SeedSequence([seed, t])``, spawned into independent children
for data symbols, channels, data-phase noise and pilot-phase noise.  Results
therefore depend only on ``(seed, t)``, never on execution order.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, apply_channel, draw_channels, frequency_response, noise_variance
from .combining import PilotPlan, check_slot_assignment, estimate_channels
from .filterbank import analyze, random_grid, synthesize

STREAMS = ("data", "channel", "noise", "pilot_noise")


def trial_streams(seed, trial):
    children = np.random.SeedSequence([int(seed), int(trial)]).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


@dataclass(eq=False)
class UplinkTrial:
    grids: np.ndarray  # (users, L, N) transmitted symbols
    channels: ChannelSet
    freq: np.ndarray  # (M, users, L)
    outputs: np.ndarray  # (M, L, N) complex analysis outputs
    noise_var: float


def simulate_uplink(fbmc, filt, channels, snr_in_db, rngs):
    """Send random PAM from every user of ``channels`` and analyze each antenna."""
    grids = random_grid(fbmc, rngs["data"], (channels.num_users,))
    tx = synthesize(grids, fbmc, filt)
    rx = apply_channel(tx, channels, snr_in_db, rngs["noise"])
    outputs = analyze(rx, fbmc, filt, project=False)
    return UplinkTrial(
        grids=grids,
        channels=channels,
        freq=frequency_response(channels, fbmc.L),
        outputs=outputs,
        noise_var=float(noise_variance(snr_in_db)) if snr_in_db is not None else 0.0,
    )


def multicell_layout(K, contamination):
    """Cell gains and pilot slots of all users, home cell first.

    User ``c*K + k`` is user ``k`` of cell ``c``.  With shared pilots every cell
    reuses slots ``0..K-1``; otherwise each cell gets its own block of slots.
    """
    cells = contamination.num_cells
    gains = np.repeat(np.asarray(contamination.cell_gains), K)
    if contamination.shared_pilots:
        slots = [k for _ in range(cells) for k in range(K)]
        num_slots = K
    else:
        slots = [c * K + k for c in range(cells) for k in range(K)]
        num_slots = K * cells
    check_slot_assignment([slots[c * K:(c + 1) * K] for c in range(cells)])
    return gains, slots, num_slots


def simulate_multicell(scenario, filt, rngs, noiseless_pilots=False):
    """Pilot phase plus data phase of a multicell uplink sharing one channel block.

    Returns
    -------
    trial : UplinkTrial
        Data phase with all users of all cells transmitting.
    estimate : ChannelEstimate
        Least-squares estimate of the home-cell users from the pilot phase.
    """
    K = scenario.K
    cont = scenario.contamination
    gains, slots, num_slots = multicell_layout(K, cont)
    channels = draw_channels(scenario.pdp, scenario.M, gains.size, gains, rngs["channel"])
    plan = PilotPlan.build(scenario.fbmc, num_slots)
    pilots = synthesize(plan.grids(slots), plan.fbmc, filt)
    pilot_snr = None if noiseless_pilots else scenario.snr_in_db
    rx_pilots = apply_channel(pilots, channels, pilot_snr, rngs["pilot_noise"])
    received = analyze(rx_pilots, plan.fbmc, filt, project=False)
    nv = float(noise_variance(scenario.snr_in_db))
    estimate = estimate_channels(received, plan, filt, slots[:K], nv, cont)
    trial = simulate_uplink(scenario.fbmc, filt, channels, scenario.snr_in_db, rngs)
    return trial, estimate
