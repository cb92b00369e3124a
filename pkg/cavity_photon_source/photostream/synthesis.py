"""Click-stream synthesis: chain losses, routing, jitter and detector noise."""

from typing import Iterable, List, Optional

import numpy as np
import structlog

from ..utils.seeding import Seed, keyed_rng
from .interferometer import route_hbt, route_hom
from .models import (
    FLAG_IN_REPUMP_WINDOW,
    PS_PER_S,
    ClickOrigin,
    ClickStream,
    EfficiencyChain,
    InterferometerConfig,
    PhotonBatch,
    PulseSchedule,
)

logger = structlog.get_logger(__name__)

N_DETECTORS = 2


def _dark_times(rate: float, schedule: PulseSchedule, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(rate * schedule.gate_duration)
    return schedule.gate_start + rng.random(n) * schedule.gate_duration


def _repump_background_times(rate: float, schedule: PulseSchedule, rng: np.random.Generator) -> np.ndarray:
    mean = rate * schedule.repump_duration * schedule.pulses_per_gate
    n = rng.poisson(mean)
    slots = rng.integers(0, schedule.pulses_per_gate, n)
    return (
        schedule.gate_start
        + slots * schedule.period
        + schedule.repump_start
        + rng.random(n) * schedule.repump_duration
    )


def _shot_clicks(
    shot: int,
    photons: PhotonBatch,
    chain: EfficiencyChain,
    schedule: PulseSchedule,
    interferometer: InterferometerConfig,
    rng: np.random.Generator,
) -> ClickStream:
    survived = photons.select(rng.random(len(photons)) < chain.total)

    if interferometer.kind == "HOM":
        routing = route_hom(survived, interferometer, schedule, rng)
        survived_keep = routing.keep
        detector = routing.detector[survived_keep]
        delay = routing.delay[survived_keep]
        survived = survived.select(survived_keep)
    else:
        detector = route_hbt(survived, rng, interferometer.bs_reflectivity)
        delay = np.zeros(len(survived))

    t_photon = (
        schedule.slot_start(schedule.first_gate_slot + survived.pulse_index)
        + survived.t_emit
        + delay
        + rng.normal(0.0, 1.0, len(survived)) * chain.detector_jitter_sigma
    )
    times: List[np.ndarray] = [t_photon]
    detectors: List[np.ndarray] = [detector]
    origins: List[np.ndarray] = [np.full(len(survived), ClickOrigin.PHOTON, dtype=np.uint8)]

    for d in range(N_DETECTORS):
        dark = _dark_times(chain.dark_rate_hz, schedule, rng)
        background = _repump_background_times(chain.repump_background_rate_hz, schedule, rng)
        times += [dark, background]
        detectors += [np.full(dark.size, d, np.uint8), np.full(background.size, d, np.uint8)]
        origins += [
            np.full(dark.size, ClickOrigin.DARK, np.uint8),
            np.full(background.size, ClickOrigin.REPUMP_BACKGROUND, np.uint8),
        ]

    t_in_shot = np.concatenate(times)
    in_gate = schedule.in_gate(t_in_shot)
    t_in_shot = t_in_shot[in_gate]
    flags = np.where(schedule.in_repump_window(t_in_shot), FLAG_IN_REPUMP_WINDOW, 0).astype(np.uint8)
    t_abs = schedule.absolute_time(np.full(t_in_shot.size, shot), t_in_shot)
    return ClickStream(
        t_ps=np.rint(t_abs * PS_PER_S).astype(np.uint64),
        detector=np.concatenate(detectors)[in_gate],
        pulse_index=schedule.pulse_index(t_in_shot),
        shot_index=np.full(t_in_shot.size, shot, dtype=np.uint32),
        flags=flags,
        origin=np.concatenate(origins)[in_gate],
    )


def synthesize_clicks(
    photons: PhotonBatch,
    chain: EfficiencyChain,
    schedule: PulseSchedule,
    rng_seed: Seed,
    interferometer: Optional[InterferometerConfig] = None,
    shots: Optional[Iterable[int]] = None,
) -> ClickStream:
    """
    Turn emitted photons into a sorted, merged click stream.

    Each photon survives with probability chain.total, is routed by the
    interferometer and time-stamped at its emission time plus Gaussian
    jitter. Every detector adds homogeneous dark counts over the gate and,
    when configured, scatter background inside repump windows. Clicks
    outside the gate are discarded.

    Args:
        photons: Cavity photons with pulse indices counted from the gate start
        chain: Efficiency and noise model
        schedule: Pulse timing
        rng_seed: Run seed; shot k draws from the stream keyed by (seed, k)
        interferometer: HBT (default) or HOM setup
        shots: Shots to synthesize, including photon-free ones that only
            contribute noise; defaults to the shots present in ``photons``

    Returns:
        ClickStream sorted by time
    """
    interferometer = interferometer or InterferometerConfig()
    order = np.argsort(photons.shot_index, kind="stable")
    photons = photons.select(order)
    if shots is None:
        shots = np.unique(photons.shot_index)

    streams = []
    for shot in shots:
        lo, hi = np.searchsorted(photons.shot_index, [shot, shot + 1])
        rng = keyed_rng(rng_seed, int(shot))
        streams.append(
            _shot_clicks(int(shot), photons.select(slice(lo, hi)), chain, schedule, interferometer, rng)
        )
    stream = ClickStream.merge(streams)

    logger.info(
        "clicks_synthesized",
        photons=len(photons),
        clicks=len(stream),
        interferometer=interferometer.kind,
        chain_total=chain.total,
    )
    return stream
