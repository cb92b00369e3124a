"""
Beam-splitter routing of detected photons onto D1/D2.

HBT: every photon picks a detector independently. HOM: the photon of an
early pulse is delayed by whole pulse periods onto the photon of the
matching late pulse. Each pair draws a static frequency offset
Δ ~ N(0, σ_Δ); with both detection times sampled from the single-photon
shapes, the pair is split over both detectors with probability

    p = ½ |A - B|² / (|A|² + |B|²)
    A = ψa(ta) ψb(tb) e^{iΔ tb},  B = ψa(tb) ψb(ta) e^{iΔ ta}

and otherwise bunches onto one detector. Orthogonal polarizations give
p = ½ regardless of timing.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
import structlog

from ..utils.seeding import Seed, make_rng
from .models import Detector, InterferometerConfig, PhotonBatch, PulseSchedule

logger = structlog.get_logger(__name__)

RngLike = Union[Seed, np.random.Generator]


def _as_rng(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(rng)


def route_hbt(photons: Union[PhotonBatch, int], rng_seed: RngLike, reflectivity: float = 0.5) -> np.ndarray:
    """Independent detector choice per photon; D2 with probability ``reflectivity``."""
    n = photons if isinstance(photons, int) else len(photons)
    rng = _as_rng(rng_seed)
    return np.where(rng.random(n) < reflectivity, Detector.D2, Detector.D1).astype(np.uint8)


@dataclass(frozen=True)
class HomRouting:
    """Per-photon routing decisions of one HOM pass."""

    detector: np.ndarray
    delay: np.ndarray
    keep: np.ndarray
    pairs: int
    coincidences: int
    dropped_unpaired: int


def two_photon_coincidence_probability(
    psi_a_ta: np.ndarray,
    psi_a_tb: np.ndarray,
    psi_b_ta: np.ndarray,
    psi_b_tb: np.ndarray,
    ta: np.ndarray,
    tb: np.ndarray,
    delta: np.ndarray,
) -> np.ndarray:
    """Probability that an indistinguishable pair with these detection times splits."""
    a = psi_a_ta * psi_b_tb * np.exp(1j * delta * tb)
    b = psi_a_tb * psi_b_ta * np.exp(1j * delta * ta)
    norm = np.abs(a) ** 2 + np.abs(b) ** 2
    safe = np.where(norm > 0, norm, 1.0)
    return np.where(norm > 0, 0.5 * np.abs(a - b) ** 2 / safe, 0.5)


def route_hom(
    photons: PhotonBatch,
    config: InterferometerConfig,
    schedule: PulseSchedule,
    rng_seed: RngLike,
) -> HomRouting:
    """
    Pair photons of successive pulses on the beam splitter.

    Pulses are grouped in blocks of 2k (k = delay in periods): pulse i of a
    block pairs with pulse i + k. Photons in the incomplete block at the end
    of the gate have no partner pulse and are dropped.

    Args:
        photons: Photons that survived the detection chain
        config: HOM configuration
        schedule: Pulse timing
        rng_seed: Seed or generator

    Returns:
        HomRouting with per-photon detector, delay and keep mask
    """
    rng = _as_rng(rng_seed)
    k = config.delay_periods(schedule.period)
    n = len(photons)
    detector = np.zeros(n, dtype=np.uint8)
    delay = np.zeros(n)
    keep = np.ones(n, dtype=bool)
    if n == 0:
        return HomRouting(detector, delay, keep, 0, 0, 0)

    block = 2 * k
    usable_pulses = (schedule.pulses_per_gate // block) * block
    keep = photons.pulse_index < usable_pulses
    dropped = int(n - keep.sum())

    early = keep & (photons.pulse_index % block < k)
    delay[early] = k * schedule.period

    # first photon of each (shot, pulse) takes part in a pair; extras route like HBT
    key = photons.shot_index.astype(np.int64) * (1 << 32) + photons.pulse_index.astype(np.int64)
    order = np.lexsort((np.arange(n), key))
    sorted_key = key[order]
    first = np.ones(n, dtype=bool)
    first[order[1:]] = sorted_key[1:] != sorted_key[:-1]

    early_rows = np.nonzero(early & first)[0]
    partner_key = key[early_rows] + k
    unique_keys = sorted_key[first[order]]
    unique_rows = order[first[order]]
    pos = np.searchsorted(unique_keys, partner_key)
    found = (pos < unique_keys.size) & (unique_keys[np.minimum(pos, unique_keys.size - 1)] == partner_key)
    rows_a = early_rows[found]
    rows_b = unique_rows[pos[found]]
    found_b = keep[rows_b]
    rows_a, rows_b = rows_a[found_b], rows_b[found_b]

    paired = np.zeros(n, dtype=bool)
    paired[rows_a] = True
    paired[rows_b] = True
    singles = np.nonzero(~paired)[0]
    detector[singles] = route_hbt(singles.size, rng, config.bs_reflectivity)

    n_pairs = rows_a.size
    if config.polarization == "perpendicular":
        p_split = np.full(n_pairs, 0.5)
    else:
        ta = photons.t_emit[rows_a]
        tb = photons.t_emit[rows_b]
        delta = rng.normal(0.0, config.sigma_delta, n_pairs) if config.sigma_delta > 0 else np.zeros(n_pairs)
        p_split = two_photon_coincidence_probability(
            photons.amplitude(rows_a, ta),
            photons.amplitude(rows_a, tb),
            photons.amplitude(rows_b, ta),
            photons.amplitude(rows_b, tb),
            ta,
            tb,
            delta,
        )
    split = rng.random(n_pairs) < p_split
    first_det = rng.integers(0, 2, n_pairs).astype(np.uint8)
    detector[rows_a] = first_det
    detector[rows_b] = np.where(split, 1 - first_det, first_det).astype(np.uint8)

    logger.debug(
        "hom_routed",
        photons=n,
        pairs=int(n_pairs),
        coincidences=int(split.sum()),
        dropped_unpaired=dropped,
    )
    return HomRouting(
        detector=detector,
        delay=delay,
        keep=keep,
        pairs=int(n_pairs),
        coincidences=int(split.sum()),
        dropped_unpaired=dropped,
    )
