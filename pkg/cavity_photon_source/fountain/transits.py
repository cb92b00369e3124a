"""
Monte Carlo of atom transits through the cavity mode.

Each shot launches a cloud from the MOT at z = -launch_height. Only atoms
whose ballistic path comes within the clip radius R of the mode axis
(exp(-(y²+z²)/w0²) ≥ 0.01) are kept; their number per shot is Poisson with
mean ``atom_flux`` (or exactly ``round(atom_flux)``). Entering atoms are
drawn by rejection from the launch distribution, so their velocity and
position statistics are those of the cloud conditioned on reaching the mode.

An atom whose apex lies above the clip band crosses it twice, rising and
falling, and yields up to two transits.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..qsim.models import LambdaSystemParams
from ..utils.error_handler import InsufficientStatisticsError
from ..utils.seeding import Seed, keyed_rng
from .kinematics import launch_velocity, thermal_velocity_sigma
from .models import AtomTransit, LaunchConfig, ModeGeometry

logger = structlog.get_logger(__name__)

CLIP_LEVEL = 0.01
DEFAULT_PULSE_PERIOD = 1e-6
_CANDIDATE_BATCH = 512
_CHECK_POINTS = 33
_MAX_BATCHES = 10_000

ShotTransits = List[AtomTransit]


def clip_radius(mode: ModeGeometry) -> float:
    """Transverse distance at which the mode envelope falls to CLIP_LEVEL."""
    return mode.waist_w0 * math.sqrt(-math.log(CLIP_LEVEL))


def _draw_candidates(launch: LaunchConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    """Initial (x, y, z, vx, vy, vz) rows of ``n`` launched atoms."""
    sigma_r = launch.cloud_radius_sigma
    sigma_v = thermal_velocity_sigma(launch.temperature)
    pos = rng.normal(0.0, 1.0, size=(n, 3)) * sigma_r
    vel = rng.normal(0.0, 1.0, size=(n, 3)) * sigma_v
    pos[:, 2] -= launch.launch_height
    vel[:, 2] += launch_velocity(launch)
    return np.hstack([pos, vel])


def _band_intervals(
    z0: np.ndarray, vz: np.ndarray, gravity: float, radius: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Time intervals spent with |z| ≤ radius.

    Returns:
        (intervals, valid) with intervals of shape (n, 2, 2) holding up to two
        [start, stop] pairs per atom
    """
    n = z0.size
    intervals = np.zeros((n, 2, 2))
    valid = np.zeros((n, 2), dtype=bool)

    disc_low = vz**2 + 2.0 * gravity * (z0 + radius)
    reaches = (disc_low >= 0) & (z0 < -radius)
    root_low = np.sqrt(np.where(reaches, disc_low, 0.0))
    t_in = (vz - root_low) / gravity
    t_out = (vz + root_low) / gravity

    disc_high = vz**2 + 2.0 * gravity * (z0 - radius)
    overshoots = reaches & (disc_high > 0)
    root_high = np.sqrt(np.where(overshoots, disc_high, 0.0))
    t_up = (vz - root_high) / gravity
    t_down = (vz + root_high) / gravity

    intervals[:, 0, 0] = t_in
    intervals[:, 0, 1] = np.where(overshoots, t_up, t_out)
    intervals[:, 1, 0] = t_down
    intervals[:, 1, 1] = t_out
    valid[:, 0] = reaches & (t_in >= 0)
    valid[:, 1] = overshoots & (t_in >= 0)
    return intervals, valid


def _positions(state: np.ndarray, t: np.ndarray, gravity: float) -> Tuple[np.ndarray, ...]:
    """Ballistic (x, y, z, vz) at times ``t``; ``state`` broadcasts against ``t``."""
    x0, y0, z0, vx, vy, vz0 = (state[..., i] for i in range(6))
    x = x0 + vx * t
    y = y0 + vy * t
    z = z0 + vz0 * t - 0.5 * gravity * t**2
    vz = vz0 - gravity * t
    return x, y, z, vz


def _accept(
    states: np.ndarray, intervals: np.ndarray, valid: np.ndarray, gravity: float, radius: float
) -> np.ndarray:
    """Candidates that come within ``radius`` of the axis inside a band interval."""
    frac = np.linspace(0.0, 1.0, _CHECK_POINTS)
    starts, stops = intervals[..., 0], intervals[..., 1]
    t = starts[..., None] + (stops - starts)[..., None] * frac
    _, y, z, _ = _positions(states[:, None, None, :], t, gravity)
    inside = (y**2 + z**2 <= radius**2).any(axis=-1) & valid
    return inside.any(axis=1)


def _transit_on_grid(
    state: np.ndarray,
    start: float,
    stop: float,
    launch: LaunchConfig,
    mode: ModeGeometry,
    g0: float,
    pulse_period: float,
    shot_index: int,
    atom_index: int,
) -> Optional[AtomTransit]:
    first = math.ceil(start / pulse_period)
    last = math.floor(stop / pulse_period)
    if last < first:
        return None
    slots = np.arange(first, last + 1, dtype=np.int64)
    t = slots * pulse_period
    x, y, z, vz = _positions(state, t, launch.gravity)
    envelope = mode.envelope(y, z)
    inside = np.nonzero(envelope >= CLIP_LEVEL)[0]
    if inside.size == 0:
        return None
    keep = slice(inside[0], inside[-1] + 1)
    in_waist = int(np.count_nonzero(envelope[keep] >= math.exp(-1.0)))
    closest = int(np.argmax(envelope[keep]))
    g_of_t = mode.coupling(g0, x[keep], y[keep], z[keep])
    return AtomTransit(
        shot_index=shot_index,
        atom_index=atom_index,
        t=t[keep],
        x=x[keep],
        y=y[keep],
        z=z[keep],
        vz=vz[keep],
        g_of_t=g_of_t,
        pulse_slot=slots[keep],
        interaction_duration=in_waist * pulse_period,
        closest_coupling=float(abs(g_of_t[closest])),
    )


def _atom_count(launch: LaunchConfig, rng: np.random.Generator) -> int:
    if launch.atom_number_distribution == "fixed":
        return int(round(launch.atom_flux))
    return int(rng.poisson(launch.atom_flux))


def sample_shot(
    launch: LaunchConfig,
    mode: ModeGeometry,
    shot_index: int,
    rng_seed: Seed,
    g0: float,
    pulse_period: float = DEFAULT_PULSE_PERIOD,
) -> ShotTransits:
    """Transits of one shot; keyed by (seed, shot_index) so shots are independent."""
    rng = keyed_rng(rng_seed, shot_index)
    n_atoms = _atom_count(launch, rng)
    if n_atoms == 0:
        return []

    radius = clip_radius(mode)
    accepted: List[np.ndarray] = []
    accepted_intervals: List[np.ndarray] = []
    accepted_valid: List[np.ndarray] = []
    found = 0
    for _ in range(_MAX_BATCHES):
        states = _draw_candidates(launch, rng, _CANDIDATE_BATCH)
        intervals, valid = _band_intervals(states[:, 2], states[:, 5], launch.gravity, radius)
        ok = _accept(states, intervals, valid, launch.gravity, radius)
        accepted.append(states[ok])
        accepted_intervals.append(intervals[ok])
        accepted_valid.append(valid[ok])
        found += int(ok.sum())
        if found >= n_atoms:
            break
    else:
        raise InsufficientStatisticsError(
            f"no launched atom reaches the mode after {_MAX_BATCHES * _CANDIDATE_BATCH} draws; "
            "check launch_height, detuning and cloud parameters"
        )

    states = np.concatenate(accepted)[:n_atoms]
    intervals = np.concatenate(accepted_intervals)[:n_atoms]
    valid = np.concatenate(accepted_valid)[:n_atoms]

    transits: ShotTransits = []
    for atom_index in range(n_atoms):
        for branch in range(2):
            if not valid[atom_index, branch]:
                continue
            start, stop = intervals[atom_index, branch]
            transit = _transit_on_grid(
                states[atom_index], start, stop, launch, mode, g0, pulse_period, shot_index, atom_index
            )
            if transit is not None:
                transits.append(transit)
    return transits


def sample_transits(
    launch: LaunchConfig,
    mode: ModeGeometry,
    n_shots: int,
    rng_seed: Seed,
    g0: Optional[float] = None,
    pulse_period: float = DEFAULT_PULSE_PERIOD,
    first_shot: int = 0,
) -> List[ShotTransits]:
    """
    Transits for ``n_shots`` consecutive shots.

    Args:
        launch: Cloud and launch parameters
        mode: Cavity mode geometry
        n_shots: Number of shots
        rng_seed: Run seed; shot k uses the stream keyed by (seed, k)
        g0: Peak coupling (defaults to LambdaSystemParams().g0)
        pulse_period: Grid spacing of the returned transits
        first_shot: Index of the first shot

    Returns:
        One list of AtomTransit per shot
    """
    if g0 is None:
        g0 = LambdaSystemParams().g0
    shots = [
        sample_shot(launch, mode, first_shot + k, rng_seed, g0, pulse_period) for k in range(n_shots)
    ]
    n_transits = sum(len(s) for s in shots)
    logger.info(
        "transits_sampled",
        shots=n_shots,
        transits=n_transits,
        atom_flux=launch.atom_flux,
        temperature=launch.temperature,
    )
    return shots


def overlap_fraction(shots: Sequence[Sequence[AtomTransit]]) -> float:
    """Fraction of transits overlapping in time with a transit of another atom in the same shot."""
    total = 0
    overlapping = 0
    for transits in shots:
        total += len(transits)
        if len(transits) < 2:
            continue
        for i, a in enumerate(transits):
            if any(
                b.atom_index != a.atom_index and a.t_enter <= b.t_exit and b.t_enter <= a.t_exit
                for j, b in enumerate(transits)
                if j != i
            ):
                overlapping += 1
    return overlapping / total if total else 0.0


def calibrate_atom_flux(
    launch: LaunchConfig,
    mode: ModeGeometry,
    target_fraction: float,
    n_pairs: int = 2000,
    rng_seed: Seed = 0,
    g0: Optional[float] = None,
    pulse_period: float = DEFAULT_PULSE_PERIOD,
) -> float:
    """
    Mean entering-atom number per shot giving a target two-atom overlap fraction.

    With Poisson loading a transit meets Poisson(μ) other atoms, each
    overlapping it with probability q, so f = 1 - exp(-μ·q). q is measured
    from ``n_pairs`` shots holding exactly two atoms.

    Raises:
        InsufficientStatisticsError: no overlapping pair was observed
    """
    if not 0.0 < target_fraction < 1.0:
        raise ValueError(f"target_fraction must lie in (0, 1), got {target_fraction}")
    pairs = launch.model_copy(update={"atom_flux": 2.0, "atom_number_distribution": "fixed"})
    shots = sample_transits(pairs, mode, n_pairs, rng_seed, g0=g0, pulse_period=pulse_period)
    q = overlap_fraction(shots)
    if q <= 0.0:
        raise InsufficientStatisticsError(
            f"no overlapping transits in {n_pairs} two-atom shots; increase n_pairs"
        )
    mu = -math.log1p(-target_fraction) / q
    logger.info("atom_flux_calibrated", target_fraction=target_fraction, pair_overlap=q, atom_flux=mu)
    return mu

