"""Quantum-jump sampling of single pulses and the repump step between them."""

from typing import Optional, Tuple, Union

import numpy as np
import structlog

from ..utils.seeding import Seed, make_rng
from .integrator import DEFAULT_NORM_TOLERANCE, CouplingSeries, evolve_amplitudes
from .models import (
    OUTCOME_CODES,
    EmissionOutcome,
    LambdaSystemParams,
    OutcomeKind,
    PulseEnvelope,
    QuantumState,
    StateHistory,
)

logger = structlog.get_logger(__name__)

NO_EVENT = OUTCOME_CODES[OutcomeKind.NO_EVENT]
CAVITY_PHOTON = OUTCOME_CODES[OutcomeKind.CAVITY_PHOTON]
SPONTANEOUS_LOSS = OUTCOME_CODES[OutcomeKind.SPONTANEOUS_LOSS]

_KIND_BY_CODE = {code: kind for kind, code in OUTCOME_CODES.items()}


def sample_jumps(
    t: np.ndarray,
    emitted: np.ndarray,
    spont: np.ndarray,
    thresholds: np.ndarray,
    channel_draws: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Norm-threshold jump sampling from cumulative channel probabilities.

    The unnormalized no-jump norm is 1 - emitted(t) - spont(t); a trajectory
    with threshold v jumps the first time the lost norm reaches v. The jump
    time is interpolated linearly inside the crossing step and the channel is
    chosen in proportion to each channel's norm loss over that step.

    Args:
        t: Time grid, shape (N,)
        emitted: Cumulative 2κ|c_g|² integral, shape (N,)
        spont: Cumulative 2γ|c_x|² integral, shape (N,)
        thresholds: Uniform draws v, shape (n,)
        channel_draws: Uniform draws choosing the channel, shape (n,)

    Returns:
        (codes, t_emit); t_emit is NaN where nothing happened
    """
    loss = np.maximum.accumulate(emitted + spont)
    idx = np.searchsorted(loss, thresholds, side="left")
    jumped = idx < loss.size
    idx_hit = np.clip(idx, 1, loss.size - 1)

    lo, hi = loss[idx_hit - 1], loss[idx_hit]
    span = np.where(hi > lo, hi - lo, 1.0)
    frac = np.clip((thresholds - lo) / span, 0.0, 1.0)
    t_jump = t[idx_hit - 1] + frac * (t[idx_hit] - t[idx_hit - 1])

    d_em = np.maximum(emitted[idx_hit] - emitted[idx_hit - 1], 0.0)
    d_sp = np.maximum(spont[idx_hit] - spont[idx_hit - 1], 0.0)
    d_total = d_em + d_sp
    p_cavity = np.where(d_total > 0, d_em / np.where(d_total > 0, d_total, 1.0), 1.0)
    cavity = channel_draws < p_cavity

    codes = np.full(thresholds.shape, NO_EVENT, dtype=np.int8)
    codes[jumped & cavity] = CAVITY_PHOTON
    codes[jumped & ~cavity] = SPONTANEOUS_LOSS
    t_emit = np.where(jumped, t_jump, np.nan)
    return codes, t_emit


def sample_outcomes(
    history: StateHistory, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` independent trajectories through one evolved pulse.

    Returns:
        (codes, t_emit) with codes from OUTCOME_CODES
    """
    thresholds = rng.random(n)
    channel_draws = rng.random(n)
    return sample_jumps(history.t, history.emitted_norm, history.spont_norm, thresholds, channel_draws)


def run_trajectory(
    params: LambdaSystemParams,
    drive: PulseEnvelope,
    g_of_t: CouplingSeries,
    rng_seed: Seed,
    dt: Optional[float] = None,
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> EmissionOutcome:
    """
    One quantum-jump trajectory through a drive pulse.

    Deterministic given ``rng_seed``. The returned photon amplitude is the
    deterministic φ(t) of the pulse; the sampled emission time is distributed
    as |φ(t)|² conditioned on a cavity emission.
    """
    history = evolve_amplitudes(params, drive, g_of_t, dt=dt, norm_tolerance=norm_tolerance)
    codes, t_emit = sample_outcomes(history, 1, make_rng(rng_seed))
    kind = _KIND_BY_CODE[int(codes[0])]
    return EmissionOutcome(
        outcome=kind,
        t_emit=None if kind is OutcomeKind.NO_EVENT else float(t_emit[0]),
        t=history.t,
        photon_amplitude=history.photon_amplitude,
    )


def repump(
    state_after_pulse: Union[QuantumState, EmissionOutcome, None],
    rng_seed: Seed,
    p_repump: float = 1.0,
) -> bool:
    """Optically pump the atom back to |e,0>; True when the next pulse can emit.

    Whatever the atom did during the pulse, success restores |e,0> with
    probability ``p_repump``.
    """
    if not 0.0 <= p_repump <= 1.0:
        raise ValueError(f"p_repump must lie in [0, 1], got {p_repump}")
    if p_repump >= 1.0:
        return True
    return bool(make_rng(rng_seed).random() < p_repump)


def repump_cycles(n: int, p_repump: float, rng: np.random.Generator) -> np.ndarray:
    """Ready flags for ``n`` consecutive pulses of one atom.

    The first pulse finds the atom freshly prepared; each later pulse is
    ready when the repump in the gap before it succeeded.
    """
    if not 0.0 <= p_repump <= 1.0:
        raise ValueError(f"p_repump must lie in [0, 1], got {p_repump}")
    if n <= 0:
        return np.zeros(0, dtype=bool)
    ready = np.ones(n, dtype=bool)
    if p_repump < 1.0:
        ready[1:] = rng.random(n - 1) < p_repump
    return ready
