"""Fixed-step integration of the single-excitation Lambda-system equations.

    dc_e/dt = -i (Ω*/2) c_x
    dc_x/dt = -i (Ω/2) c_e - i g c_g - (γ + i δ_l) c_x
    dc_g/dt = -i g c_x - (κ + i (δ_l - δ_c)) c_g

The leaked probabilities 2κ|c_g|² and 2γ|c_x|² are integrated alongside the
amplitudes with the same RK4 stages, so the bookkeeping closes to the
integrator's order and a drift in the total is a step-size signal, never
something to renormalize away.
"""

import math
from typing import Optional, Tuple, Union

import numpy as np
import structlog

from ..utils.error_handler import NonUniformGridError, NormViolationError
from .models import EnvelopeKind, LambdaSystemParams, PulseEnvelope, StateHistory

logger = structlog.get_logger(__name__)

DEFAULT_NORM_TOLERANCE = 1e-6

CouplingSeries = Union[float, np.ndarray]


def default_time_step(params: LambdaSystemParams, omega_max: float = 0.0) -> float:
    """dt = 1 / (200 · max(g0, κ, Ω_max) / 2π)."""
    fastest = max(params.g0, params.kappa, abs(omega_max))
    return 2.0 * math.pi / (200.0 * fastest)


def _derivatives(
    c_e: np.ndarray,
    c_x: np.ndarray,
    c_g: np.ndarray,
    omega: np.ndarray,
    g: np.ndarray,
    params: LambdaSystemParams,
) -> Tuple[np.ndarray, ...]:
    x_decay = params.gamma + 1j * params.delta_l
    g_decay = params.kappa + 1j * (params.delta_l - params.delta_c)
    d_e = -0.5j * np.conj(omega) * c_x
    d_x = -0.5j * omega * c_e - 1j * g * c_g - x_decay * c_x
    d_g = -1j * g * c_x - g_decay * c_g
    d_emit = 2.0 * params.kappa * np.abs(c_g) ** 2
    d_spont = 2.0 * params.gamma * np.abs(c_x) ** 2
    return d_e, d_x, d_g, d_emit, d_spont


def integrate_amplitudes(
    params: LambdaSystemParams,
    omega: np.ndarray,
    g: np.ndarray,
    dt: float,
) -> Tuple[np.ndarray, ...]:
    """RK4 over a sampled grid; Ω and g are linearly interpolated at half steps.

    ``g`` may carry trailing axes (e.g. shape (N, M) for M couplings at once);
    ``omega`` broadcasts against it.

    Returns:
        (c_e, c_x, c_g, emitted, spont), each with the broadcast shape of g
    """
    omega = np.asarray(omega, dtype=complex)
    g = np.asarray(g, dtype=float)
    n = omega.shape[0]
    if g.shape[0] != n:
        raise NonUniformGridError(f"coupling series has {g.shape[0]} samples, drive has {n}")
    if g.ndim > 1:
        omega = omega.reshape((n,) + (1,) * (g.ndim - 1))
    shape = np.broadcast_shapes(omega.shape, g.shape)

    c_e = np.zeros(shape, dtype=complex)
    c_x = np.zeros(shape, dtype=complex)
    c_g = np.zeros(shape, dtype=complex)
    emitted = np.zeros(shape, dtype=float)
    spont = np.zeros(shape, dtype=float)
    c_e[0] = 1.0

    omega_b = np.broadcast_to(omega, shape)
    g_b = np.broadcast_to(g, shape)

    for i in range(n - 1):
        y = (c_e[i], c_x[i], c_g[i])
        o0, o1 = omega_b[i], omega_b[i + 1]
        g0_, g1_ = g_b[i], g_b[i + 1]
        om, gm = 0.5 * (o0 + o1), 0.5 * (g0_ + g1_)

        k1 = _derivatives(*y, o0, g0_, params)
        y2 = tuple(y[j] + 0.5 * dt * k1[j] for j in range(3))
        k2 = _derivatives(*y2, om, gm, params)
        y3 = tuple(y[j] + 0.5 * dt * k2[j] for j in range(3))
        k3 = _derivatives(*y3, om, gm, params)
        y4 = tuple(y[j] + dt * k3[j] for j in range(3))
        k4 = _derivatives(*y4, o1, g1_, params)

        incr = [dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in range(5)]
        c_e[i + 1] = y[0] + incr[0]
        c_x[i + 1] = y[1] + incr[1]
        c_g[i + 1] = y[2] + incr[2]
        emitted[i + 1] = emitted[i] + incr[3].real
        spont[i + 1] = spont[i] + incr[4].real

    return c_e, c_x, c_g, emitted, spont


def check_norm(
    c_e: np.ndarray,
    c_x: np.ndarray,
    c_g: np.ndarray,
    emitted: np.ndarray,
    spont: np.ndarray,
    dt: float,
    tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> float:
    """Raise NormViolationError when total probability leaves 1 by more than ``tolerance``."""
    total = np.abs(c_e) ** 2 + np.abs(c_x) ** 2 + np.abs(c_g) ** 2 + emitted + spont
    deviation = float(np.max(np.abs(total - 1.0)))
    if not np.isfinite(deviation) or deviation > tolerance:
        raise NormViolationError(deviation, tolerance, dt)
    return deviation


def _coupling_on_grid(g_of_t: CouplingSeries, n: int) -> np.ndarray:
    g = np.asarray(g_of_t, dtype=float)
    if g.ndim == 0:
        return np.full(n, float(g))
    if g.shape[0] != n:
        raise NonUniformGridError(
            f"coupling series has {g.shape[0]} samples but the drive grid has {n}"
        )
    return g


def evolve_amplitudes(
    params: LambdaSystemParams,
    drive: PulseEnvelope,
    g_of_t: CouplingSeries,
    dt: Optional[float] = None,
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> StateHistory:
    """
    Evolve |e,0> under the drive and return the full state history.

    Args:
        params: Atom-cavity constants
        drive: Rabi-frequency envelope (kind rabi_drive)
        g_of_t: Coupling on the drive grid, or a constant
        dt: Integration step; when it differs from the drive spacing both the
            drive and the coupling are resampled onto the finer/coarser grid
        norm_tolerance: Allowed deviation of the probability total from 1

    Returns:
        StateHistory; its photon_amplitude is φ(t) = sqrt(2κ)·c_g(t)

    Raises:
        NonUniformGridError: drive/coupling grids disagree
        NormViolationError: the step is too large for the dynamics
    """
    if drive.kind is not EnvelopeKind.RABI_DRIVE:
        raise ValueError(f"evolve_amplitudes needs a rabi_drive envelope, got {drive.kind.value}")

    g = _coupling_on_grid(g_of_t, len(drive))
    if dt is not None and not math.isclose(dt, drive.dt, rel_tol=1e-9):
        resampled = drive.resample(dt)
        g = np.interp(resampled.t, drive.t, g)
        drive = resampled

    c_e, c_x, c_g, emitted, spont = integrate_amplitudes(params, drive.values, g, drive.dt)
    deviation = check_norm(c_e, c_x, c_g, emitted, spont, drive.dt, norm_tolerance)

    logger.debug(
        "amplitudes_evolved",
        steps=len(drive),
        dt=drive.dt,
        emission_probability=float(emitted[-1]),
        norm_deviation=deviation,
    )
    return StateHistory(
        t=drive.t,
        c_e=c_e,
        c_x=c_x,
        c_g=c_g,
        emitted_norm=emitted,
        spont_norm=spont,
        kappa=params.kappa,
    )
