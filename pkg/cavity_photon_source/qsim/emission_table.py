"""Pre-computed pulse response over a grid of coupling strengths.

An atom crossing the mode moves a negligible fraction of a wavelength during
one driving pulse, so each pulse sees a constant |g|. Evolving the drive once
for every |g| on a grid turns per-pulse sampling of a whole run into a table
lookup plus :func:`sample_jumps`.
"""

from typing import Optional, Tuple

import numpy as np
import structlog

from .integrator import DEFAULT_NORM_TOLERANCE, check_norm, integrate_amplitudes
from .models import EnvelopeKind, LambdaSystemParams, PulseEnvelope
from .trajectory import sample_jumps

logger = structlog.get_logger(__name__)

DEFAULT_COUPLING_POINTS = 41


class EmissionTable:
    """Emission statistics of one drive pulse for |g| in [0, g0]."""

    def __init__(
        self,
        params: LambdaSystemParams,
        drive: PulseEnvelope,
        n_couplings: int = DEFAULT_COUPLING_POINTS,
        dt: Optional[float] = None,
        norm_tolerance: float = DEFAULT_NORM_TOLERANCE,
    ):
        if drive.kind is not EnvelopeKind.RABI_DRIVE:
            raise ValueError(f"EmissionTable needs a rabi_drive envelope, got {drive.kind.value}")
        if n_couplings < 2:
            raise ValueError("n_couplings must be at least 2")
        if dt is not None:
            drive = drive.resample(dt)

        self.params = params
        self.drive = drive
        self.couplings = np.linspace(0.0, params.g0, n_couplings)

        n = len(drive)
        g = np.broadcast_to(self.couplings, (n, n_couplings))
        c_e, c_x, c_g, emitted, spont = integrate_amplitudes(params, drive.values, g, drive.dt)
        check_norm(c_e, c_x, c_g, emitted, spont, drive.dt, norm_tolerance)

        self.t = drive.t
        self.emitted = emitted
        self.spont = spont
        self.photon_amplitude = np.sqrt(2.0 * params.kappa) * c_g

        logger.info(
            "emission_table_built",
            couplings=n_couplings,
            steps=n,
            p_emit_at_g0=float(emitted[-1, -1]),
            p_spont_at_g0=float(spont[-1, -1]),
        )

    def __len__(self) -> int:
        return int(self.couplings.size)

    @property
    def emission_probability(self) -> np.ndarray:
        """Total cavity-emission probability per grid coupling."""
        return self.emitted[-1]

    @property
    def spontaneous_probability(self) -> np.ndarray:
        return self.spont[-1]

    def index_for(self, coupling: np.ndarray) -> np.ndarray:
        """Nearest grid index for each |g|."""
        step = self.couplings[1] - self.couplings[0]
        idx = np.rint(np.abs(np.asarray(coupling, dtype=float)) / step).astype(np.int64)
        return np.clip(idx, 0, len(self) - 1)

    def intensity(self, coupling: float) -> np.ndarray:
        """|φ(t)|² of a photon emitted by an atom at coupling ``coupling``."""
        return np.abs(self.photon_amplitude[:, int(self.index_for(coupling))]) ** 2

    def sample(
        self, coupling: np.ndarray, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Sample one outcome per pulse.

        Args:
            coupling: |g| seen during each pulse, shape (n,)
            rng: Random generator

        Returns:
            (codes, t_emit) as in :func:`sample_jumps`, times relative to the
            start of the drive window
        """
        coupling = np.asarray(coupling, dtype=float)
        thresholds = rng.random(coupling.size)
        channel_draws = rng.random(coupling.size)
        codes = np.zeros(coupling.size, dtype=np.int8)
        t_emit = np.full(coupling.size, np.nan)

        idx = self.index_for(coupling)
        for column in np.unique(idx):
            sel = idx == column
            codes[sel], t_emit[sel] = sample_jumps(
                self.t,
                self.emitted[:, column],
                self.spont[:, column],
                thresholds[sel],
                channel_draws[sel],
            )
        return codes, t_emit - self.t[0]
