"""Cavity quantities derived from geometry, finesse or the mirror set."""

import math
from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field
from scipy.constants import c as SPEED_OF_LIGHT

from ..utils.error_handler import ConfigurationError


class MirrorSet(BaseModel):
    """Transmissions and per-mirror loss as fractions (40 ppm = 40e-6)."""

    T1: float = Field(ge=0, description="Output-coupler transmission")
    T2: float = Field(ge=0, description="Back-mirror transmission")
    loss_per_mirror: float = Field(ge=0, description="Scatter/absorption loss per mirror")

    model_config = ConfigDict(frozen=True)

    @property
    def round_trip_loss(self) -> float:
        return self.T1 + self.T2 + 2.0 * self.loss_per_mirror


@dataclass(frozen=True)
class CavityParams:
    """Derived cavity quantities."""

    kappa: float  # rad/s, field half-width
    free_spectral_range: float  # Hz
    linewidth_fwhm: float  # Hz
    finesse: float
    outcoupling_efficiency: Optional[float]  # None when only the finesse is known

    @property
    def kappa_mhz(self) -> float:
        """κ/2π in MHz."""
        return self.kappa / (2.0 * math.pi) / 1e6


def derive_cavity_params(
    cavity_length: float,
    finesse: Optional[float] = None,
    mirrors: Optional[MirrorSet] = None,
) -> CavityParams:
    """Derive κ, FSR and outcoupling efficiency.

    FSR = c/(2L), FWHM = FSR/F, κ = π·FWHM. With a mirror set the finesse is
    2π/(T1+T2+2·loss) and η_out = T1/(T1+T2+2·loss); an explicit finesse
    takes precedence for κ.

    Raises:
        ConfigurationError: non-positive length/finesse or neither input given
    """
    violations = []
    if cavity_length <= 0:
        violations.append(f"cavity_length must be positive, got {cavity_length}")
    if finesse is None and mirrors is None:
        violations.append("either finesse or a mirror set is required")
    if finesse is not None and finesse <= 0:
        violations.append(f"finesse must be positive, got {finesse}")
    if mirrors is not None and mirrors.round_trip_loss <= 0:
        violations.append("mirror set has zero round-trip loss")
    if violations:
        raise ConfigurationError(violations)

    eta_out: Optional[float] = None
    if mirrors is not None:
        eta_out = mirrors.T1 / mirrors.round_trip_loss
        if finesse is None:
            finesse = 2.0 * math.pi / mirrors.round_trip_loss

    assert finesse is not None
    fsr = SPEED_OF_LIGHT / (2.0 * cavity_length)
    fwhm = fsr / finesse
    return CavityParams(
        kappa=math.pi * fwhm,
        free_spectral_range=fsr,
        linewidth_fwhm=fwhm,
        finesse=finesse,
        outcoupling_efficiency=eta_out,
    )
