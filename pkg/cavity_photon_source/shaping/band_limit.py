"""AOM bandwidth model: zero-phase Gaussian low-pass of a sampled envelope."""

import math

import numpy as np
from scipy.ndimage import gaussian_filter1d

from ..qsim.models import PulseEnvelope
from ..utils.error_handler import ConfigurationError

KERNEL_TRUNCATE = 6.0


def gaussian_sigma_for_cutoff(cutoff_hz: float) -> float:
    """Time-domain σ of a Gaussian whose amplitude response is -3 dB at ``cutoff_hz``.

    H(f) = exp(-2π²σ²f²) = 1/sqrt(2) at f = cutoff.
    """
    return math.sqrt(math.log(2.0)) / (2.0 * math.pi * cutoff_hz)


def gaussian_response(frequency_hz: float, cutoff_hz: float) -> float:
    sigma = gaussian_sigma_for_cutoff(cutoff_hz)
    return math.exp(-2.0 * (math.pi * sigma * frequency_hz) ** 2)


def _filter(values: np.ndarray, sigma_samples: float) -> np.ndarray:
    return gaussian_filter1d(values, sigma_samples, mode="constant", cval=0.0, truncate=KERNEL_TRUNCATE)


def band_limit(omega: PulseEnvelope, cutoff_hz: float) -> PulseEnvelope:
    """
    Low-pass an envelope with a zero-phase Gaussian kernel.

    Samples outside the window count as zero. A non-negative real input
    stays non-negative. An infinite cutoff returns the input unchanged.
    """
    if not cutoff_hz > 0:
        raise ConfigurationError([f"band-limit cutoff must be > 0, got {cutoff_hz}"])
    if math.isinf(cutoff_hz):
        return omega

    sigma_samples = gaussian_sigma_for_cutoff(cutoff_hz) / omega.dt
    values = omega.values
    if np.iscomplexobj(values):
        filtered = _filter(values.real, sigma_samples) + 1j * _filter(values.imag, sigma_samples)
    else:
        filtered = _filter(np.asarray(values, dtype=float), sigma_samples)
        if np.all(values >= 0):
            filtered = np.maximum(filtered, 0.0)
    return omega.with_values(filtered)
