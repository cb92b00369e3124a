"""Statistics reconstructed from click streams."""

from .correlation import (
    central_peak_ratio,
    cross_correlate,
    fit_transit_envelope,
    peak_areas,
    split_detectors,
)
from .emission_fit import conditional_click_probabilities, fit_emission_probability
from .hom import calibrate_dephasing, coherence_time_for, expected_visibility, hom_visibility
from .models import (
    CorrelationHistogram,
    EmissionFit,
    HomResult,
    ShapeHistogram,
    SummaryRecord,
    TransitSelection,
)
from .postselect import drive_phase, expected_counts, recover_shape, select_transits, shape_agreement
from .summary import REFERENCE_VALUES, compare_to_reference, read_summary, write_summary

__all__ = [
    "central_peak_ratio",
    "cross_correlate",
    "fit_transit_envelope",
    "peak_areas",
    "split_detectors",
    "conditional_click_probabilities",
    "fit_emission_probability",
    "calibrate_dephasing",
    "coherence_time_for",
    "expected_visibility",
    "hom_visibility",
    "CorrelationHistogram",
    "EmissionFit",
    "HomResult",
    "ShapeHistogram",
    "SummaryRecord",
    "TransitSelection",
    "drive_phase",
    "expected_counts",
    "recover_shape",
    "select_transits",
    "shape_agreement",
    "REFERENCE_VALUES",
    "compare_to_reference",
    "read_summary",
    "write_summary",
]
