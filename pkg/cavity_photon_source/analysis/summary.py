"""Machine-readable statistics summary and reference values for reporting."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import structlog

from ..storage.documents import read_json, write_json
from .models import SummaryRecord

logger = structlog.get_logger(__name__)

SUMMARY_SCHEMA = "statistics_summary"
SUMMARY_SCHEMA_VERSION = 1

# published experimental values: (value, uncertainty, unit)
REFERENCE_VALUES: Dict[str, Tuple[float, Optional[float], str]] = {
    "p_max_raw": (0.15, 0.02, ""),
    "p_max_outcoupled": (0.33, 0.035, ""),
    "p_max_corrected": (0.66, 0.07, ""),
    "g2_central_ratio": (0.0, 0.05, ""),
    "transit_envelope_fwhm": (100e-6, None, "s"),
    "hom_visibility": (0.87, 0.05, ""),
    "coherence_time": (300e-9, 40e-9, "s"),
    "two_atom_overlap_fraction": (0.0026, 0.001, ""),
}


def write_summary(
    records: Sequence[SummaryRecord],
    path: Union[str, Path],
    config_hash: str,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write records as one JSON document, atomically."""
    document: Dict[str, Any] = {
        "schema": SUMMARY_SCHEMA,
        "version": SUMMARY_SCHEMA_VERSION,
        "config_hash": config_hash,
        "records": [r.to_dict() for r in records],
    }
    if extra:
        document.update(extra)
    path = write_json(path, document)
    logger.info("summary_written", path=str(path), records=len(records))
    return path


def read_summary(path: Union[str, Path]) -> Tuple[List[SummaryRecord], Dict[str, Any]]:
    document = read_json(path)
    if document.get("schema") != SUMMARY_SCHEMA:
        raise ValueError(f"{path} is not a statistics summary")
    records = [SummaryRecord(**r) for r in document.pop("records", [])]
    return records, document


def compare_to_reference(records: Sequence[SummaryRecord]) -> List[Dict[str, Any]]:
    """Rows pairing each statistic with its reference value, when one exists."""
    rows = []
    for record in records:
        ref = REFERENCE_VALUES.get(record.statistic)
        row: Dict[str, Any] = record.to_dict()
        if ref is not None:
            value, uncertainty, _ = ref
            row["reference"] = value
            row["reference_uncertainty"] = uncertainty
            tolerance = uncertainty if uncertainty is not None else abs(value) * 0.5
            row["within_reference"] = abs(record.value - value) <= tolerance
        rows.append(row)
    return rows
