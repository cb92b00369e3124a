"""JSON documents (reports, ground-truth sidecars) written with atomic replace."""

from pathlib import Path
from typing import Any, Dict, Union

import orjson
import structlog

logger = structlog.get_logger(__name__)

_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def write_json(path: Union[str, Path], document: Dict[str, Any]) -> Path:
    """Serialize ``document`` (numpy arrays allowed) to ``path`` via a temp file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(orjson.dumps(document, option=_OPTIONS))
    tmp.replace(path)
    logger.debug("document_written", path=str(path))
    return path


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    document = orjson.loads(Path(path).read_bytes())
    if not isinstance(document, dict):
        raise ValueError(f"{path} does not hold a JSON object")
    return document
