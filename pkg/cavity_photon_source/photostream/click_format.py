"""
Click-stream files.

Text: one ``# {json}`` metadata line followed by a CSV table with columns
t_ps, detector, pulse_index, shot_index, flags.

Binary: b"CPSCLK01", a little-endian u32 header length, the JSON header,
then packed records (u64 t_ps, u8 detector, u32 pulse_index, u32
shot_index, u8 flags).
"""

import io
import struct
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import numpy as np
import orjson
import pyarrow as pa
import pyarrow.csv as pacsv
import structlog

from ..utils.error_handler import ClickFormatError
from .models import CLICK_DTYPE, ClickStream

logger = structlog.get_logger(__name__)

MAGIC = b"CPSCLK01"
CLICK_SCHEMA = "click_stream"
CLICK_SCHEMA_VERSION = 1

ClickFileFormat = Literal["text", "binary"]

_ARROW_TYPES = {
    "t_ps": pa.uint64(),
    "detector": pa.uint8(),
    "pulse_index": pa.uint32(),
    "shot_index": pa.uint32(),
    "flags": pa.uint8(),
}


def _header(metadata: Optional[Dict[str, Any]], n: int) -> Dict[str, Any]:
    header = {"schema": CLICK_SCHEMA, "version": CLICK_SCHEMA_VERSION, "records": n}
    header.update(metadata or {})
    return header


def write_clicks(
    stream: ClickStream,
    path: Union[str, Path],
    format: ClickFileFormat = "binary",
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a sorted click stream; ``metadata`` lands in the file header."""
    path = Path(path)
    stream.require_sorted()
    header = _header(metadata, len(stream))
    path.parent.mkdir(parents=True, exist_ok=True)

    if format == "binary":
        blob = orjson.dumps(header, option=orjson.OPT_SORT_KEYS)
        with path.open("wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(stream.to_records().tobytes())
    elif format == "text":
        table = pa.table(
            {name: pa.array(col, type=_ARROW_TYPES[name]) for name, col in stream.columns().items()}
        )
        buffer = io.BytesIO()
        pacsv.write_csv(table, buffer)
        with path.open("wb") as fh:
            fh.write(b"# " + orjson.dumps(header, option=orjson.OPT_SORT_KEYS) + b"\n")
            fh.write(buffer.getvalue())
    else:
        raise ClickFormatError(f"unknown click format '{format}'")

    logger.info("clicks_written", path=str(path), format=format, records=len(stream))
    return path


def _read_binary(raw: bytes) -> Tuple[ClickStream, Dict[str, Any]]:
    offset = len(MAGIC)
    if len(raw) < offset + 4:
        raise ClickFormatError("binary click file is truncated before its header")
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    try:
        header = orjson.loads(raw[offset : offset + header_len])
    except orjson.JSONDecodeError as e:
        raise ClickFormatError(f"binary click header is not valid JSON: {e}") from e
    offset += header_len
    body = raw[offset:]
    if len(body) % CLICK_DTYPE.itemsize:
        raise ClickFormatError(
            f"binary click body of {len(body)} bytes is not a whole number of {CLICK_DTYPE.itemsize}-byte records"
        )
    records = np.frombuffer(body, dtype=CLICK_DTYPE)
    return ClickStream.from_records(records), header


def _read_text(raw: bytes) -> Tuple[ClickStream, Dict[str, Any]]:
    first, _, body = raw.partition(b"\n")
    if not first.startswith(b"# "):
        raise ClickFormatError("text click file must start with a '# {json}' metadata line")
    try:
        header = orjson.loads(first[2:])
    except orjson.JSONDecodeError as e:
        raise ClickFormatError(f"text click metadata is not valid JSON: {e}") from e
    try:
        table = pacsv.read_csv(
            io.BytesIO(body),
            convert_options=pacsv.ConvertOptions(column_types=_ARROW_TYPES),
        )
    except pa.ArrowInvalid as e:
        raise ClickFormatError(f"malformed click table: {e}") from e
    missing = set(_ARROW_TYPES) - set(table.column_names)
    if missing:
        raise ClickFormatError(f"click table lacks columns {sorted(missing)}")
    columns = [table.column(name).to_numpy() for name in CLICK_DTYPE.names]
    return ClickStream(*columns), header


def read_clicks(path: Union[str, Path]) -> Tuple[ClickStream, Dict[str, Any]]:
    """
    Read a click file written by :func:`write_clicks`; the format is detected.

    Returns:
        (stream, header)

    Raises:
        ClickFormatError: malformed file
        UnsortedStreamError: timestamps decrease
    """
    raw = Path(path).read_bytes()
    if raw.startswith(MAGIC):
        stream, header = _read_binary(raw)
    else:
        stream, header = _read_text(raw)
    if header.get("schema") != CLICK_SCHEMA:
        raise ClickFormatError(f"unexpected schema {header.get('schema')!r} in {path}")
    if int(header.get("records", len(stream))) != len(stream):
        raise ClickFormatError(
            f"header announces {header.get('records')} records, file holds {len(stream)}"
        )
    return stream.require_sorted(), header
