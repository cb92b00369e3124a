"""
Plot-ready tables: tab-delimited text with a single header line

    # schema=<name>/<version> config=<hash> | col1<TAB>col2...
"""

import re
from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

import numpy as np
import structlog

logger = structlog.get_logger(__name__)

_HEADER = re.compile(r"^#\s*schema=(?P<schema>[^/\s]+)/(?P<version>\S+)\s+config=(?P<config>\S+)\s*\|\s*(?P<cols>.*)$")


def write_table(
    path: Union[str, Path],
    schema: str,
    columns: Mapping[str, np.ndarray],
    config_hash: str,
    version: Union[int, str] = 1,
) -> Path:
    """Write equal-length columns; the file is replaced atomically."""
    path = Path(path)
    names = list(columns)
    if not names:
        raise ValueError("a table needs at least one column")
    data = [np.real(np.asarray(columns[n])).astype(float).ravel() for n in names]
    length = data[0].size
    if any(col.size != length for col in data):
        raise ValueError(f"columns of table {schema} differ in length")

    header = f"schema={schema}/{version} config={config_hash} | " + "\t".join(names)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    table = np.column_stack(data) if length else np.zeros((0, len(names)))
    np.savetxt(tmp, table, delimiter="\t", header=header, comments="# ", fmt="%.10g")
    tmp.replace(path)
    logger.debug("table_written", path=str(path), schema=schema, rows=length)
    return path


def read_table(path: Union[str, Path]) -> Tuple[Dict[str, str], Dict[str, np.ndarray]]:
    """
    Read a table written by :func:`write_table`.

    Returns:
        (metadata with schema/version/config, columns by name)
    """
    path = Path(path)
    with path.open("r") as fh:
        first = fh.readline().rstrip("\n")
    match = _HEADER.match(first)
    if match is None:
        raise ValueError(f"{path} lacks a schema header line")
    names = match.group("cols").split("\t")
    data = np.loadtxt(path, comments="#", delimiter="\t", ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(names)))
    meta = {"schema": match.group("schema"), "version": match.group("version"), "config": match.group("config")}
    return meta, {name: data[:, i] for i, name in enumerate(names)}
