"""Tabular and JSON output files."""

from .documents import read_json, write_json
from .tables import read_table, write_table

__all__ = ["read_json", "write_json", "read_table", "write_table"]
