"""Tabular dataset model and ingestion.

A DataTable is a list of typed columns plus row tuples. Ingestion accepts
CSV text (header row required) and JSON arrays of records; both infer an
atomic type per column: integer, number, string, boolean, or date.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from ..errors import DatasetError

ATOMIC_TYPES = ("integer", "number", "string", "boolean", "date")

# ISO date or datetime: YYYY-MM-DD[THH:MM[:SS]]
ISO_DATE_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}(?:T\d{2}:\d{2}(?::\d{2})?)?$"
)

# share of non-null values that must look like ISO dates for a string
# column to be typed "date"
DATE_SHARE_THRESHOLD = 0.95


@dataclass(frozen=True)
class Column:
    name: str
    atomic_type: str


@dataclass(frozen=True)
class DataTable:
    columns: tuple[Column, ...]
    rows: tuple[tuple, ...]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_values(self, name: str) -> list:
        idx = self.column_names.index(name)
        return [row[idx] for row in self.rows]

    def to_records(self) -> list[dict]:
        names = self.column_names
        return [dict(zip(names, row)) for row in self.rows]

    def to_json(self) -> dict:
        return {
            "columns": [{"name": c.name, "atomic_type": c.atomic_type} for c in self.columns],
            "rows": [list(row) for row in self.rows],
        }

    @staticmethod
    def from_json(payload: dict) -> "DataTable":
        cols = tuple(Column(c["name"], c["atomic_type"]) for c in payload["columns"])
        rows = tuple(tuple(row) for row in payload["rows"])
        return DataTable(cols, rows)


def _is_iso_date(value: Any) -> bool:
    return isinstance(value, str) and ISO_DATE_RE.match(value) is not None


def _infer_type(values: Sequence[Any], path: str) -> str:
    """Infer the atomic type of a column from its non-null values."""
    non_null = [v for v in values if v is not None]
    if not non_null:
        return "string"
    if all(isinstance(v, bool) for v in non_null):
        return "boolean"
    # bool is a subclass of int, so the boolean check must come first
    if all(isinstance(v, int) and not isinstance(v, bool) for v in non_null):
        return "integer"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in non_null):
        return "number"
    if all(isinstance(v, str) for v in non_null):
        iso = sum(1 for v in non_null if _is_iso_date(v))
        if iso / len(non_null) >= DATE_SHARE_THRESHOLD:
            return "date"
        return "string"
    raise DatasetError(f"column has mixed value types", detail_path=path)


def table_from_records(records: Sequence[dict], path: str = "") -> DataTable:
    """Build a DataTable from an array of JSON records.

    Records must be objects sharing one key set; missing keys are not
    tolerated (ragged input is an ingestion error, per the split contract).
    """
    if not isinstance(records, (list, tuple)):
        raise DatasetError("records payload is not an array", detail_path=path or "/")
    if not records:
        raise DatasetError("records payload is empty", detail_path=path or "/")
    first = records[0]
    if not isinstance(first, dict):
        raise DatasetError("record is not an object", detail_path=f"{path}/0")
    names = list(first.keys())
    key_set = set(names)
    rows = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise DatasetError("record is not an object", detail_path=f"{path}/{i}")
        if set(rec.keys()) != key_set:
            raise DatasetError(
                "record keys differ from the first record", detail_path=f"{path}/{i}"
            )
        rows.append(tuple(rec[n] for n in names))
    columns = []
    for j, name in enumerate(names):
        col_values = [row[j] for row in rows]
        columns.append(Column(name, _infer_type(col_values, f"{path}/{j}")))
    return DataTable(tuple(columns), tuple(rows))


_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")


def _coerce_cell(text: str) -> Any:
    """Coerce one CSV cell: empty -> null, then bool/int/float, else string."""
    if text == "":
        return None
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    if _INT_RE.match(text):
        return int(text)
    if _FLOAT_RE.match(text) and not _INT_RE.match(text):
        return float(text)
    return text


def table_from_csv(text: str) -> DataTable:
    """Build a DataTable from CSV text with a header row."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("CSV payload is empty", detail_path="/")
    if not header or all(h.strip() == "" for h in header):
        raise DatasetError("CSV header row is empty", detail_path="/")
    names = [h.strip() for h in header]
    raw_rows: list[list[str]] = []
    for i, raw in enumerate(reader):
        if len(raw) != len(names):
            raise DatasetError(
                f"row has {len(raw)} cells, expected {len(names)}",
                detail_path=f"/{i + 1}",
            )
        raw_rows.append(raw)
    if not raw_rows:
        raise DatasetError("CSV has a header but no data rows", detail_path="/")
    coerced = [[_coerce_cell(cell) for cell in row] for row in raw_rows]
    columns = []
    per_column: list[list[Any]] = []
    for j, name in enumerate(names):
        col_values = [row[j] for row in coerced]
        try:
            atomic = _infer_type(col_values, f"/{j}")
        except DatasetError:
            # cells coerced to mixed types: keep the column as raw strings
            col_values = [r[j] if r[j] != "" else None for r in raw_rows]
            atomic = _infer_type(col_values, f"/{j}")
        columns.append(Column(name, atomic))
        per_column.append(col_values)
    rows = tuple(tuple(col[i] for col in per_column) for i in range(len(raw_rows)))
    return DataTable(tuple(columns), rows)
