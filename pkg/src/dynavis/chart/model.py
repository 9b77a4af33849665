"""Chart specification model and structural operations.

The chart document is a JSON object in the Vega-Lite v5 dialect. All
operations here are pure: inputs are never mutated, outputs are fresh
values. JSON pointers (RFC 6901) are the canonical path syntax.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Optional

from ..data.table import DataTable, table_from_records
from ..errors import PointerConflictError, PointerError, SplitError

SCHEMA_VERSION = "v5"

# default symbolic name given to the extracted dataset
DATA_NAME = "table"

# top-level keys moved into the layout object by split_spec
LAYOUT_KEYS = ("width", "height", "config")


@dataclass(frozen=True)
class ChartSpec:
    document: dict
    schema_version: str = SCHEMA_VERSION

    def to_json(self) -> dict:
        return copy.deepcopy(self.document)


def escape_segment(segment: str) -> str:
    return segment.replace("~", "~0").replace("/", "~1")


def unescape_segment(segment: str) -> str:
    return segment.replace("~1", "/").replace("~0", "~")


def parse_pointer(pointer: str) -> list[str]:
    """Split an RFC 6901 pointer into unescaped segments."""
    if pointer == "":
        return []
    if not pointer.startswith("/"):
        raise PointerError(f"pointer must start with '/': {pointer!r}")
    return [unescape_segment(s) for s in pointer.split("/")[1:]]


def format_pointer(segments: list[str]) -> str:
    return "".join("/" + escape_segment(str(s)) for s in segments)


def get_property(document: Any, pointer: str) -> Any:
    """Resolve a pointer; raises PointerError when the path is absent."""
    current = document
    for seg in parse_pointer(pointer):
        if isinstance(current, dict):
            if seg not in current:
                raise PointerError(f"no such key: {seg}", detail_path=pointer)
            current = current[seg]
        elif isinstance(current, list):
            if not seg.isdigit() or int(seg) >= len(current):
                raise PointerError(f"bad array index: {seg}", detail_path=pointer)
            current = current[int(seg)]
        else:
            raise PointerConflictError(
                f"segment {seg!r} traverses a non-container value", detail_path=pointer
            )
    return current


def has_path(document: Any, pointer: str) -> bool:
    try:
        get_property(document, pointer)
        return True
    except PointerError:
        return False


def _set_at(current: Any, segments: list[str], value: Any, pointer: str) -> None:
    for i, seg in enumerate(segments[:-1]):
        if isinstance(current, dict):
            if seg not in current:
                current[seg] = {}
            current = current[seg]
        elif isinstance(current, list):
            if not seg.isdigit() or int(seg) >= len(current):
                raise PointerError(f"bad array index: {seg}", detail_path=pointer)
            current = current[int(seg)]
        else:
            raise PointerConflictError(
                f"segment {seg!r} traverses a non-container value",
                detail_path=format_pointer(segments[:i]),
            )
    last = segments[-1]
    if isinstance(current, dict):
        current[last] = value
    elif isinstance(current, list):
        if last == "-":
            current.append(value)
        elif last.isdigit() and int(last) < len(current):
            current[int(last)] = value
        elif last.isdigit() and int(last) == len(current):
            current.append(value)
        else:
            raise PointerError(f"bad array index: {last}", detail_path=pointer)
    else:
        raise PointerConflictError(
            "pointer ends inside a non-container value", detail_path=pointer
        )


def set_property(chart: ChartSpec, pointer: str, value: Any) -> ChartSpec:
    """Return a copy of the chart with `pointer` set to `value`.

    Missing intermediate objects are created; traversing through a scalar
    is an error naming the conflicting segment. The input is unmodified.
    """
    segments = parse_pointer(pointer)
    if not segments:
        if not isinstance(value, dict):
            raise PointerError("root replacement requires an object")
        return ChartSpec(copy.deepcopy(value))
    doc = copy.deepcopy(chart.document)
    _set_at(doc, segments, copy.deepcopy(value), pointer)
    return ChartSpec(doc)


def split_spec(full_spec: Any) -> tuple[ChartSpec, Optional[DataTable], dict]:
    """Separate a full spec into (chart, dataset, layout).

    Inline `data.values` records become the dataset and the chart keeps a
    symbolic named-data reference; width/height/config move into layout.
    Specs with URL or named data references pass through unchanged.
    """
    if not isinstance(full_spec, dict):
        raise SplitError("full spec is not a JSON object", detail_path="")
    doc = copy.deepcopy(full_spec)
    layout = {}
    for key in LAYOUT_KEYS:
        if key in doc:
            layout[key] = doc.pop(key)
    dataset: Optional[DataTable] = None
    data = doc.get("data")
    if isinstance(data, dict) and "values" in data:
        values = data["values"]
        if not isinstance(values, list):
            raise SplitError("data.values is not an array", detail_path="/data/values")
        try:
            dataset = table_from_records(values, path="/data/values")
        except Exception as exc:
            detail = getattr(exc, "detail_path", "/data/values")
            raise SplitError(f"malformed data.values: {exc}", detail_path=detail)
        name = data.get("name", DATA_NAME)
        doc["data"] = {"name": name}
    return ChartSpec(doc), dataset, layout


def recombine(chart: ChartSpec, dataset: Optional[DataTable], layout: dict) -> dict:
    """Inverse of split_spec: put the dataset and layout keys back."""
    doc = copy.deepcopy(chart.document)
    if dataset is not None:
        data = doc.get("data")
        name = data.get("name") if isinstance(data, dict) else None
        entry: dict = {"values": dataset.to_records()}
        if name is not None and name != DATA_NAME:
            entry["name"] = name
        doc["data"] = entry
    for key, value in layout.items():
        doc[key] = copy.deepcopy(value)
    return doc


def _diff(before: Any, after: Any, prefix: list[str], out: list[str]) -> None:
    if before == after:
        return
    if isinstance(before, dict) and isinstance(after, dict):
        for key in sorted(set(before) | set(after)):
            if before.get(key, _MISSING) != after.get(key, _MISSING):
                _diff(
                    before.get(key, _MISSING),
                    after.get(key, _MISSING),
                    prefix + [key],
                    out,
                )
        return
    if isinstance(before, list) and isinstance(after, list) and len(before) == len(after):
        for i, (b, a) in enumerate(zip(before, after)):
            if b != a:
                _diff(b, a, prefix + [str(i)], out)
        return
    out.append(format_pointer(prefix))


class _Missing:
    def __repr__(self):
        return "<missing>"


_MISSING = _Missing()


def changed_paths(before: dict, after: dict) -> list[str]:
    """Sorted JSON pointers at which two documents differ.

    Added or removed subtrees report the subtree root; equal-length lists
    are compared element-wise, others report the list itself.
    """
    out: list[str] = []
    _diff(before, after, [], out)
    return sorted(out)
