"""Date-format repair for chart documents.

The grammar represents datetimes in filter predicates as structured
objects ({"date": 14, "month": 3, "year": 2004}, month 1-based), but
synthesized specs frequently carry ISO strings instead. This pass
rewrites ISO strings sitting in datetime positions into those objects:

* endpoints of a field `range` predicate when the field has a temporal
  encoding, or when the endpoint itself looks like an ISO date;
* entries of `scale.domain` under an encoding typed temporal.

Strings in datetime positions that do not parse as real calendar dates
are left untouched and reported with kind "unrepaired". The pass is
idempotent: repaired values are objects and never match again.
"""

from __future__ import annotations

import copy
import datetime as _dt
import re
from dataclasses import dataclass
from typing import Any, Optional

from .model import ChartSpec, format_pointer

ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})(?:T(\d{2}):(\d{2})(?::(\d{2}))?)?$"
)


@dataclass(frozen=True)
class DateRepair:
    path: str
    before: Any
    after: Any
    kind: str  # repaired | unrepaired

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "before": self.before,
            "after": self.after,
            "kind": self.kind,
        }


def parse_iso_date(value: str) -> Optional[dict]:
    """ISO string -> DateTimeObject dict, or None when not a real date."""
    match = ISO_RE.match(value)
    if not match:
        return None
    year, month, day, hours, minutes, seconds = match.groups()
    try:
        _dt.datetime(
            int(year),
            int(month),
            int(day),
            int(hours or 0),
            int(minutes or 0),
            int(seconds or 0),
        )
    except ValueError:
        return None
    obj = {"date": int(day), "month": int(month), "year": int(year)}
    if hours is not None:
        obj["hours"] = int(hours)
        obj["minutes"] = int(minutes)
        if seconds is not None:
            obj["seconds"] = int(seconds)
    return obj


def looks_like_iso(value: Any) -> bool:
    return isinstance(value, str) and ISO_RE.match(value) is not None


def _temporal_fields(node: Any, found: set) -> None:
    """Collect every field name encoded with type temporal, anywhere."""
    if isinstance(node, dict):
        encoding = node.get("encoding")
        if isinstance(encoding, dict):
            for channel_def in encoding.values():
                if (
                    isinstance(channel_def, dict)
                    and channel_def.get("type") == "temporal"
                    and isinstance(channel_def.get("field"), str)
                ):
                    found.add(channel_def["field"])
        for value in node.values():
            _temporal_fields(value, found)
    elif isinstance(node, list):
        for value in node:
            _temporal_fields(value, found)


def _repair_endpoint(
    container: list, index: int, path_segments: list, repairs: list
) -> None:
    value = container[index]
    if not isinstance(value, str):
        return
    path = format_pointer(path_segments + [str(index)])
    parsed = parse_iso_date(value)
    if parsed is None:
        repairs.append(DateRepair(path, value, value, "unrepaired"))
        return
    container[index] = parsed
    repairs.append(DateRepair(path, value, parsed, "repaired"))


def _walk_predicate(
    node: Any, temporal: set, path_segments: list, repairs: list
) -> None:
    """Recurse through a filter predicate tree repairing range endpoints."""
    if isinstance(node, dict):
        for op in ("and", "or"):
            if isinstance(node.get(op), list):
                for i, sub in enumerate(node[op]):
                    _walk_predicate(sub, temporal, path_segments + [op, str(i)], repairs)
        if "not" in node:
            _walk_predicate(node["not"], temporal, path_segments + ["not"], repairs)
        field = node.get("field")
        rng = node.get("range")
        if isinstance(field, str) and isinstance(rng, list):
            field_is_temporal = field in temporal
            for i, endpoint in enumerate(rng):
                if isinstance(endpoint, str) and (
                    field_is_temporal or looks_like_iso(endpoint)
                ):
                    _repair_endpoint(rng, i, path_segments + ["range"], repairs)


def _walk(node: Any, temporal: set, path_segments: list, repairs: list) -> None:
    if isinstance(node, dict):
        transforms = node.get("transform")
        if isinstance(transforms, list):
            for i, entry in enumerate(transforms):
                if isinstance(entry, dict) and "filter" in entry:
                    _walk_predicate(
                        entry["filter"],
                        temporal,
                        path_segments + ["transform", str(i), "filter"],
                        repairs,
                    )
        encoding = node.get("encoding")
        if isinstance(encoding, dict):
            for channel, channel_def in encoding.items():
                if not isinstance(channel_def, dict):
                    continue
                if channel_def.get("type") != "temporal":
                    continue
                scale = channel_def.get("scale")
                if isinstance(scale, dict) and isinstance(scale.get("domain"), list):
                    domain = scale["domain"]
                    for i, entry in enumerate(domain):
                        if isinstance(entry, str):
                            _repair_endpoint(
                                domain,
                                i,
                                path_segments
                                + ["encoding", channel, "scale", "domain"],
                                repairs,
                            )
        for key, value in node.items():
            if key in ("transform", "encoding"):
                continue
            if isinstance(value, (dict, list)):
                _walk(value, temporal, path_segments + [key], repairs)
    elif isinstance(node, list):
        for i, value in enumerate(node):
            if isinstance(value, (dict, list)):
                _walk(value, temporal, path_segments + [str(i)], repairs)


def normalize_dates(chart: ChartSpec) -> tuple[ChartSpec, list[DateRepair]]:
    """Rewrite ISO strings in datetime positions into DateTimeObjects."""
    doc = copy.deepcopy(chart.document)
    temporal: set = set()
    _temporal_fields(doc, temporal)
    repairs: list[DateRepair] = []
    _walk(doc, temporal, [], repairs)
    return ChartSpec(doc), repairs
