"""Schema validation for chart documents.

Documents validate against the bundled Vega-Lite v5 JSON schema. The
top-level schema is a seven-way anyOf (unit, facet, layer, repeat, and
the three concat forms); validating a near-miss document against that union
produces errors anchored at the root. To get usable paths, validation
dispatches on the document's view-discrimination key (mark/facet/layer/
repeat/concat/vconcat/hconcat) and validates against that branch alone,
which is equivalence-preserving: every branch requires its own
discriminator key and rejects the others via additionalProperties.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema
from jsonschema.exceptions import best_match

from ..data.table import DataTable
from .model import ChartSpec, format_pointer

SCHEMA_PATH = Path(__file__).parent / "schema" / "vega-lite-v5.json"

_MESSAGE_LIMIT = 240

BRANCH_BY_KEY = {
    "mark": "TopLevelUnitSpec",
    "facet": "TopLevelFacetSpec",
    "layer": "TopLevelLayerSpec",
    "repeat": "TopLevelRepeatSpec",
    "concat": "TopLevelConcatSpec",
    "vconcat": "TopLevelVConcatSpec",
    "hconcat": "TopLevelHConcatSpec",
}


@dataclass(frozen=True)
class ValidationIssue:
    path: str
    message: str
    kind: str  # json_parse | schema | semantic

    def to_json(self) -> dict:
        return {"path": self.path, "message": self.message, "kind": self.kind}


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> dict:
        return {"ok": self.ok, "errors": [e.to_json() for e in self.errors]}

    def render(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{e.path or '/'}: {e.message}" for e in self.errors)


def _load_schema() -> dict:
    with open(SCHEMA_PATH, "r", encoding="utf-8") as fh:
        return json.load(fh)


SCHEMA = _load_schema()

_full_validator = jsonschema.Draft7Validator(SCHEMA)
_branch_validators: dict[str, jsonschema.Draft7Validator] = {}
_fragment_validators: dict[str, jsonschema.Draft7Validator] = {}


def _branch_validator(definition: str) -> jsonschema.Draft7Validator:
    if definition not in _branch_validators:
        _branch_validators[definition] = jsonschema.Draft7Validator(
            {"$ref": f"#/definitions/{definition}", "definitions": SCHEMA["definitions"]}
        )
    return _branch_validators[definition]


def fragment_validator(definition: str) -> jsonschema.Draft7Validator:
    """Validator for one named schema definition (e.g. ``Transform``)."""
    if definition not in _fragment_validators:
        if definition not in SCHEMA["definitions"]:
            raise KeyError(f"no schema definition named {definition}")
        _fragment_validators[definition] = jsonschema.Draft7Validator(
            {"$ref": f"#/definitions/{definition}", "definitions": SCHEMA["definitions"]}
        )
    return _fragment_validators[definition]


def _clip(message: str) -> str:
    flat = " ".join(message.split())
    if len(flat) > _MESSAGE_LIMIT:
        return flat[: _MESSAGE_LIMIT - 3] + "..."
    return flat


def _leaf(error: jsonschema.ValidationError) -> jsonschema.ValidationError:
    while error.context:
        error = best_match(error.context)
    return error


def _issues_from_error(error: jsonschema.ValidationError) -> list[ValidationIssue]:
    leaf = _leaf(error)
    base_path = format_pointer([str(s) for s in leaf.absolute_path])
    if leaf.validator == "additionalProperties" and isinstance(leaf.instance, dict):
        allowed = set()
        if isinstance(leaf.schema, dict):
            allowed = set(leaf.schema.get("properties", {}))
        unexpected = [k for k in leaf.instance if k not in allowed]
        if unexpected:
            return [
                ValidationIssue(
                    path=base_path + format_pointer([key]),
                    message=f"unexpected property {key!r}",
                    kind="schema",
                )
                for key in unexpected
            ]
    return [ValidationIssue(path=base_path, message=_clip(leaf.message), kind="schema")]


def _schema_issues(document: dict) -> list[ValidationIssue]:
    discriminators = [k for k in BRANCH_BY_KEY if k in document]
    if len(discriminators) == 1:
        validator = _branch_validator(BRANCH_BY_KEY[discriminators[0]])
    elif not discriminators:
        return [
            ValidationIssue(
                path="",
                message=(
                    "document has none of the view keys: "
                    + ", ".join(BRANCH_BY_KEY)
                ),
                kind="schema",
            )
        ]
    else:
        validator = _full_validator
    issues: list[ValidationIssue] = []
    seen = set()
    for error in validator.iter_errors(document):
        for issue in _issues_from_error(error):
            key = (issue.path, issue.message)
            if key not in seen:
                seen.add(key)
                issues.append(issue)
    issues.sort(key=lambda i: i.path)
    return issues


# transforms that may synthesize new field names, making a static
# field-existence check unsound
_FIELD_MAKING_KEYS = (
    "calculate",
    "fold",
    "flatten",
    "aggregate",
    "joinaggregate",
    "window",
    "pivot",
    "quantile",
    "regression",
    "loess",
    "density",
    "lookup",
    "timeUnit",
    "impute",
    "stack",
    "sample",
    "extent",
    "bin",
)


def _semantic_issues(document: dict, dataset: DataTable) -> list[ValidationIssue]:
    transforms = document.get("transform")
    if isinstance(transforms, list) and any(
        isinstance(t, dict) and any(k in t for k in _FIELD_MAKING_KEYS)
        for t in transforms
    ):
        return []
    encoding = document.get("encoding")
    if not isinstance(encoding, dict):
        return []
    types = {c.name: c.atomic_type for c in dataset.columns}
    issues = []
    for channel, channel_def in encoding.items():
        if not isinstance(channel_def, dict):
            continue
        field = channel_def.get("field")
        if not isinstance(field, str) or "." in field or "[" in field:
            continue
        if field not in types:
            issues.append(
                ValidationIssue(
                    path=f"/encoding/{channel}/field",
                    message=f"field {field!r} is not a dataset column",
                    kind="semantic",
                )
            )
        elif channel_def.get("type") == "temporal" and types[field] != "date":
            issues.append(
                ValidationIssue(
                    path=f"/encoding/{channel}/type",
                    message=(
                        f"temporal encoding over non-date column {field!r} "
                        f"({types[field]})"
                    ),
                    kind="semantic",
                )
            )
    return issues


def validate_spec(chart: ChartSpec, dataset: Optional[DataTable] = None) -> ValidationReport:
    """Validate a chart document against the bundled v5 schema.

    With a dataset attached, two semantic checks run on top of the schema:
    encoded fields must name dataset columns (skipped when transforms may
    synthesize fields) and temporal encodings must sit on date columns.
    """
    document = chart.document if isinstance(chart, ChartSpec) else chart
    if not isinstance(document, dict):
        return ValidationReport(
            (ValidationIssue("", "document is not a JSON object", "json_parse"),)
        )
    issues = _schema_issues(document)
    if not issues and dataset is not None:
        issues.extend(_semantic_issues(document, dataset))
    return ValidationReport(tuple(issues))


def validate_transform_entry(entry: Any) -> ValidationReport:
    """Validate one object against the grammar's Transform definition."""
    validator = fragment_validator("Transform")
    issues: list[ValidationIssue] = []
    seen = set()
    for error in validator.iter_errors(entry):
        for issue in _issues_from_error(error):
            key = (issue.path, issue.message)
            if key not in seen:
                seen.add(key)
                issues.append(issue)
    issues.sort(key=lambda i: i.path)
    return ValidationReport(tuple(issues))
