"""Isolated execution of widget callbacks.

A callback runs in a throwaway node process inside a bare ``vm`` context:
no network, no filesystem, and a hard execution timeout. The callback
sees JSON copies of the event and the chart plus a small read-only stand-in
for the widget's own DOM, so nothing it does can reach back into the
caller's objects. The harness reports either the returned
``[transforms, chart]`` pair or a single classified diagnostic.
"""

from __future__ import annotations

import dataclasses
import json
import subprocess
from pathlib import Path
from typing import Any, Optional

from ..analysis.jsdaemon import node_binary
from ..analysis.markup import MarkupInfo, parse_fragment
from ..chart.dates import normalize_dates
from ..chart.model import ChartSpec
from ..chart.validation import (
    ValidationIssue,
    ValidationReport,
    validate_spec,
    validate_transform_entry,
)
from ..errors import JsRuntimeError, UnknownInputError
from ..widgets.model import Widget

_RUNNER_PATH = Path(__file__).with_name("runner.js")

# what a failed run is classified as
DIAGNOSTIC_KINDS = ("timeout", "io_blocked", "exception", "bad_return_shape")

DEFAULT_TIMEOUT_MS = 1000

# wall-clock slack on top of the in-vm timeout: covers process start-up
# and loops the vm timer cannot interrupt (Atomics.wait and friends)
_WALL_CLOCK_SLACK_S = 2.0


@dataclasses.dataclass(frozen=True)
class SyntheticEvent:
    """A DOM-change event as the callback would receive it in a browser."""

    target_id: str
    value: Any = None
    checked: Optional[bool] = None
    event_kind: str = "change"

    def to_json(self) -> dict:
        target: dict = {"id": self.target_id, "value": self.value}
        if self.checked is not None:
            target["checked"] = self.checked
        return {"type": self.event_kind, "target": target}


@dataclasses.dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "message": self.message}


@dataclasses.dataclass(frozen=True)
class SandboxResult:
    """Outcome of one callback run.

    Exactly one of the two shapes holds: a diagnostic with no payload, or
    a payload (``transforms`` plus ``chart``) with no diagnostic. The
    ``validation`` report covers the payload and is attached even when it
    is clean.
    """

    transforms: tuple = ()
    chart: Optional[ChartSpec] = None
    diagnostic: Optional[Diagnostic] = None
    validation: Optional[ValidationReport] = None

    @property
    def ok(self) -> bool:
        if self.diagnostic is not None:
            return False
        return self.validation is None or self.validation.ok

    def to_json(self) -> dict:
        return {
            "transforms": list(self.transforms),
            "chart": None if self.chart is None else self.chart.document,
            "diagnostic": None if self.diagnostic is None else self.diagnostic.to_json(),
            "validation": None if self.validation is None else self.validation.to_json(),
        }


def midpoint_string(lo: Optional[str], hi: Optional[str], default_lo: float, default_hi: float) -> str:
    """Midpoint of a numeric attribute pair, rendered the way a browser would."""

    def _num(raw: Optional[str], fallback: float) -> float:
        if raw is None:
            return fallback
        try:
            return float(raw)
        except ValueError:
            return fallback

    mid = (_num(lo, default_lo) + _num(hi, default_hi)) / 2.0
    return str(int(mid)) if mid == int(mid) else str(mid)


def initial_dom(info: MarkupInfo) -> dict:
    """Browser-default state for each input, keyed by element id.

    This is what ``document.getElementById`` hands back inside the
    sandbox, so callbacks that read sibling inputs see the same values a
    freshly rendered widget would hold.
    """
    elements: dict = {}
    for input_info in info.inputs:
        value: Any
        checked: Optional[bool] = None
        if input_info.kind in ("checkbox", "radio"):
            checked = bool(input_info.checked)
            value = input_info.value if input_info.value is not None else "on"
        elif input_info.kind == "select":
            value = input_info.options[0] if input_info.options else ""
        elif input_info.kind == "range":
            if input_info.value is not None:
                value = input_info.value
            else:
                value = midpoint_string(input_info.min, input_info.max, 0.0, 100.0)
        else:
            value = input_info.value if input_info.value is not None else ""
        element: dict = {"id": input_info.id, "type": input_info.kind, "value": value}
        if checked is not None:
            element["checked"] = checked
        elements[input_info.id] = element
    return elements


def _failure(kind: str, message: str) -> SandboxResult:
    return SandboxResult(diagnostic=Diagnostic(kind, message))


def _validate_payload(transforms: list, chart_document: dict) -> ValidationReport:
    # judge the payload as the service will apply it: string dates get the
    # normalization repair before validation, not a rejection
    issues: list[ValidationIssue] = []
    if transforms:
        normalized, _ = normalize_dates(ChartSpec({"transform": list(transforms)}))
        entries = normalized.document.get("transform", [])
    else:
        entries = []
    for i, entry in enumerate(entries):
        report = validate_transform_entry(entry)
        for issue in report.errors:
            path = f"/transforms/{i}" + (issue.path if issue.path != "/" else "")
            issues.append(ValidationIssue(path, issue.message, issue.kind))
    chart_norm, _ = normalize_dates(ChartSpec(chart_document))
    issues.extend(validate_spec(chart_norm).errors)
    return ValidationReport(tuple(issues))


def run_callback(
    callback_source: str,
    event: SyntheticEvent,
    chart: ChartSpec,
    dom: Optional[dict] = None,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> SandboxResult:
    """Run ``callback(event, chart)`` in isolation and classify the outcome.

    The caller's ``chart`` is serialized before the run and is never
    exposed to the callback, so it cannot be mutated. Raises
    :class:`JsRuntimeError` only for harness problems (a missing node
    binary, a crashed runner); everything the callback itself does wrong
    comes back as a diagnostic.
    """
    request = json.dumps(
        {
            "callback_source": callback_source,
            "event_json": json.dumps(event.to_json()),
            "chart_json": json.dumps(chart.document),
            "dom_json": json.dumps(dom or {}),
            "timeout_ms": timeout_ms,
        }
    )
    try:
        proc = subprocess.run(
            [node_binary(), str(_RUNNER_PATH)],
            input=request,
            capture_output=True,
            text=True,
            timeout=timeout_ms / 1000.0 + _WALL_CLOCK_SLACK_S,
        )
    except subprocess.TimeoutExpired:
        return _failure("timeout", f"callback exceeded {timeout_ms}ms and was killed")
    except OSError as exc:
        raise JsRuntimeError(f"could not start sandbox process: {exc}") from exc

    try:
        payload = json.loads(proc.stdout)
    except (json.JSONDecodeError, UnicodeDecodeError):
        if proc.returncode != 0:
            # the harness always answers in JSON; a crash without one means
            # the callback took the whole process down (stack or heap blowup)
            tail = proc.stderr.strip().splitlines()[-1:] or ["no output"]
            return _failure("exception", f"callback crashed the sandbox process: {tail[0][:300]}")
        raise JsRuntimeError(f"sandbox produced unreadable output: {proc.stdout[:300]!r}")

    if not payload.get("ok"):
        error = payload.get("error") or {}
        kind = error.get("kind")
        if kind not in DIAGNOSTIC_KINDS:
            raise JsRuntimeError(f"sandbox reported unknown error kind: {kind!r}")
        return _failure(kind, str(error.get("message", "")))

    try:
        result = json.loads(payload["result_json"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise JsRuntimeError(f"sandbox result payload unreadable: {exc}") from exc

    if not isinstance(result, list) or len(result) != 2:
        return _failure(
            "bad_return_shape",
            "callback must return [transforms, chart], got "
            + (f"a list of {len(result)}" if isinstance(result, list) else type(result).__name__),
        )
    transforms, chart_document = result
    if not isinstance(transforms, list):
        return _failure(
            "bad_return_shape",
            f"first element must be a list of transforms, got {type(transforms).__name__}",
        )
    if not isinstance(chart_document, dict):
        return _failure(
            "bad_return_shape",
            f"second element must be a chart object, got {type(chart_document).__name__}",
        )

    return SandboxResult(
        transforms=tuple(transforms),
        chart=ChartSpec(chart_document),
        validation=_validate_payload(transforms, chart_document),
    )


def run_widget_event(
    widget: Widget,
    target_id: str,
    value: Any,
    chart: ChartSpec,
    checked: Optional[bool] = None,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> SandboxResult:
    """Fire a change event at one of the widget's inputs."""
    info = parse_fragment(widget.markup)
    if not any(i.id == target_id for i in info.inputs):
        known = ", ".join(i.id for i in info.inputs) or "none"
        raise UnknownInputError(
            f"widget '{widget.id}' has no input with id '{target_id}' (inputs: {known})"
        )
    event = SyntheticEvent(target_id=target_id, value=value, checked=checked)
    return run_callback(
        widget.callback_source,
        event,
        chart,
        dom=initial_dom(info),
        timeout_ms=timeout_ms,
    )
