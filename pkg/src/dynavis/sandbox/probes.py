"""Smoke testing of freshly synthesized widgets.

Every input in the widget gets one representative change event fired at
it through the sandbox. Values mirror what a browser would hand the
callback: ``event.target.value`` is a string, and checkboxes carry a
``checked`` boolean. A widget passes when every probe runs to completion
and returns a payload that validates.
"""

from __future__ import annotations

from typing import Any, Optional

from ..analysis.markup import InputInfo, parse_fragment
from ..analysis.report import AnalysisReport, Finding
from ..chart.model import ChartSpec
from ..widgets.model import Widget
from .runner import (
    DEFAULT_TIMEOUT_MS,
    SyntheticEvent,
    initial_dom,
    midpoint_string,
    run_callback,
)


def probe_event(input_info: InputInfo) -> SyntheticEvent:
    """Pick one plausible change event for an input element."""
    kind = input_info.kind
    value: Any
    checked: Optional[bool] = None
    if kind == "range":
        value = midpoint_string(input_info.min, input_info.max, 0.0, 100.0)
    elif kind == "number":
        if input_info.min is not None and input_info.max is not None:
            value = midpoint_string(input_info.min, input_info.max, 0.0, 0.0)
        else:
            value = input_info.value if input_info.value is not None else "0"
    elif kind == "select":
        value = input_info.options[0] if input_info.options else ""
    elif kind == "color":
        value = "#808080"
    elif kind == "checkbox":
        value = input_info.value if input_info.value is not None else "on"
        checked = not bool(input_info.checked)
    elif kind == "radio":
        value = input_info.value if input_info.value is not None else "on"
        checked = True
    elif kind == "date":
        value = input_info.value if input_info.value is not None else "2010-06-15"
    elif kind == "time":
        value = input_info.value if input_info.value is not None else "12:00"
    else:
        # text, textarea, search, and anything exotic
        value = input_info.value if input_info.value is not None else "probe"
    return SyntheticEvent(target_id=input_info.id, value=value, checked=checked)


def smoke_test(
    widget: Widget,
    chart: ChartSpec,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> AnalysisReport:
    """Fire one probe event at each input and report what broke."""
    info = parse_fragment(widget.markup)
    findings: list[Finding] = []
    if not info.inputs:
        findings.append(
            Finding(
                rule="runtime",
                severity="warning",
                message="widget has no input elements, callback was never exercised",
                location=f"#{widget.id}",
            )
        )
        return AnalysisReport(tuple(findings))

    dom = initial_dom(info)
    for input_info in info.inputs:
        event = probe_event(input_info)
        result = run_callback(
            widget.callback_source, event, chart, dom=dom, timeout_ms=timeout_ms
        )
        if result.diagnostic is not None:
            findings.append(
                Finding(
                    rule="runtime",
                    severity="error",
                    message=(
                        f"probe on '{input_info.id}' ({result.diagnostic.kind}): "
                        f"{result.diagnostic.message}"
                    ),
                    location=f"#{input_info.id}",
                )
            )
            continue
        if result.validation is not None and not result.validation.ok:
            for issue in result.validation.errors:
                findings.append(
                    Finding(
                        rule="validation",
                        severity="error",
                        message=f"probe on '{input_info.id}' produced an invalid result: {issue.message}",
                        location=issue.path,
                    )
                )
    return AnalysisReport(tuple(findings))
