"""The synthesis loop: prompt, extract, check, repair, retry.

Both pipelines share one driver. An attempt is a fresh conversation; a
failed check appends the error text to that conversation and asks for a
fix once. A second failure restarts with one fresh attempt, which again
may repair once. The transcript keeps every message of every attempt,
which makes the counters reconstructible: attempts is the number of
system messages, repair rounds is the number of assistant messages after
the last system message minus one.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any, Callable, Optional

from ..analysis.pipeline import run_static_pipeline
from ..analysis.report import AnalysisReport
from ..chart.dates import DateRepair, normalize_dates
from ..chart.model import ChartSpec
from ..chart.validation import validate_spec
from ..data.summary import DataSummary
from ..errors import CodeBlockMissingError, SynthesisError
from ..gateway.client import Conversation, LLMGateway, Message
from ..sandbox.probes import smoke_test
from ..widgets.model import Widget
from .blocks import extract_code_block
from .prompts import build_chart_prompt, build_widget_prompt, repair_request, to_conversation

MAX_ATTEMPTS = 2
MAX_REPAIRS_PER_ATTEMPT = 1


@dataclasses.dataclass(frozen=True)
class SynthesisOutcome:
    """A successful synthesis with its accounting."""

    result: Any
    attempts: int
    repair_rounds: int
    transcript: tuple
    # chart outcomes: the date rewrites applied to the accepted spec
    date_repairs: tuple = ()
    # widget outcomes: id renames applied and the surviving findings
    rename_map: tuple = ()
    report: Optional[AnalysisReport] = None


def reconstruct_counters(transcript: tuple) -> tuple[int, int]:
    """Recover (attempts, repair_rounds) from a transcript alone."""
    attempts = sum(1 for m in transcript if m.role == "system")
    last_system = max(
        (i for i, m in enumerate(transcript) if m.role == "system"), default=-1
    )
    assistants_after = sum(
        1 for m in transcript[last_system + 1 :] if m.role == "assistant"
    )
    return attempts, max(0, assistants_after - 1)


class _CheckFailure(Exception):
    """One attempt's pipeline rejected the model's answer."""

    def __init__(self, text: str):
        super().__init__(text)
        self.text = text


def _drive(
    llm: LLMGateway,
    base: Conversation,
    check: Callable[[str], Any],
    contract: str,
    what: str,
) -> tuple[Any, int, int, tuple]:
    transcript: list[Message] = []
    failures: list[str] = []
    for attempt in range(1, MAX_ATTEMPTS + 1):
        conv = base
        content = llm.complete(conv)
        conv = conv.extended("assistant", content)
        try:
            value = check(content)
            transcript.extend(conv.messages)
            return value, attempt, 0, tuple(transcript)
        except _CheckFailure as failure:
            failures.append(failure.text)
        conv = conv.extended("user", repair_request(failures[-1], contract))
        content = llm.complete(conv)
        conv = conv.extended("assistant", content)
        try:
            value = check(content)
            transcript.extend(conv.messages)
            return value, attempt, 1, tuple(transcript)
        except _CheckFailure as failure:
            failures.append(failure.text)
            transcript.extend(conv.messages)
    raise SynthesisError(
        f"{what} failed after {MAX_ATTEMPTS} attempts; last error:\n{failures[-1]}",
        transcript=tuple(transcript),
        attempts=MAX_ATTEMPTS,
        errors=failures,
    )


def synthesize_chart(
    summary: DataSummary,
    command: str,
    existing: Optional[ChartSpec],
    llm: LLMGateway,
) -> SynthesisOutcome:
    """Turn a natural-language command into a validated chart spec."""
    if not command.strip():
        raise ValueError("command must be non-empty")
    bundle = build_chart_prompt(summary, command, existing)

    def check(content: str) -> tuple[ChartSpec, tuple[DateRepair, ...]]:
        try:
            raw = extract_code_block(content, "json")
        except CodeBlockMissingError as exc:
            raise _CheckFailure(str(exc)) from exc
        try:
            document = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise _CheckFailure(f"the json block is not valid JSON: {exc}") from exc
        if not isinstance(document, dict):
            raise _CheckFailure("the json block must contain a specification object")
        chart, repairs = normalize_dates(ChartSpec(document))
        report = validate_spec(chart)
        if not report.ok:
            raise _CheckFailure(report.render())
        return chart, tuple(repairs)

    (chart, repairs), attempts, repair_rounds, transcript = _drive(
        llm, to_conversation(bundle), check, bundle.output_contract, "chart synthesis"
    )
    return SynthesisOutcome(
        result=chart,
        attempts=attempts,
        repair_rounds=repair_rounds,
        transcript=transcript,
        date_repairs=repairs,
    )


def synthesize_widget(
    summary: DataSummary,
    chart: ChartSpec,
    command: str,
    existing_ids: set,
    llm: LLMGateway,
) -> SynthesisOutcome:
    """Turn a natural-language command into a checked, smoke-tested widget."""
    if not command.strip():
        raise ValueError("command must be non-empty")
    bundle = build_widget_prompt(summary, chart, command)

    def check(content: str) -> tuple[Widget, tuple, AnalysisReport]:
        try:
            markup = extract_code_block(content, "html")
            try:
                callback_source = extract_code_block(content, "js")
            except CodeBlockMissingError:
                callback_source = extract_code_block(content, "javascript")
        except CodeBlockMissingError as exc:
            raise _CheckFailure(str(exc)) from exc
        result = run_static_pipeline(markup, callback_source, set(existing_ids), chart)
        if not result.ok:
            raise _CheckFailure(result.report.render())
        widget = Widget(
            id=result.widget_id,
            title=result.title,
            markup=result.markup,
            callback_source=result.callback_source,
            is_transform_widget=result.is_transform_widget,
        )
        smoke = smoke_test(widget, chart)
        if not smoke.ok:
            raise _CheckFailure(smoke.render())
        return widget, result.rename_map, result.report.merged(smoke)

    (widget, renames, report), attempts, repair_rounds, transcript = _drive(
        llm, to_conversation(bundle), check, bundle.output_contract, "widget synthesis"
    )
    return SynthesisOutcome(
        result=widget,
        attempts=attempts,
        repair_rounds=repair_rounds,
        transcript=transcript,
        rename_map=tuple(renames),
        report=report,
    )
