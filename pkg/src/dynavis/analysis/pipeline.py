"""The full static post-processing pipeline over synthesized widgets.

Order: parse + id deconfliction, signature check, property safety,
transform classification. Parse failures become error findings so the
synthesis repair loop can feed them back to the model. The pipeline is
a fixpoint: feeding its output back (same existing ids) changes nothing
and reports ok.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..chart.model import ChartSpec
from ..errors import MarkupParseError, ScriptParseError
from .checks import (
    check_callback_signature,
    check_property_safety,
    classify_transform_widget,
)
from .deconflict import RenameEntry, deconflict_ids
from .markup import parse_fragment
from .report import AnalysisReport, Finding


@dataclass(frozen=True)
class PipelineResult:
    markup: str
    callback_source: str
    rename_map: tuple[RenameEntry, ...]
    report: AnalysisReport
    is_transform_widget: bool
    widget_id: str
    title: str

    @property
    def ok(self) -> bool:
        return self.report.ok


def run_static_pipeline(
    markup: str,
    callback_source: str,
    existing_ids: set[str],
    chart: ChartSpec,
) -> PipelineResult:
    try:
        new_markup, new_callback, renames, findings = deconflict_ids(
            markup, callback_source, existing_ids
        )
    except MarkupParseError as exc:
        report = AnalysisReport(
            (
                Finding(
                    "markup_parse",
                    "error",
                    exc.message,
                    location=f"line {exc.line}, column {exc.column}",
                ),
            )
        )
        return PipelineResult(markup, callback_source, (), report, False, "", "")
    except ScriptParseError as exc:
        report = AnalysisReport(
            (
                Finding(
                    "script_parse",
                    "error",
                    exc.message,
                    location=f"line {exc.line}, column {exc.column}",
                ),
            )
        )
        return PipelineResult(markup, callback_source, (), report, False, "", "")

    report = AnalysisReport(tuple(findings))
    report = report.merged(check_callback_signature(new_callback))
    report = report.merged(check_property_safety(new_callback, chart))
    is_transform, classification_report = classify_transform_widget(new_callback)
    report = report.merged(classification_report)

    info = parse_fragment(new_markup)
    widget_id = info.root.id or ""
    if not widget_id:
        report = report.merged(
            AnalysisReport(
                (
                    Finding(
                        "id_conflict",
                        "error",
                        "container element must carry an id",
                    ),
                )
            )
        )
    return PipelineResult(
        markup=new_markup,
        callback_source=new_callback,
        rename_map=tuple(renames),
        report=report,
        is_transform_widget=is_transform,
        widget_id=widget_id,
        title=info.title,
    )
