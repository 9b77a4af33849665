"""Prompt assembly for chart and widget synthesis.

Prompts are built from fixed preambles, versioned few-shot banks shipped
with the package, a grounding section (data summary plus the current
chart), and an output contract that pins the exact fenced-block format
the extraction step expects. The grounding never carries dataset rows;
only the summary's per-column samples appear.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Optional

from ..chart.model import ChartSpec
from ..data.summary import DataSummary, render_summary
from ..gateway.client import Conversation, conversation

_FEWSHOT_DIR = Path(__file__).with_name("fewshot")

OUTPUT_CONTRACTS = ("json_spec_block", "widget_dual_block")

HTML_TEMPLATE = """<div id="WIDGET_ID" data-title="WIDGET_TITLE">
  <!-- Replace WIDGET_ID and WIDGET_TITLE. -->
  <!-- Add the widget's label and input elements here. -->
  <!-- Every element needs a unique id; pair each input with a label. -->
</div>"""

JS_TEMPLATE = """function callback(event, chart) {
  let transforms = [];
  // Read the changed value from event.target and sibling inputs via
  // document.getElementById(...). Either edit the chart object or push
  // Vega-Lite transform entries onto transforms.
  return [transforms, chart];
}"""

_CHART_PREAMBLE = """You are a visualization assistant that writes Vega-Lite specifications.
Only use the Vega-Lite Schema v5. The data is provided by the host as a
named source, so reference it with {"data": {"name": "table"}} and never
inline dataset rows. Express date boundaries in filters as DateTime
objects like {"year": 2004, "month": 3, "date": 14}, not as strings.
When asked to edit an existing chart, return the complete updated
specification, not a fragment."""

_WIDGET_PREAMBLE = """You are a visualization assistant that builds small interactive widgets
for adjusting a Vega-Lite chart. A widget is a plain HTML fragment plus
one JavaScript callback. The host renders the fragment, wires every
input's change event to the callback, and applies what the callback
returns. The callback must be synchronous and self-contained: no
network, storage, timers, or DOM mutation; reading sibling inputs via
document.getElementById is allowed."""

_WIDGET_RULES = """Rules for the two code blocks:
- Reply with exactly two fenced code blocks: first ```html, then ```js.
- Complete this HTML template (one root <div> with a unique id and a
  data-title; unique ids on every element):

{html_template}

- Complete this JavaScript template (keep the name `callback` and the
  two parameters; keep the `[transforms, chart]` return shape):

{js_template}

- `transforms` is a list of Vega-Lite transform entries and replaces the
  widget's previous transforms entirely; return an empty list if the
  widget edits the chart directly.
- Guard chart properties that may be absent before writing through them
  (for example `if (!chart.encoding) { chart.encoding = {}; }`).
- Express date boundaries in filters as DateTime objects like
  {"year": 2004, "month": 3, "date": 14}, not as strings."""


@dataclasses.dataclass(frozen=True)
class PromptBundle:
    """Everything that goes into one synthesis request."""

    system_preamble: str
    few_shot: tuple
    grounding: str
    user_command: str
    output_contract: str

    def __post_init__(self) -> None:
        if self.output_contract not in OUTPUT_CONTRACTS:
            raise ValueError(f"unknown output contract: {self.output_contract!r}")


def _load_bank(name: str) -> list:
    return json.loads((_FEWSHOT_DIR / name).read_text(encoding="utf-8"))


def _chart_examples() -> tuple:
    pairs = []
    for example in _load_bank("chart_examples.json"):
        parts = []
        if "existing" in example:
            parts.append("Current chart:")
            parts.append("```json\n" + json.dumps(example["existing"], indent=2) + "\n```")
        parts.append("Command: " + example["command"])
        answer = "```json\n" + json.dumps(example["spec"], indent=2) + "\n```"
        pairs.append(("\n".join(parts), answer))
    return tuple(pairs)


def _widget_examples() -> tuple:
    pairs = []
    for example in _load_bank("widget_examples.json"):
        answer = (
            "```html\n" + example["markup"] + "\n```\n"
            "```js\n" + example["callback"] + "\n```"
        )
        pairs.append(("Command: " + example["command"], answer))
    return tuple(pairs)


def _chart_grounding(summary: DataSummary, existing: Optional[ChartSpec]) -> str:
    parts = ["## Data summary", render_summary(summary)]
    if existing is not None:
        parts.append("## Current chart specification")
        parts.append("```json\n" + json.dumps(existing.document, indent=2) + "\n```")
    return "\n".join(parts)


def _widget_grounding(summary: DataSummary, chart: ChartSpec) -> str:
    parts = [
        "## Data summary",
        render_summary(summary),
        "## Current chart specification",
        "```json\n" + json.dumps(chart.document, indent=2) + "\n```",
    ]
    return "\n".join(parts)


def build_chart_prompt(
    summary: DataSummary, command: str, existing: Optional[ChartSpec] = None
) -> PromptBundle:
    return PromptBundle(
        system_preamble=_CHART_PREAMBLE,
        few_shot=_chart_examples(),
        grounding=_chart_grounding(summary, existing),
        user_command=command,
        output_contract="json_spec_block",
    )


def build_widget_prompt(summary: DataSummary, chart: ChartSpec, command: str) -> PromptBundle:
    return PromptBundle(
        system_preamble=_WIDGET_PREAMBLE,
        few_shot=_widget_examples(),
        grounding=_widget_grounding(summary, chart),
        user_command=command,
        output_contract="widget_dual_block",
    )


def _contract_text(contract: str) -> str:
    if contract == "json_spec_block":
        return (
            "Reply with exactly one fenced code block tagged json containing "
            "the complete Vega-Lite v5 specification and nothing else inside it."
        )
    return _WIDGET_RULES.replace("{html_template}", _indent(HTML_TEMPLATE)).replace(
        "{js_template}", _indent(JS_TEMPLATE)
    )


def _indent(block: str) -> str:
    return "\n".join("    " + line for line in block.splitlines())


def render_system(bundle: PromptBundle) -> str:
    """Flatten a bundle into the single system message the gateway sends.

    Few-shot pairs live inside the system message, so the number of
    system messages in a transcript equals the number of fresh attempts.
    """
    parts = [bundle.system_preamble, "", "## Output format", _contract_text(bundle.output_contract)]
    if bundle.few_shot:
        parts.append("")
        parts.append("## Examples")
        for i, (example_input, example_output) in enumerate(bundle.few_shot, start=1):
            parts.append(f"### Example {i}")
            parts.append(example_input)
            parts.append("Answer:")
            parts.append(example_output)
    parts.append("")
    parts.append(bundle.grounding)
    return "\n".join(parts)


def to_conversation(bundle: PromptBundle) -> Conversation:
    return conversation(
        [("system", render_system(bundle)), ("user", bundle.user_command)]
    )


def repair_request(error_text: str, contract: str) -> str:
    """The follow-up message asking the model to fix its last answer."""
    if contract == "json_spec_block":
        restatement = (
            "Reply again with one fenced ```json block containing the complete "
            "corrected Vega-Lite v5 specification."
        )
    else:
        restatement = (
            "Reply again with both fenced blocks (```html then ```js), corrected, "
            "following the same templates and rules."
        )
    return (
        "Your previous answer failed validation with the following errors:\n"
        + error_text.rstrip()
        + "\n\nFix these errors. "
        + restatement
    )
