"""The synthesis loop: extraction, retries, repairs, and accounting."""

import json

import pytest

from dynavis.chart.model import ChartSpec
from dynavis.data.summary import summarize
from dynavis.data.table import table_from_csv, table_from_records
from dynavis.errors import CodeBlockMissingError, SynthesisError
from dynavis.gateway.client import Message
from dynavis.synthesis.blocks import extract_code_block
from dynavis.synthesis.engine import (
    MAX_ATTEMPTS,
    reconstruct_counters,
    synthesize_chart,
    synthesize_widget,
)
from dynavis.synthesis.prompts import (
    build_chart_prompt,
    build_widget_prompt,
    render_system,
    to_conversation,
)

from .support import (
    CARS_CSV,
    SLIDER_CALLBACK,
    SLIDER_MARKUP,
    STOCKS_SPEC,
    ScriptedLLM,
    dual_block,
    json_block,
    stocks_spec,
)

REPAIR_HEAD = "Your previous answer failed validation with the following errors:"


def cars_summary():
    return summarize(table_from_csv(CARS_CSV))


def good_chart_reply() -> str:
    return "Here is the chart you asked for.\n\n" + json_block(STOCKS_SPEC)


def roles(transcript) -> list:
    return [m.role for m in transcript]


class TestExtractCodeBlock:
    def test_block_after_prose(self):
        text = "Sure thing.\n\n```json\n{\"a\": 1}\n```\nDone."
        assert extract_code_block(text, "json") == '{"a": 1}'

    def test_first_of_two_same_tag_blocks_wins(self):
        text = "```json\nfirst\n```\n\n```json\nsecond\n```"
        assert extract_code_block(text, "json") == "first"

    def test_tag_selects_among_mixed_blocks(self):
        text = dual_block("<div id=\"w\"></div>", "function callback(e, c) {}")
        assert extract_code_block(text, "html") == '<div id="w"></div>'
        assert extract_code_block(text, "js") == "function callback(e, c) {}"

    def test_missing_block_raises(self):
        with pytest.raises(CodeBlockMissingError):
            extract_code_block("no fences at all", "json")
        with pytest.raises(CodeBlockMissingError):
            extract_code_block("```js\ncode\n```", "json")

    def test_empty_block_is_allowed(self):
        assert extract_code_block("```json\n```", "json") == ""

    def test_inner_lines_keep_their_indentation(self):
        text = "```json\n{\n  \"a\": 1\n}\n```"
        assert extract_code_block(text, "json") == '{\n  "a": 1\n}'


class TestReconstructCounters:
    def make(self, *roles_seq):
        return tuple(Message(r, f"{r}-{i}") for i, r in enumerate(roles_seq))

    def test_clean_first_attempt(self):
        t = self.make("system", "user", "assistant")
        assert reconstruct_counters(t) == (1, 0)

    def test_one_repair(self):
        t = self.make("system", "user", "assistant", "user", "assistant")
        assert reconstruct_counters(t) == (1, 1)

    def test_fresh_second_attempt(self):
        t = self.make(
            "system", "user", "assistant", "user", "assistant",
            "system", "user", "assistant",
        )
        assert reconstruct_counters(t) == (2, 0)

    def test_second_attempt_with_repair(self):
        t = self.make(
            "system", "user", "assistant", "user", "assistant",
            "system", "user", "assistant", "user", "assistant",
        )
        assert reconstruct_counters(t) == (2, 1)

    def test_empty_transcript(self):
        assert reconstruct_counters(()) == (0, 0)


class TestChartSynthesis:
    def test_clean_pass_is_one_attempt_zero_repairs(self):
        llm = ScriptedLLM([good_chart_reply()])
        outcome = synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert outcome.result.document == STOCKS_SPEC
        assert (outcome.attempts, outcome.repair_rounds) == (1, 0)
        assert roles(outcome.transcript) == ["system", "user", "assistant"]
        assert reconstruct_counters(outcome.transcript) == (1, 0)

    def test_one_repair_round(self):
        llm = ScriptedLLM(["I refuse to answer in the format", good_chart_reply()])
        outcome = synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert (outcome.attempts, outcome.repair_rounds) == (1, 1)
        assert roles(outcome.transcript) == [
            "system", "user", "assistant", "user", "assistant",
        ]
        assert outcome.transcript[3].content.startswith(REPAIR_HEAD)
        assert reconstruct_counters(outcome.transcript) == (1, 1)
        # the repair turn went to the gateway as a longer conversation
        assert len(llm.calls[1].messages) == 4

    def test_fresh_second_attempt_after_failed_repair(self):
        llm = ScriptedLLM(["bad", "still bad", good_chart_reply()])
        outcome = synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert (outcome.attempts, outcome.repair_rounds) == (2, 0)
        assert reconstruct_counters(outcome.transcript) == (2, 0)
        # attempt two restarts from the base conversation
        assert len(llm.calls[2].messages) == 2
        assert llm.calls[2] == llm.calls[0]

    def test_second_attempt_repair_is_the_last_chance(self):
        llm = ScriptedLLM(["bad", "bad", "bad", good_chart_reply()])
        outcome = synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert (outcome.attempts, outcome.repair_rounds) == (2, 1)
        assert reconstruct_counters(outcome.transcript) == (2, 1)

    def test_budget_exhaustion_raises_with_full_transcript(self):
        llm = ScriptedLLM(["bad"] * 4 + [good_chart_reply()])
        with pytest.raises(SynthesisError) as err:
            synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert err.value.attempts == MAX_ATTEMPTS
        assert len(err.value.errors) == 4
        assert len(llm.calls) == 4
        assert reconstruct_counters(err.value.transcript) == (2, 1)
        # the fifth queued reply was never requested
        assert llm.replies == [good_chart_reply()]

    def test_invalid_spec_error_text_reaches_the_repair_turn(self):
        bad = json_block({"mark": 12345, "data": {"name": "table"}})
        llm = ScriptedLLM([bad, good_chart_reply()])
        outcome = synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert outcome.repair_rounds == 1
        repair_text = outcome.transcript[3].content
        assert "/mark" in repair_text

    def test_unparsable_json_is_a_check_failure(self):
        llm = ScriptedLLM(["```json\n{nope\n```", good_chart_reply()])
        outcome = synthesize_chart(cars_summary(), "plot the stocks", None, llm)
        assert outcome.repair_rounds == 1
        assert "not valid JSON" in outcome.transcript[3].content

    def test_date_normalization_is_free(self):
        # string dates are repaired in place, not bounced back
        document = json.loads(json.dumps(STOCKS_SPEC))
        document["transform"] = [
            {"filter": {"field": "date", "range": ["2004-01-01", "2007-12-31"]}}
        ]
        llm = ScriptedLLM([json_block(document)])
        outcome = synthesize_chart(cars_summary(), "recent stocks", None, llm)
        assert (outcome.attempts, outcome.repair_rounds) == (1, 0)
        assert len(outcome.date_repairs) == 2
        assert {r.kind for r in outcome.date_repairs} == {"repaired"}
        out_range = outcome.result.document["transform"][0]["filter"]["range"]
        assert out_range[0] == {"year": 2004, "month": 1, "date": 1}

    def test_empty_command_rejected_before_any_call(self):
        llm = ScriptedLLM([])
        with pytest.raises(ValueError):
            synthesize_chart(cars_summary(), "   ", None, llm)
        assert llm.calls == []


class TestWidgetSynthesis:
    def test_clean_widget(self):
        llm = ScriptedLLM([dual_block(SLIDER_MARKUP, SLIDER_CALLBACK)])
        outcome = synthesize_widget(
            cars_summary(), stocks_spec(), "angle widget", set(), llm
        )
        widget = outcome.result
        assert widget.id == "angle-widget"
        assert widget.title == "Label angle"
        assert widget.is_transform_widget is False
        assert outcome.rename_map == ()
        assert (outcome.attempts, outcome.repair_rounds) == (1, 0)

    def test_javascript_tag_accepted_for_the_callback(self):
        reply = (
            "```html\n" + SLIDER_MARKUP + "\n```\n\n"
            "```javascript\n" + SLIDER_CALLBACK + "\n```"
        )
        outcome = synthesize_widget(
            cars_summary(), stocks_spec(), "angle widget", set(), ScriptedLLM([reply])
        )
        assert outcome.result.callback_source == SLIDER_CALLBACK

    def test_colliding_ids_are_renamed_not_rejected(self):
        llm = ScriptedLLM([dual_block(SLIDER_MARKUP, SLIDER_CALLBACK)])
        outcome = synthesize_widget(
            cars_summary(),
            stocks_spec(),
            "angle widget",
            {"angle-widget", "angle-input"},
            llm,
        )
        widget = outcome.result
        assert widget.id == "angle-widget_2"
        assert {(r.old_id, r.new_id) for r in outcome.rename_map} == {
            ("angle-widget", "angle-widget_2"),
            ("angle-input", "angle-input_2"),
        }
        assert 'id="angle-input_2"' in widget.markup
        assert (outcome.attempts, outcome.repair_rounds) == (1, 0)

    def test_static_failure_report_reaches_the_repair_turn(self):
        unsafe = """function callback(event, chart) {
  chart.encoding.x.axis.labelAngle = Number(event.target.value);
  return [[], chart];
}"""
        llm = ScriptedLLM(
            [
                dual_block(SLIDER_MARKUP, unsafe),
                dual_block(SLIDER_MARKUP, SLIDER_CALLBACK),
            ]
        )
        outcome = synthesize_widget(
            cars_summary(), stocks_spec(), "angle widget", set(), llm
        )
        assert outcome.repair_rounds == 1
        repair_text = outcome.transcript[3].content
        assert repair_text.startswith(REPAIR_HEAD)
        assert "null_safety" in repair_text
        assert "/encoding/x/axis" in repair_text

    def test_smoke_test_failures_trigger_a_repair(self):
        # passes every static check, then blows up on the probe event
        fragile = """function callback(event, chart) {
  let el = document.getElementById("not-in-the-markup");
  chart.title = el.value;
  return [[], chart];
}"""
        llm = ScriptedLLM(
            [
                dual_block(SLIDER_MARKUP, fragile),
                dual_block(SLIDER_MARKUP, SLIDER_CALLBACK),
            ]
        )
        outcome = synthesize_widget(
            cars_summary(), stocks_spec(), "angle widget", set(), llm
        )
        assert outcome.repair_rounds == 1
        assert "runtime" in outcome.transcript[3].content

    def test_missing_js_block_is_a_check_failure(self):
        reply = "```html\n" + SLIDER_MARKUP + "\n```"
        llm = ScriptedLLM([reply, dual_block(SLIDER_MARKUP, SLIDER_CALLBACK)])
        outcome = synthesize_widget(
            cars_summary(), stocks_spec(), "angle widget", set(), llm
        )
        assert outcome.repair_rounds == 1

    def test_budget_exhaustion(self):
        llm = ScriptedLLM(["junk"] * 4)
        with pytest.raises(SynthesisError) as err:
            synthesize_widget(cars_summary(), stocks_spec(), "w", set(), llm)
        assert reconstruct_counters(err.value.transcript) == (2, 1)

    def test_empty_command_rejected(self):
        with pytest.raises(ValueError):
            synthesize_widget(cars_summary(), stocks_spec(), "", set(), ScriptedLLM([]))


class TestPromptShape:
    def test_chart_conversation_is_system_then_command(self):
        bundle = build_chart_prompt(cars_summary(), "show mpg by horsepower")
        conv = to_conversation(bundle)
        assert roles(conv.messages) == ["system", "user"]
        assert conv.messages[1].content == "show mpg by horsepower"
        system = conv.messages[0].content
        assert "## Output format" in system
        assert "## Data summary" in system
        assert "### Example 1" in system
        assert "## Current chart specification" not in system

    def test_editing_includes_the_current_spec(self):
        bundle = build_chart_prompt(cars_summary(), "make it red", stocks_spec())
        system = render_system(bundle)
        assert "## Current chart specification" in system
        assert '"mark": "line"' in system

    def test_widget_prompt_grounds_on_chart_and_summary(self):
        bundle = build_widget_prompt(cars_summary(), stocks_spec(), "add a slider")
        system = render_system(bundle)
        assert "## Current chart specification" in system
        assert "## Data summary" in system

    def test_prompts_carry_samples_never_raw_rows(self):
        # a column with more distinct values than the sample budget: some
        # value must stay out of the prompt entirely
        records = [{"label": f"rowvalue-{i:02d}", "n": i} for i in range(40)]
        table = table_from_records(records)
        summary = summarize(table)
        sampled = set(summary.columns[0].stats.samples)
        missing = [r["label"] for r in records if r["label"] not in sampled]
        assert missing, "sampling should leave most values out"
        system = render_system(build_chart_prompt(summary, "plot it"))
        for value in missing:
            assert value not in system
        for value in sampled:
            assert value in system
