"""Regenerate the offline replay fixtures.

Produces, under tests/fixtures/:

* data/stocks.csv: seeded synthetic monthly prices for five tickers.
* scenario.json: the end-to-end session script the replay CLI runs.
* llm/scenario.jsonl: recorded gateway replies for every conversation
  the scenario makes, written by running the scenario once in record
  mode against a deterministic scripted provider.

The provider plays the part of the model: it parses the grounding chart
out of each prompt, applies the mutation the command asks for, and
replies in the required format. Recording that run freezes the replies
so `dynavis replay` works with no network and no provider.

Run from the repo root: python3 scripts/gen_fixtures.py
"""

from __future__ import annotations

import copy
import json
import random
import sys
from pathlib import Path

import httpx

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dynavis.gateway.client import LLMGateway  # noqa: E402
from dynavis.replay.script import load_script, run_script  # noqa: E402
from dynavis.service.sessions import SessionStore  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

SYMBOLS = ("AAPL", "AMZN", "GOOG", "IBM", "MSFT")
START_PRICES = {"AAPL": 25.0, "AMZN": 65.0, "GOOG": 110.0, "IBM": 95.0, "MSFT": 40.0}


def build_stocks_csv() -> str:
    rng = random.Random(20100)
    lines = ["symbol,date,price"]
    for symbol in SYMBOLS:
        price = START_PRICES[symbol]
        for year in range(2000, 2010):
            for month in range(1, 13):
                lines.append(f"{symbol},{year:04d}-{month:02d}-01,{price:.2f}")
                price = min(400.0, max(5.0, price * (1.0 + rng.uniform(-0.08, 0.10))))
    return "\n".join(lines) + "\n"


ENRICH_REPLY = """```json
{"dataset_description": "stock prices for top 5 tech companies for 10 years",
 "columns": [
  {"name": "symbol", "semantic_description": "company ticker symbol", "semantic_type": "company ticker"},
  {"name": "date", "semantic_description": "first day of the trading month", "semantic_type": "month"},
  {"name": "price", "semantic_description": "closing share price in US dollars", "semantic_type": "price"}]}
```"""

BASE_SPEC = {
    "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
    "data": {"name": "table"},
    "mark": "line",
    "encoding": {
        "x": {"field": "date", "type": "temporal"},
        "y": {"field": "price", "type": "quantitative"},
        "color": {"field": "symbol", "type": "nominal"},
    },
}

BAD_TITLE_REPLY = """```json
{"mark": 12345, "data": {"name": "table"}}
```"""

WIDGET_LEGEND = """```html
<div id="legend-position" data-title="Legend position">
  <label for="legend-orient">Legend position</label>
  <select id="legend-orient">
    <option value="left" selected>left</option>
    <option value="top-left">top-left</option>
    <option value="top-right">top-right</option>
    <option value="bottom-left">bottom-left</option>
    <option value="bottom-right">bottom-right</option>
  </select>
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.color) { chart.encoding.color = {}; }
  if (!chart.encoding.color.legend) { chart.encoding.color.legend = {}; }
  chart.encoding.color.legend.orient = event.target.value;
  return [transforms, chart];
}
```"""

WIDGET_AXIS = """```html
<div id="axis-style" data-title="X axis labels">
  <label for="label-angle">Label angle</label>
  <input id="label-angle" type="range" min="-90" max="90" value="60">
  <label for="label-size">Label font size</label>
  <input id="label-size" type="number" min="8" max="32" value="20">
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.x) { chart.encoding.x = {}; }
  if (!chart.encoding.x.axis) { chart.encoding.x.axis = {}; }
  if (event.target.id === "label-angle") {
    chart.encoding.x.axis.labelAngle = Number(event.target.value);
  } else {
    chart.encoding.x.axis.labelFontSize = Number(event.target.value);
  }
  return [transforms, chart];
}
```"""

WIDGET_COLORS = """```html
<div id="symbol-colors" data-title="Symbol colors">
  <label for="color-AAPL">AAPL</label>
  <input id="color-AAPL" type="color" value="#4c78a8">
  <label for="color-AMZN">AMZN</label>
  <input id="color-AMZN" type="color" value="#f58518">
  <label for="color-GOOG">GOOG</label>
  <input id="color-GOOG" type="color" value="#e45756">
  <label for="color-IBM">IBM</label>
  <input id="color-IBM" type="color" value="#72b7b2">
  <label for="color-MSFT">MSFT</label>
  <input id="color-MSFT" type="color" value="#54a24b">
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  let symbols = ["AAPL", "AMZN", "GOOG", "IBM", "MSFT"];
  let range = [];
  for (let i = 0; i < symbols.length; i++) {
    range.push(document.getElementById("color-" + symbols[i]).value);
  }
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.color) { chart.encoding.color = {}; }
  chart.encoding.color.scale = {"domain": symbols, "range": range};
  return [transforms, chart];
}
```"""

WIDGET_SYMBOLS = """```html
<div id="symbol-picker" data-title="Symbols">
  <label><input id="pick-AAPL" type="checkbox" value="AAPL">AAPL</label>
  <label><input id="pick-AMZN" type="checkbox" value="AMZN">AMZN</label>
  <label><input id="pick-GOOG" type="checkbox" value="GOOG">GOOG</label>
  <label><input id="pick-IBM" type="checkbox" value="IBM" checked>IBM</label>
  <label><input id="pick-MSFT" type="checkbox" value="MSFT" checked>MSFT</label>
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  let symbols = ["AAPL", "AMZN", "GOOG", "IBM", "MSFT"];
  let picks = [];
  for (let i = 0; i < symbols.length; i++) {
    let box = document.getElementById("pick-" + symbols[i]);
    if (box && box.checked) { picks.push(symbols[i]); }
  }
  transforms.push({"filter": {"field": "symbol", "oneOf": picks}});
  return [transforms, chart];
}
```"""

WIDGET_DATES = """```html
<div id="date-window" data-title="Date window">
  <label for="start-year">Start year</label>
  <input id="start-year" type="number" min="2000" max="2009" value="2004">
  <label for="end-year">End year</label>
  <input id="end-year" type="number" min="2000" max="2009" value="2007">
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  let start = Number(document.getElementById("start-year").value);
  let end = Number(document.getElementById("end-year").value);
  transforms.push({"filter": {"field": "date", "range": [
    {"year": start, "month": 1, "date": 1},
    {"year": end, "month": 12, "date": 31}
  ]}});
  return [transforms, chart];
}
```"""

WIDGET_YCAP = """```html
<div id="y-cap" data-title="Y axis cap">
  <label for="y-max">Max price</label>
  <input id="y-max" type="range" min="50" max="400" value="300">
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.y) { chart.encoding.y = {}; }
  chart.encoding.y.scale = {"domain": [0, Number(event.target.value)]};
  return [transforms, chart];
}
```"""

WIDGET_TITLE = """```html
<div id="chart-title" data-title="Chart title">
  <label for="title-text">Title</label>
  <input id="title-text" type="text" value="Stock prices over time">
</div>
```

```js
function callback(event, chart) {
  let transforms = [];
  chart.title = String(event.target.value);
  return [transforms, chart];
}
```"""

CHART_MARKER = "## Current chart specification"
WIDGET_MARKER = "exactly two fenced code blocks"
ENRICH_MARKER = '"dataset_description"'


def json_block(document: dict) -> str:
    return "```json\n" + json.dumps(document, indent=2) + "\n```"


def grounding_chart(system: str) -> dict:
    """Pull the current chart out of a rendered system prompt."""
    tail = system.split(CHART_MARKER, 1)[1]
    start = tail.index("```json\n") + len("```json\n")
    end = tail.index("\n```", start)
    return json.loads(tail[start:end])


def mutate_legend(chart: dict) -> dict:
    chart["encoding"]["color"]["legend"] = {"orient": "left"}
    return chart


def mutate_axis(chart: dict) -> dict:
    chart["encoding"]["x"]["axis"] = {"labelAngle": 60, "labelFontSize": 20}
    return chart


def mutate_symbols(chart: dict) -> dict:
    chart["transform"] = [{"filter": {"field": "symbol", "oneOf": ["MSFT", "IBM"]}}]
    return chart


def mutate_dates(chart: dict) -> dict:
    # string endpoints on purpose: the engine's date repair rewrites them
    chart.setdefault("transform", []).append(
        {"filter": {"field": "date", "range": ["2004-01-01", "2007-12-31"]}}
    )
    return chart


def mutate_title(chart: dict) -> dict:
    chart["title"] = "Stock prices over time"
    return chart


CHART_RULES = (
    ("move the legend", mutate_legend),
    ("rotate the x axis labels", mutate_axis),
    ("only the data for MSFT and IBM", mutate_symbols),
    ("only 2004 through 2007", mutate_dates),
    ("descriptive title", mutate_title),
)


def chart_reply(system: str, command: str, is_repair: bool) -> str:
    if "create a line chart" in command:
        return json_block(BASE_SPEC)
    if "descriptive title" in command and not is_repair:
        return BAD_TITLE_REPLY
    for needle, mutate in CHART_RULES:
        if needle in command:
            return json_block(mutate(copy.deepcopy(grounding_chart(system))))
    raise AssertionError(f"no chart rule for command {command!r}")


def widget_reply(system: str, command: str) -> str:
    if "/encoding/color/legend" in command:
        return WIDGET_LEGEND
    if "/encoding/x/axis" in command:
        return WIDGET_AXIS
    if "color of each stock symbol" in command:
        return WIDGET_COLORS
    if "/transform" in command:
        chart = grounding_chart(system)
        has_range = any(
            isinstance(t.get("filter"), dict) and "range" in t["filter"]
            for t in chart.get("transform", [])
        )
        return WIDGET_DATES if has_range else WIDGET_SYMBOLS
    if "cap the y axis" in command:
        return WIDGET_YCAP
    if "/title" in command:
        return WIDGET_TITLE
    raise AssertionError(f"no widget rule for command {command!r}")


def provider_handler(request: httpx.Request) -> httpx.Response:
    payload = json.loads(request.content.decode("utf-8"))
    messages = payload["messages"]
    system = messages[0]["content"]
    command = messages[1]["content"]
    is_repair = messages[-1]["content"].startswith("Your previous answer failed validation")
    if ENRICH_MARKER in system and CHART_MARKER not in system:
        content = ENRICH_REPLY
    elif WIDGET_MARKER in system:
        content = widget_reply(system, command)
    else:
        content = chart_reply(system, command, is_repair)
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


SCENARIO = {
    "version": 1,
    "dataset": {"path": "data/stocks.csv"},
    "steps": [
        {"kind": "chart_command", "command": "create a line chart showing the stock trends"},
        {"kind": "assert", "pointer": "/mark", "equals": "line"},
        {"kind": "assert", "pointer": "/encoding/y/field", "equals": "price"},
        {"kind": "chart_command", "command": "move the legend to the left of the chart"},
        {"kind": "widget_event", "widget": "legend-position", "target_id": "legend-orient", "value": "top-left"},
        {"kind": "assert", "pointer": "/encoding/color/legend/orient", "equals": "top-left"},
        {"kind": "chart_command", "command": "rotate the x axis labels 60 degrees and set the label font size to 20"},
        {"kind": "widget_event", "widget": "axis-style", "target_id": "label-angle", "value": "-45"},
        {"kind": "assert", "pointer": "/encoding/x/axis/labelAngle", "equals": -45},
        {"kind": "widget_event", "widget": "axis-style", "target_id": "label-size", "value": "15"},
        {"kind": "assert", "pointer": "/encoding/x/axis/labelFontSize", "equals": 15},
        {"kind": "assert", "pointer": "/encoding/x/axis/labelAngle", "equals": -45},
        {"kind": "widget_command", "command": "change the color of each stock symbol"},
        {"kind": "widget_event", "widget": "symbol-colors", "target_id": "color-GOOG", "value": "#00aa00"},
        {"kind": "assert", "pointer": "/encoding/color/scale/range/2", "equals": "#00aa00"},
        {"kind": "assert", "pointer": "/encoding/color/scale/domain", "equals": ["AAPL", "AMZN", "GOOG", "IBM", "MSFT"]},
        {"kind": "chart_command", "command": "show only the data for MSFT and IBM"},
        {"kind": "widget_event", "widget": "symbol-picker", "target_id": "pick-GOOG", "value": "GOOG", "checked": True},
        {"kind": "assert", "pointer": "/transform/1/filter/oneOf", "equals": ["GOOG", "IBM", "MSFT"]},
        {"kind": "widget_event", "widget": "symbol-picker", "target_id": "pick-GOOG", "value": "GOOG", "checked": False},
        {"kind": "assert", "pointer": "/transform/1/filter/oneOf", "equals": ["IBM", "MSFT"]},
        {"kind": "chart_command", "command": "show only 2004 through 2007"},
        {"kind": "assert", "pointer": "/transform/1/filter/range/0", "equals": {"year": 2004, "month": 1, "date": 1}},
        {"kind": "widget_event", "widget": "date-window", "target_id": "start-year", "value": "2005"},
        {"kind": "assert", "pointer": "/transform/3/filter/range/0/year", "equals": 2005},
        {"kind": "widget_command", "command": "add a slider to cap the y axis"},
        {"kind": "widget_event", "widget": "y-cap", "target_id": "y-max", "value": "250"},
        {"kind": "assert", "pointer": "/encoding/y/scale/domain/1", "equals": 250},
        {"kind": "toggle", "widget": "symbol-picker", "enabled": False},
        {"kind": "assert", "pointer": "/transform/2/filter/range/0/year", "equals": 2005},
        {"kind": "toggle", "widget": "symbol-picker", "enabled": True},
        {"kind": "assert", "pointer": "/transform/2/filter/oneOf", "equals": ["IBM", "MSFT"]},
        {"kind": "chart_command", "command": "give the chart a descriptive title"},
        {"kind": "assert", "pointer": "/title", "equals": "Stock prices over time"},
        {"kind": "assert", "pointer": "/encoding/color/legend/orient", "equals": "top-left"},
        {"kind": "assert", "pointer": "/encoding/x/axis/labelAngle", "equals": -45},
        {"kind": "assert", "pointer": "/encoding/x/axis/labelFontSize", "equals": 15},
        {"kind": "assert", "pointer": "/transform/0/filter/oneOf", "equals": ["MSFT", "IBM"]},
    ],
}


def main() -> None:
    llm_dir = FIXTURES / "llm"
    data_dir = FIXTURES / "data"
    llm_dir.mkdir(parents=True, exist_ok=True)
    data_dir.mkdir(parents=True, exist_ok=True)

    (data_dir / "stocks.csv").write_text(build_stocks_csv(), encoding="utf-8")
    scenario_path = FIXTURES / "scenario.json"
    scenario_path.write_text(json.dumps(SCENARIO, indent=2) + "\n", encoding="utf-8")

    record_path = llm_dir / "scenario.jsonl"
    if record_path.exists():
        record_path.unlink()
    gateway = LLMGateway(
        mode="record",
        endpoint="http://provider.invalid/v1/chat/completions",
        fixture_dir=llm_dir,
        record_path=record_path,
        transport=httpx.MockTransport(provider_handler),
    )
    outcome = run_script(load_script(scenario_path), gateway=gateway, store=SessionStore())
    for step in outcome.steps:
        if not step["ok"]:
            print(json.dumps(step, indent=2))
    if outcome.metrics.failures:
        raise SystemExit(f"scenario failed while recording: {outcome.metrics.to_json()}")

    replay_gateway = LLMGateway(mode="replay", fixture_dir=llm_dir)
    verify = run_script(load_script(scenario_path), gateway=replay_gateway, store=SessionStore())
    if verify.metrics.failures:
        for step in verify.steps:
            if not step["ok"]:
                print(json.dumps(step, indent=2))
        raise SystemExit(f"scenario failed in replay: {verify.metrics.to_json()}")

    entries = sum(1 for _ in open(record_path, encoding="utf-8"))
    print(f"recorded {entries} gateway replies; replay verified "
          f"({verify.metrics.steps_run} steps, mean retries {verify.metrics.mean_retries:.2f})")


if __name__ == "__main__":
    main()
