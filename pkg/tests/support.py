"""Shared builders and fakes for the test suite."""

from __future__ import annotations

import json

from dynavis.chart.model import ChartSpec
from dynavis.widgets.model import Widget

POINT_SPEC = {
    "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
    "data": {"name": "table"},
    "mark": "point",
    "encoding": {
        "x": {"field": "horsepower", "type": "quantitative"},
        "y": {"field": "mpg", "type": "quantitative"},
        "color": {"field": "origin", "type": "nominal"},
    },
}

STOCKS_SPEC = {
    "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
    "data": {"name": "table"},
    "mark": "line",
    "encoding": {
        "x": {"field": "date", "type": "temporal"},
        "y": {"field": "price", "type": "quantitative"},
        "color": {"field": "symbol", "type": "nominal"},
    },
}

CARS_CSV = """mpg,horsepower,origin,year
18.0,130,USA,1970-01-01
15.0,165,USA,1970-01-01
24.0,95,Japan,1971-01-01
27.0,88,Japan,1972-01-01
26.0,46,Europe,1971-01-01
25.0,87,Europe,1972-01-01
30.0,70,Japan,1973-01-01
22.0,85,USA,1973-01-01
"""


def point_spec() -> ChartSpec:
    return ChartSpec(json.loads(json.dumps(POINT_SPEC)))


def stocks_spec() -> ChartSpec:
    return ChartSpec(json.loads(json.dumps(STOCKS_SPEC)))


def json_block(document: dict) -> str:
    return "```json\n" + json.dumps(document, indent=2) + "\n```"


def dual_block(markup: str, callback_source: str) -> str:
    return "```html\n" + markup + "\n```\n\n```js\n" + callback_source + "\n```"


SLIDER_MARKUP = """<div id="angle-widget" data-title="Label angle">
  <label for="angle-input">Angle</label>
  <input id="angle-input" type="range" min="-90" max="90" value="0">
</div>"""

SLIDER_CALLBACK = """function callback(event, chart) {
  let transforms = [];
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.x) { chart.encoding.x = {}; }
  if (!chart.encoding.x.axis) { chart.encoding.x.axis = {}; }
  chart.encoding.x.axis.labelAngle = Number(event.target.value);
  return [transforms, chart];
}"""

FILTER_MARKUP = """<div id="symbol-widget" data-title="Symbols">
  <label><input id="sym-IBM" type="checkbox" value="IBM" checked>IBM</label>
  <label><input id="sym-MSFT" type="checkbox" value="MSFT" checked>MSFT</label>
  <label><input id="sym-AAPL" type="checkbox" value="AAPL">AAPL</label>
</div>"""

FILTER_CALLBACK = """function callback(event, chart) {
  let transforms = [];
  let names = ["IBM", "MSFT", "AAPL"];
  let picks = [];
  for (let i = 0; i < names.length; i++) {
    let box = document.getElementById("sym-" + names[i]);
    if (box && box.checked) { picks.push(names[i]); }
  }
  transforms.push({"filter": {"field": "symbol", "oneOf": picks}});
  return [transforms, chart];
}"""


def make_widget(
    widget_id: str = "angle-widget",
    markup: str = SLIDER_MARKUP,
    callback_source: str = SLIDER_CALLBACK,
    is_transform_widget: bool = False,
    title: str = "",
) -> Widget:
    return Widget(
        id=widget_id,
        title=title or widget_id,
        markup=markup,
        callback_source=callback_source,
        is_transform_widget=is_transform_widget,
    )


def filter_widget() -> Widget:
    return make_widget(
        "symbol-widget", FILTER_MARKUP, FILTER_CALLBACK, is_transform_widget=True
    )


class ScriptedLLM:
    """Gateway stand-in that pops queued replies; Exception entries raise."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def complete(self, conv):
        self.calls.append(conv)
        if not self.replies:
            raise AssertionError("ScriptedLLM ran out of replies")
        item = self.replies.pop(0)
        if isinstance(item, Exception):
            raise item
        return item
