/** Widget fixtures shared by the UI tests.
 *
 * These mirror the service's own test widgets: a filter widget whose
 * callback reports transforms, and a slider widget that edits the
 * chart programmatically and reports none.
 */

import type { ChartDocument } from "../src/types";

export const FILTER_MARKUP = `<div id="symbol-widget" data-title="Symbols">
  <label><input id="sym-IBM" type="checkbox" value="IBM" checked>IBM</label>
  <label><input id="sym-MSFT" type="checkbox" value="MSFT" checked>MSFT</label>
  <label><input id="sym-AAPL" type="checkbox" value="AAPL">AAPL</label>
</div>`;

export const FILTER_CALLBACK = `function callback(event, chart) {
  let transforms = [];
  let names = ["IBM", "MSFT", "AAPL"];
  let picks = [];
  for (let i = 0; i < names.length; i++) {
    let box = document.getElementById("sym-" + names[i]);
    if (box && box.checked) { picks.push(names[i]); }
  }
  transforms.push({"filter": {"field": "symbol", "oneOf": picks}});
  return [transforms, chart];
}`;

export const SLIDER_MARKUP = `<div id="angle-widget" data-title="Label angle">
  <label for="angle-input">Angle</label>
  <input id="angle-input" type="range" min="-90" max="90" value="0">
</div>`;

export const SLIDER_CALLBACK = `function callback(event, chart) {
  let transforms = [];
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.x) { chart.encoding.x = {}; }
  if (!chart.encoding.x.axis) { chart.encoding.x.axis = {}; }
  chart.encoding.x.axis.labelAngle = Number(event.target.value);
  return [transforms, chart];
}`;

export const BASE_CHART: ChartDocument = {
  $schema: "https://vega.github.io/schema/vega-lite/v5.json",
  data: { name: "table" },
  mark: "line",
  encoding: {
    x: { field: "date", type: "temporal" },
    y: { field: "price", type: "quantitative" },
    color: { field: "symbol", type: "nominal" },
  },
};

export const DATASET = {
  columns: [
    { name: "symbol", atomic_type: "string" },
    { name: "date", atomic_type: "date" },
    { name: "price", atomic_type: "number" },
  ],
  rows: [
    ["MSFT", "2000-01-01", 39.81],
    ["IBM", "2000-01-01", 100.52],
    ["AAPL", "2000-01-01", 25.94],
    ["MSFT", "2000-02-01", 36.35],
    ["IBM", "2000-02-01", 92.11],
    ["AAPL", "2000-02-01", 28.66],
  ],
};

export const SUMMARY = {
  dataset_description: "Monthly closing prices for three stocks.",
  columns: DATASET.columns.map((column) => ({
    stats: {
      name: column.name,
      atomic_type: column.atomic_type,
      min: null,
      max: null,
      unique_count: 3,
      null_count: 0,
      samples: [],
    },
    semantic_description: `the ${column.name} column`,
    semantic_type: column.name,
  })),
  enrich_warning: false,
};
