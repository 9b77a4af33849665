import { describe, expect, it } from "vitest";

import { CallbackError, compileCallback } from "../src/callback";
import type { ChartDocument } from "../src/types";
import { FILTER_CALLBACK, FILTER_MARKUP, SLIDER_CALLBACK, SLIDER_MARKUP } from "./fixtures";

function rootFrom(markup: string): Element {
  const host = document.createElement("div");
  host.innerHTML = markup;
  const root = host.firstElementChild;
  if (root === null) throw new Error("fixture markup is empty");
  return root;
}

function fakeEvent(value: string): Event {
  return { target: { value } } as unknown as Event;
}

describe("compileCallback", () => {
  it("runs the slider callback against a private chart copy", () => {
    const root = rootFrom(SLIDER_MARKUP);
    const callback = compileCallback(SLIDER_CALLBACK, root);
    const chart: ChartDocument = { mark: "line" };

    const result = callback(fakeEvent("40"), chart);

    expect(result.transforms).toEqual([]);
    expect(result.chart).toEqual({
      mark: "line",
      encoding: { x: { axis: { labelAngle: 40 } } },
    });
    expect(chart).toEqual({ mark: "line" });
  });

  it("lets the filter callback read its own inputs through document", () => {
    const root = rootFrom(FILTER_MARKUP);
    document.body.appendChild(root);
    (root.querySelector("#sym-MSFT") as HTMLInputElement).checked = false;

    const callback = compileCallback(FILTER_CALLBACK, root);
    const result = callback(fakeEvent(""), {});

    expect(result.transforms).toEqual([{ filter: { field: "symbol", oneOf: ["IBM"] } }]);
    root.remove();
  });

  it("scopes document lookups to the widget subtree", () => {
    const outside = document.createElement("input");
    outside.id = "probe";
    outside.value = "outside";
    document.body.appendChild(outside);

    const root = rootFrom('<div id="w"><input id="inner" value="inside"></div>');
    const callback = compileCallback(
      `function callback(event, chart) {
        chart.stray = document.getElementById("probe");
        chart.inner = document.getElementById("inner").value;
        chart.self = document.getElementById("w") !== null;
        return [[], chart];
      }`,
      root,
    );
    const result = callback(fakeEvent(""), {});

    expect(result.chart["stray"]).toBeNull();
    expect(result.chart["inner"]).toBe("inside");
    expect(result.chart["self"]).toBe(true);
    outside.remove();
  });

  it("shadows page globals inside the callback scope", () => {
    const root = rootFrom('<div id="w"></div>');
    const callback = compileCallback(
      `function callback(event, chart) {
        chart.kinds = [typeof fetch, typeof window, typeof localStorage, typeof XMLHttpRequest];
        return [[], chart];
      }`,
      root,
    );
    const result = callback(fakeEvent(""), {});
    expect(result.chart["kinds"]).toEqual(["undefined", "undefined", "undefined", "undefined"]);
  });

  it("rejects source that does not parse", () => {
    const root = rootFrom('<div id="w"></div>');
    expect(() => compileCallback("function callback(", root)).toThrowError(CallbackError);
    expect(() => compileCallback("function callback(", root)).toThrowError(/does not parse/);
  });

  it("rejects source that defines no callback function", () => {
    const root = rootFrom('<div id="w"></div>');
    expect(() => compileCallback("var callback = 3;", root)).toThrowError(
      /no callback function defined/,
    );
  });

  it("wraps exceptions thrown by the callback", () => {
    const root = rootFrom('<div id="w"></div>');
    const callback = compileCallback(
      'function callback(event, chart) { throw new Error("boom"); }',
      root,
    );
    expect(() => callback(fakeEvent(""), {})).toThrowError(/callback threw.*boom/);
  });

  it("rejects malformed return values", () => {
    const root = rootFrom('<div id="w"></div>');
    const cases: [string, RegExp][] = [
      ["function callback(e, c) { return {}; }", /must return \[transforms, chart\]/],
      ["function callback(e, c) { return [1, 2, 3]; }", /must return \[transforms, chart\]/],
      ["function callback(e, c) { return [{}, c]; }", /transforms must be an array/],
      ['function callback(e, c) { return [[], "x"]; }', /chart must be an object/],
      ["function callback(e, c) { return [[], [1]]; }", /chart must be an object/],
    ];
    for (const [source, pattern] of cases) {
      const callback = compileCallback(source, root);
      expect(() => callback(fakeEvent(""), {})).toThrowError(pattern);
    }
  });
});
