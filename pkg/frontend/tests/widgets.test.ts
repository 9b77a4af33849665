import { describe, expect, it } from "vitest";

import type { WidgetInfo } from "../src/types";
import {
  BASE_CHART,
  FILTER_CALLBACK,
  FILTER_MARKUP,
  SLIDER_CALLBACK,
  SLIDER_MARKUP,
} from "./fixtures";
import { change, panelOrder, startApp } from "./harness";
import { MockService } from "./mock";

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

function filterMock(): MockService {
  const mock = new MockService();
  mock.base = clone(BASE_CHART);
  mock.addWidget({
    id: "sym-filter",
    title: "Symbols",
    markup: FILTER_MARKUP,
    callback_source: FILTER_CALLBACK,
    is_transform_widget: true,
    latest: [{ filter: { field: "symbol", oneOf: ["IBM", "MSFT"] } }],
  });
  return mock;
}

describe("widget panel", () => {
  it("mounts a transform widget with a toggle and a plain widget without one", async () => {
    const mock = filterMock();
    mock.addWidget({
      id: "angle",
      title: "Label angle",
      markup: SLIDER_MARKUP,
      callback_source: SLIDER_CALLBACK,
      is_transform_widget: false,
    });
    const { controller } = await startApp(mock);

    const filter = controller.panel.get("sym-filter");
    expect(filter).toBeDefined();
    expect(filter!.toggle).not.toBeNull();
    expect(filter!.toggle!.checked).toBe(true);
    expect(filter!.root!.querySelectorAll("input").length).toBe(3);

    const slider = controller.panel.get("angle");
    expect(slider!.toggle).toBeNull();
  });

  it("re-renders the chart from the service's effective spec after a change event", async () => {
    const mock = filterMock();
    const { controller, renderer } = await startApp(mock);

    expect(renderer.last()).toEqual(mock.effective());
    expect(renderer.last()["transform"]).toEqual([
      { filter: { field: "symbol", oneOf: ["IBM", "MSFT"] } },
    ]);

    const box = document.getElementById("sym-MSFT") as HTMLInputElement;
    box.checked = false;
    change(box);
    await controller.panel.idle();

    expect(mock.resultCalls.length).toBe(1);
    expect(mock.resultCalls[0].transforms).toEqual([
      { filter: { field: "symbol", oneOf: ["IBM"] } },
    ]);
    expect(mock.resultCalls[0].chart).toEqual(BASE_CHART);
    expect(renderer.last()).toEqual(mock.effective());
    expect(renderer.last()["transform"]).toEqual([
      { filter: { field: "symbol", oneOf: ["IBM"] } },
    ]);
  });

  it("toggling the widget off removes its filter from the rendered chart", async () => {
    const mock = filterMock();
    const { controller, renderer } = await startApp(mock);
    expect(renderer.last()["transform"]).toBeDefined();

    const toggle = controller.panel.get("sym-filter")!.toggle!;
    toggle.checked = false;
    change(toggle);
    await controller.panel.idle();

    expect(mock.widgets.get("sym-filter")!.enabled).toBe(false);
    expect(renderer.last()).toEqual(mock.effective());
    expect("transform" in renderer.last()).toBe(false);

    toggle.checked = true;
    change(toggle);
    await controller.panel.idle();
    expect(renderer.last()["transform"]).toEqual([
      { filter: { field: "symbol", oneOf: ["IBM", "MSFT"] } },
    ]);
  });

  it("stacks widgets newest first", async () => {
    const mock = filterMock();
    mock.addWidget({
      id: "angle",
      title: "Label angle",
      markup: SLIDER_MARKUP,
      callback_source: SLIDER_CALLBACK,
      is_transform_widget: false,
    });
    const { controller, elements } = await startApp(mock);
    expect(panelOrder(elements)).toEqual(["angle", "sym-filter"]);

    mock.onWidgetCommand = (): WidgetInfo =>
      mock.addWidget({
        id: "newest",
        title: "Newest",
        markup: '<div id="newest-root"><input id="n-in" type="range"></div>',
        callback_source: "function callback(e, c) { return [[], c]; }",
        is_transform_widget: false,
      });
    await controller.runWidgetCommand("add something");

    expect(panelOrder(elements)).toEqual(["newest", "angle", "sym-filter"]);
  });

  it("reverts the input and surfaces the error when the service rejects a result", async () => {
    const mock = filterMock();
    const { controller, renderer } = await startApp(mock);
    const before = renderer.specs.length;

    mock.rejectNextResult = {
      status: 400,
      error_kind: "invalid_transforms",
      message: "bad filter",
    };
    const box = document.getElementById("sym-IBM") as HTMLInputElement;
    box.checked = false;
    change(box);
    await controller.panel.idle();

    expect(box.checked).toBe(true);
    const card = controller.panel.get("sym-filter")!.card;
    const errorLine = card.querySelector(".widget-error") as HTMLElement;
    expect(errorLine.hidden).toBe(false);
    expect(errorLine.textContent).toBe("bad filter");
    expect(renderer.specs.length).toBe(before);

    box.checked = false;
    change(box);
    await controller.panel.idle();
    expect(errorLine.hidden).toBe(true);
    expect(renderer.last()["transform"]).toEqual([
      { filter: { field: "symbol", oneOf: ["MSFT"] } },
    ]);
  });

  it("serializes rapid changes into one request at a time", async () => {
    const mock = filterMock();
    const { controller, renderer } = await startApp(mock);

    const msft = document.getElementById("sym-MSFT") as HTMLInputElement;
    const ibm = document.getElementById("sym-IBM") as HTMLInputElement;
    msft.checked = false;
    change(msft);
    ibm.checked = false;
    change(ibm);
    await controller.panel.idle();

    expect(mock.resultCalls.length).toBe(2);
    expect(mock.maxActive).toBe(1);
    expect(renderer.last()).toEqual(mock.effective());
  });

  it("keeps other widgets alive when one fails to mount", async () => {
    const mock = filterMock();
    mock.addWidget({
      id: "broken",
      title: "Broken",
      markup: '<div id="broken-root"><input id="b-in"></div>',
      callback_source: "function callback( {",
      is_transform_widget: false,
    });
    const { controller, renderer } = await startApp(mock);

    const broken = controller.panel.get("broken")!;
    expect(broken.failed).toBe(true);
    expect(broken.card.classList.contains("widget-failed")).toBe(true);
    expect((broken.card.querySelector(".widget-error") as HTMLElement).hidden).toBe(false);

    const box = document.getElementById("sym-AAPL") as HTMLInputElement;
    box.checked = true;
    change(box);
    await controller.panel.idle();
    expect(renderer.last()["transform"]).toEqual([
      { filter: { field: "symbol", oneOf: ["IBM", "MSFT", "AAPL"] } },
    ]);
  });

  it("marks a widget failed when its markup yields no element", async () => {
    const mock = filterMock();
    mock.addWidget({
      id: "empty",
      title: "Empty",
      markup: "   ",
      callback_source: "function callback(e, c) { return [[], c]; }",
      is_transform_widget: false,
    });
    const { controller } = await startApp(mock);
    expect(controller.panel.get("empty")!.failed).toBe(true);
  });

  it("unmounts widgets that disappeared server-side without touching the rest", async () => {
    const mock = filterMock();
    mock.addWidget({
      id: "angle",
      title: "Label angle",
      markup: SLIDER_MARKUP,
      callback_source: SLIDER_CALLBACK,
      is_transform_widget: false,
    });
    const { controller, elements } = await startApp(mock);
    const filterCard = controller.panel.get("sym-filter")!.card;

    mock.widgets.delete("angle");
    controller.panel.sync(mock.newestFirst());

    expect(panelOrder(elements)).toEqual(["sym-filter"]);
    expect(controller.panel.get("angle")).toBeUndefined();
    expect(controller.panel.get("sym-filter")!.card).toBe(filterCard);
  });

  it("removes a widget through its card and renders the new effective spec", async () => {
    const mock = filterMock();
    const { controller, renderer, elements } = await startApp(mock);

    const remove = controller.panel
      .get("sym-filter")!
      .card.querySelector(".widget-remove") as HTMLButtonElement;
    remove.click();
    await controller.panel.idle();

    expect(mock.widgets.has("sym-filter")).toBe(false);
    expect(panelOrder(elements)).toEqual([]);
    expect("transform" in renderer.last()).toBe(false);
  });

  it("mounts each widget exactly once across repeated syncs", async () => {
    const mock = filterMock();
    const { controller, elements } = await startApp(mock);
    const card = controller.panel.get("sym-filter")!.card;

    controller.panel.sync(mock.newestFirst());
    controller.panel.sync(mock.newestFirst());

    expect(elements.widgets.children.length).toBe(1);
    expect(controller.panel.get("sym-filter")!.card).toBe(card);
  });

  it("reverts the toggle when the service rejects it", async () => {
    const mock = filterMock();
    const { controller } = await startApp(mock);
    const toggle = controller.panel.get("sym-filter")!.toggle!;

    mock.widgets.delete("sym-filter");
    toggle.checked = false;
    change(toggle);
    await controller.panel.idle();

    expect(toggle.checked).toBe(true);
    const errorLine = controller.panel
      .get("sym-filter")!
      .card.querySelector(".widget-error") as HTMLElement;
    expect(errorLine.textContent).toContain("not found");
  });

  it("feeds later callbacks the base chart updated by earlier results", async () => {
    const mock = filterMock();
    mock.addWidget({
      id: "angle",
      title: "Label angle",
      markup: SLIDER_MARKUP,
      callback_source: SLIDER_CALLBACK,
      is_transform_widget: false,
    });
    const { controller, renderer } = await startApp(mock);

    const slider = document.getElementById("angle-input") as HTMLInputElement;
    slider.value = "-45";
    change(slider);
    await controller.panel.idle();

    const afterFirst = renderer.last();
    expect(
      (afterFirst["encoding"] as { x: { axis: { labelAngle: number } } }).x.axis.labelAngle,
    ).toBe(-45);

    // the filter callback returns the chart untouched, so the chart the
    // service receives is exactly what the UI considers the base chart
    const box = document.getElementById("sym-AAPL") as HTMLInputElement;
    box.checked = true;
    change(box);
    await controller.panel.idle();

    const chartSeen = mock.resultCalls[1].chart;
    expect(
      (chartSeen["encoding"] as { x: { axis: { labelAngle: number } } }).x.axis.labelAngle,
    ).toBe(-45);
    expect(renderer.last()).toEqual(mock.effective());
    expect(renderer.last()["transform"]).toEqual([
      { filter: { field: "symbol", oneOf: ["IBM", "MSFT", "AAPL"] } },
    ]);
  });
});
