/** Constrained execution of widget callbacks.
 *
 * A callback is compiled into a scope where only (event, chart) carry
 * information in: page globals are shadowed, and `document` is a
 * lookup-only facade over the widget's own subtree, mirroring the
 * server-side sandbox where the fragment is the whole document.
 */

import type { CallbackResult, ChartDocument } from "./types";

export class CallbackError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CallbackError";
  }
}

// shadowed inside the compiled scope so the callback cannot reach them
const BLOCKED = [
  "window",
  "globalThis",
  "self",
  "top",
  "parent",
  "frames",
  "fetch",
  "XMLHttpRequest",
  "WebSocket",
  "EventSource",
  "localStorage",
  "sessionStorage",
  "indexedDB",
  "navigator",
  "location",
  "history",
  "cookie",
  "alert",
  "prompt",
  "confirm",
  "open",
  "require",
  "process",
  "module",
  "exports",
  "Buffer",
  "importScripts",
  "setTimeout",
  "setInterval",
  "queueMicrotask",
];

function scopedDocument(root: Element) {
  const byId = (id: string): Element | null => {
    if (root.id === id) return root;
    for (const el of root.querySelectorAll("[id]")) {
      if (el.id === id) return el;
    }
    return null;
  };
  const facade = {
    getElementById: byId,
    querySelector: (selector: string) =>
      root.matches(selector) ? root : root.querySelector(selector),
    querySelectorAll: (selector: string) => Array.from(root.querySelectorAll(selector)),
  };
  return Object.freeze(facade);
}

export type CompiledCallback = (event: Event, chart: ChartDocument) => CallbackResult;

export function compileCallback(source: string, root: Element): CompiledCallback {
  let factory: (doc: unknown) => unknown;
  try {
    factory = new Function(
      "document",
      `"use strict";
var ${BLOCKED.join(", ")};
${source}
if (typeof callback !== "function") { throw new Error("no callback function defined"); }
return callback;`,
    ) as (doc: unknown) => unknown;
  } catch (exc) {
    throw new CallbackError(`callback does not parse: ${String(exc)}`);
  }

  let fn: unknown;
  try {
    fn = factory(scopedDocument(root));
  } catch (exc) {
    throw new CallbackError(`callback setup failed: ${String(exc)}`);
  }
  if (typeof fn !== "function") {
    throw new CallbackError("no callback function defined");
  }

  return (event: Event, chart: ChartDocument): CallbackResult => {
    // the callback edits a private copy; the caller's spec is never touched
    const copy = JSON.parse(JSON.stringify(chart)) as ChartDocument;
    let returned: unknown;
    try {
      returned = (fn as (e: Event, c: ChartDocument) => unknown)(event, copy);
    } catch (exc) {
      throw new CallbackError(`callback threw: ${String(exc)}`);
    }
    if (!Array.isArray(returned) || returned.length !== 2) {
      throw new CallbackError("callback must return [transforms, chart]");
    }
    const [transforms, outChart] = returned as [unknown, unknown];
    if (!Array.isArray(transforms)) {
      throw new CallbackError("callback transforms must be an array");
    }
    if (typeof outChart !== "object" || outChart === null || Array.isArray(outChart)) {
      throw new CallbackError("callback chart must be an object");
    }
    return { transforms, chart: outChart as ChartDocument };
  };
}
