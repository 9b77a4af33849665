// One-shot callback harness. Reads a single JSON request on stdin:
//   {callback_source, event_json, chart_json, dom_json, timeout_ms}
// and writes a single JSON response on stdout:
//   {ok: true, result_json}  or  {ok: false, error: {kind, message}}
// kind is one of: timeout, io_blocked, exception, bad_return_shape.
//
// The callback runs inside a fresh vm context that holds only ECMAScript
// intrinsics plus realm-built emulation (console, document, I/O stubs).
// No host object is ever placed in the context; only strings cross in,
// and only the serialized result string crosses out.

"use strict";

const vm = require("node:vm");

const PRELUDE = `
(function () {
  "use strict";
  const BLOCKED = [
    "fetch", "XMLHttpRequest", "WebSocket", "EventSource", "require",
    "process", "module", "exports", "Buffer", "importScripts", "open",
    "localStorage", "sessionStorage", "indexedDB", "navigator",
    "alert", "prompt", "confirm",
  ];
  const stub = (name) => {
    const raise = () => {
      const err = new Error("blocked I/O access: " + name);
      err.__io_blocked = true;
      throw err;
    };
    return new Proxy(function () {}, {
      apply: raise,
      construct: raise,
      get: raise,
      set: raise,
      getPrototypeOf: raise,
      defineProperty: raise,
      deleteProperty: raise,
    });
  };
  for (const name of BLOCKED) {
    globalThis[name] = stub(name);
  }
  const noop = () => {};
  globalThis.console = {
    log: noop, warn: noop, error: noop, info: noop, debug: noop, trace: noop,
  };

  const dom = JSON.parse(__dom_json);
  const doc = {
    getElementById(id) {
      const key = String(id);
      return Object.prototype.hasOwnProperty.call(dom, key) ? dom[key] : null;
    },
    querySelector(sel) {
      if (typeof sel === "string" && sel.charAt(0) === "#") {
        return doc.getElementById(sel.slice(1));
      }
      return null;
    },
    querySelectorAll(sel) {
      const el = doc.querySelector(sel);
      return el === null ? [] : [el];
    },
  };
  globalThis.document = doc;
  globalThis.window = globalThis;

  const event = JSON.parse(__event_json);
  if (event && event.target && event.target.id != null) {
    const el = doc.getElementById(event.target.id);
    if (el !== null) {
      el.value = event.target.value;
      if ("checked" in event.target) {
        el.checked = event.target.checked;
      }
      event.target = el;
    }
  }
  globalThis.__event = event;
  globalThis.__chart = JSON.parse(__chart_json);
  delete globalThis.__event_json;
  delete globalThis.__chart_json;
  delete globalThis.__dom_json;
})();
`;

function readStdin() {
  return new Promise((resolve, reject) => {
    const chunks = [];
    process.stdin.on("data", (chunk) => chunks.push(chunk));
    process.stdin.on("end", () => resolve(Buffer.concat(chunks).toString("utf8")));
    process.stdin.on("error", reject);
  });
}

function clip(value) {
  return String(value).slice(0, 300);
}

function isTimeout(err) {
  return Boolean(err && err.code === "ERR_SCRIPT_EXECUTION_TIMEOUT");
}

function isIoBlocked(err) {
  try {
    return Boolean(err) && err.__io_blocked === true;
  } catch (ignored) {
    return false;
  }
}

function describe(err) {
  try {
    if (err instanceof Error || (err && err.name && err.message !== undefined)) {
      return clip(err.name + ": " + err.message);
    }
    return clip("threw non-Error value: " + String(err));
  } catch (ignored) {
    return "threw an undescribable value";
  }
}

async function main() {
  const req = JSON.parse(await readStdin());
  const timeout = Math.max(1, Number(req.timeout_ms) || 1000);
  const sandbox = {
    __event_json: String(req.event_json),
    __chart_json: String(req.chart_json),
    __dom_json: String(req.dom_json || "{}"),
  };
  const context = vm.createContext(sandbox, {
    codeGeneration: { strings: true, wasm: false },
  });

  const program =
    PRELUDE +
    "\n" +
    String(req.callback_source) +
    "\n;globalThis.__result = callback(__event, __chart);";

  let outcome;
  try {
    vm.runInContext(program, context, {
      timeout,
      filename: "widget-callback.js",
    });
  } catch (err) {
    if (isTimeout(err)) {
      outcome = { kind: "timeout", message: "callback exceeded " + timeout + "ms" };
    } else if (isIoBlocked(err)) {
      outcome = { kind: "io_blocked", message: describe(err) };
    } else {
      outcome = { kind: "exception", message: describe(err) };
    }
  }

  if (!outcome) {
    // serialize inside the realm so host code never walks realm objects
    let resultJson;
    try {
      resultJson = vm.runInContext("JSON.stringify(__result)", context, { timeout });
    } catch (err) {
      outcome = isTimeout(err)
        ? { kind: "timeout", message: "callback timed out during result serialization" }
        : { kind: "bad_return_shape", message: "return value is not JSON-serializable: " + describe(err) };
    }
    if (!outcome) {
      if (typeof resultJson !== "string") {
        outcome = { kind: "bad_return_shape", message: "callback returned undefined" };
      } else {
        process.stdout.write(JSON.stringify({ ok: true, result_json: resultJson }) + "\n");
        return;
      }
    }
  }

  process.stdout.write(JSON.stringify({ ok: false, error: outcome }) + "\n");
}

main().catch((err) => {
  process.stdout.write(
    JSON.stringify({ ok: false, error: { kind: "exception", message: "harness failure: " + clip(err && err.message) } }) + "\n",
  );
  process.exit(1);
});
