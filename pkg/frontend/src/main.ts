import { ApiClient } from "./api";
import { AppController } from "./app";
import { vegaRenderer } from "./renderer";
import type { ChartDocument } from "./types";

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (element === null) throw new Error(`missing element #${id}`);
  return element as T;
}

const setup = byId<HTMLFormElement>("setup");
const csvInput = byId<HTMLTextAreaElement>("setup-csv");
const specInput = byId<HTMLTextAreaElement>("setup-spec");
const setupError = byId<HTMLParagraphElement>("setup-error");
const workspace = byId<HTMLDivElement>("workspace");

const controller = new AppController(
  {
    table: byId("data-table"),
    commands: byId("command-bar"),
    chart: byId("chart-canvas"),
    widgets: byId("widget-panel"),
    status: byId("status-line"),
  },
  { api: new ApiClient(""), makeRenderer: vegaRenderer },
);

setup.addEventListener("submit", (event) => {
  event.preventDefault();
  setupError.textContent = "";
  const csv = csvInput.value.trim();
  if (csv === "") {
    setupError.textContent = "Paste a CSV dataset first.";
    return;
  }
  let spec: ChartDocument | undefined;
  const rawSpec = specInput.value.trim();
  if (rawSpec !== "") {
    try {
      spec = JSON.parse(rawSpec) as ChartDocument;
    } catch {
      setupError.textContent = "Starting spec is not valid JSON.";
      return;
    }
  }
  controller
    .start({ csv, spec })
    .then(() => {
      setup.hidden = true;
      workspace.hidden = false;
    })
    .catch((exc: unknown) => {
      setupError.textContent = exc instanceof Error ? exc.message : String(exc);
    });
});
