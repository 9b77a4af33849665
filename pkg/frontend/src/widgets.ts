/** The dynamic widget panel.
 *
 * Widgets arrive from the service as markup plus a callback source.
 * Each one mounts exactly once, newest on top (descending seq). Every
 * input's change event runs the compiled callback against the current
 * chart and round-trips the result through the service; the chart on
 * screen is always whatever effective spec the service answered with.
 *
 * Interactions are serialized: at most one widget-result request is in
 * flight, later events queue behind it. A rejected result reverts the
 * input that caused it and surfaces the error on that widget's card.
 */

import { ApiClient } from "./api";
import { CallbackError, compileCallback, type CompiledCallback } from "./callback";
import type { ChartDocument, WidgetInfo } from "./types";

export interface WidgetPanelDeps {
  api: ApiClient;
  sessionId: () => string;
  /** Chart the callbacks edit; tracks the service's base chart. */
  baseChart: () => ChartDocument;
  /** A widget result was applied: new effective spec, new base chart. */
  applyResult: (effective: ChartDocument, base: ChartDocument) => void;
  /** A toggle or delete changed composition only. */
  applyEffective: (effective: ChartDocument) => void;
}

interface InputState {
  value: string;
  checked: boolean;
}

export interface MountedWidget {
  info: WidgetInfo;
  card: HTMLElement;
  root: Element | null;
  toggle: HTMLInputElement | null;
  failed: boolean;
}

function rememberState(element: Element): InputState {
  const input = element as HTMLInputElement;
  return { value: input.value ?? "", checked: Boolean(input.checked) };
}

function restoreState(element: Element, state: InputState): void {
  const input = element as HTMLInputElement;
  if ("checked" in input) input.checked = state.checked;
  if ("value" in input) input.value = state.value;
}

export class WidgetPanel {
  private readonly mounted = new Map<string, MountedWidget>();
  private readonly applied = new Map<Element, InputState>();
  private chain: Promise<void> = Promise.resolve();

  constructor(
    private readonly host: HTMLElement,
    private readonly deps: WidgetPanelDeps,
  ) {}

  /** Settles when every queued interaction has been processed. */
  idle(): Promise<void> {
    return this.chain;
  }

  get(widgetId: string): MountedWidget | undefined {
    return this.mounted.get(widgetId);
  }

  /** Reconcile the panel with the service's widget list. */
  sync(widgets: WidgetInfo[]): void {
    const alive = new Set(widgets.map((w) => w.id));
    for (const id of [...this.mounted.keys()]) {
      if (!alive.has(id)) this.unmount(id);
    }
    for (const info of widgets) {
      const existing = this.mounted.get(info.id);
      if (existing) {
        existing.info = info;
        if (existing.toggle) existing.toggle.checked = info.enabled;
      } else {
        this.mount(info);
      }
    }
  }

  mount(info: WidgetInfo): MountedWidget {
    const existing = this.mounted.get(info.id);
    if (existing) return existing;

    const card = document.createElement("section");
    card.className = "widget-card";
    card.dataset.widgetId = info.id;
    card.dataset.seq = String(info.seq);

    const header = document.createElement("header");
    const title = document.createElement("span");
    title.className = "widget-title";
    title.textContent = info.title;
    header.appendChild(title);

    let toggle: HTMLInputElement | null = null;
    if (info.is_transform_widget) {
      const label = document.createElement("label");
      label.className = "widget-toggle";
      toggle = document.createElement("input");
      toggle.type = "checkbox";
      toggle.checked = info.enabled;
      label.append(toggle, document.createTextNode(" enabled"));
      header.appendChild(label);
    }

    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "widget-remove";
    remove.textContent = "×";
    remove.title = "remove widget";
    header.appendChild(remove);

    const body = document.createElement("div");
    body.className = "widget-body";
    const errorLine = document.createElement("p");
    errorLine.className = "widget-error";
    errorLine.hidden = true;
    card.append(header, body, errorLine);

    const mountedWidget: MountedWidget = { info, card, root: null, toggle, failed: false };
    const fail = (message: string) => {
      mountedWidget.failed = true;
      card.classList.add("widget-failed");
      errorLine.hidden = false;
      errorLine.textContent = message;
    };

    let callback: CompiledCallback | null = null;
    try {
      body.innerHTML = info.markup;
      const root = body.firstElementChild;
      if (root === null) throw new CallbackError("markup produced no element");
      mountedWidget.root = root;
      callback = compileCallback(info.callback_source, root);
    } catch (exc) {
      // this card is dead on arrival; the rest of the panel is not
      fail(exc instanceof Error ? exc.message : String(exc));
    }

    if (mountedWidget.root !== null && callback !== null) {
      const compiled = callback;
      for (const input of mountedWidget.root.querySelectorAll("input, select, textarea")) {
        this.applied.set(input, rememberState(input));
        input.addEventListener("change", (event) => {
          this.enqueue(() => this.handleChange(mountedWidget, compiled, event, errorLine));
        });
      }
    }

    if (toggle !== null) {
      const control = toggle;
      control.addEventListener("change", () => {
        this.enqueue(() => this.handleToggle(mountedWidget, control, errorLine));
      });
    }
    remove.addEventListener("click", () => {
      this.enqueue(() => this.handleRemove(mountedWidget, errorLine));
    });

    this.insertInOrder(card, info.seq);
    this.mounted.set(info.id, mountedWidget);
    return mountedWidget;
  }

  unmount(widgetId: string): void {
    const entry = this.mounted.get(widgetId);
    if (!entry) return;
    if (entry.root !== null) {
      for (const input of entry.root.querySelectorAll("input, select, textarea")) {
        this.applied.delete(input);
      }
    }
    entry.card.remove();
    this.mounted.delete(widgetId);
  }

  /** Newest widgets carry the highest seq and belong on top. */
  private insertInOrder(card: HTMLElement, seq: number): void {
    for (const sibling of this.host.children) {
      const siblingSeq = Number((sibling as HTMLElement).dataset.seq ?? "0");
      if (siblingSeq < seq) {
        this.host.insertBefore(card, sibling);
        return;
      }
    }
    this.host.appendChild(card);
  }

  private enqueue(task: () => Promise<void>): void {
    this.chain = this.chain.then(task, task);
  }

  private async handleChange(
    mounted: MountedWidget,
    callback: CompiledCallback,
    event: Event,
    errorLine: HTMLElement,
  ): Promise<void> {
    const target = event.target as Element | null;
    const prior = target ? this.applied.get(target) : undefined;
    try {
      const result = callback(event, this.deps.baseChart());
      const response = await this.deps.api.widgetResult(
        this.deps.sessionId(),
        mounted.info.id,
        result.transforms,
        result.chart,
      );
      if (target) this.applied.set(target, rememberState(target));
      errorLine.hidden = true;
      this.deps.applyResult(response.effective_spec, result.chart);
    } catch (exc) {
      if (target && prior) restoreState(target, prior);
      errorLine.hidden = false;
      errorLine.textContent = exc instanceof Error ? exc.message : String(exc);
    }
  }

  private async handleToggle(
    mounted: MountedWidget,
    control: HTMLInputElement,
    errorLine: HTMLElement,
  ): Promise<void> {
    const enabled = control.checked;
    try {
      const response = await this.deps.api.toggleWidget(
        this.deps.sessionId(),
        mounted.info.id,
        enabled,
      );
      mounted.info.enabled = enabled;
      errorLine.hidden = true;
      this.deps.applyEffective(response.effective_spec);
    } catch (exc) {
      control.checked = !enabled;
      errorLine.hidden = false;
      errorLine.textContent = exc instanceof Error ? exc.message : String(exc);
    }
  }

  private async handleRemove(mounted: MountedWidget, errorLine: HTMLElement): Promise<void> {
    try {
      const response = await this.deps.api.deleteWidget(this.deps.sessionId(), mounted.info.id);
      this.unmount(mounted.info.id);
      this.deps.applyEffective(response.effective_spec);
    } catch (exc) {
      errorLine.hidden = false;
      errorLine.textContent = exc instanceof Error ? exc.message : String(exc);
    }
  }
}
