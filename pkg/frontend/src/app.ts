/** Composition root: one session, one chart, one widget panel.
 *
 * The controller owns the session id and the base chart the widget
 * callbacks edit. Everything drawn on the canvas comes back from the
 * service's effective-spec composition; the UI never filters or
 * patches a spec on its own.
 */

import { ApiClient } from "./api";
import { renderCommandBar } from "./commands";
import type { ChartRenderer } from "./renderer";
import { renderTablePanel } from "./table";
import { WidgetPanel } from "./widgets";
import {
  datasetRecords,
  type ChartCommandResponse,
  type ChartDocument,
  type SessionSnapshot,
} from "./types";

export interface AppElements {
  table: HTMLElement;
  commands: HTMLElement;
  chart: HTMLElement;
  widgets: HTMLElement;
  status: HTMLElement;
}

export interface AppDeps {
  api: ApiClient;
  makeRenderer: (records: Record<string, unknown>[]) => ChartRenderer;
}

export interface StartPayload {
  csv?: string;
  records?: Record<string, unknown>[];
  spec?: ChartDocument;
}

export class AppController {
  readonly panel: WidgetPanel;
  private sessionId = "";
  private base: ChartDocument = {};
  private renderer: ChartRenderer | null = null;
  private lastRendered: ChartDocument | null = null;

  constructor(
    private readonly elements: AppElements,
    private readonly deps: AppDeps,
  ) {
    this.panel = new WidgetPanel(elements.widgets, {
      api: deps.api,
      sessionId: () => this.sessionId,
      baseChart: () => this.base,
      applyResult: (effective, base) => {
        this.base = base;
        void this.render(effective);
      },
      applyEffective: (effective) => {
        void this.render(effective);
      },
    });
    renderCommandBar(elements.commands, {
      onChartCommand: async (command) => {
        await this.runChartCommand(command);
      },
      onWidgetCommand: (command) => this.runWidgetCommand(command),
    });
  }

  rendered(): ChartDocument | null {
    return this.lastRendered;
  }

  session(): string {
    return this.sessionId;
  }

  async start(payload: StartPayload): Promise<SessionSnapshot> {
    this.sessionId = await this.deps.api.createSession(payload);
    const snapshot = await this.deps.api.getSession(this.sessionId);
    this.renderer = this.deps.makeRenderer(datasetRecords(snapshot.dataset));
    renderTablePanel(this.elements.table, snapshot);
    this.applySnapshot(snapshot);
    if (snapshot.base_chart !== null) {
      await this.render(await this.deps.api.effectiveSpec(this.sessionId));
    } else {
      this.elements.chart.textContent = "No chart yet. Ask for one above.";
    }
    return snapshot;
  }

  async runChartCommand(command: string): Promise<ChartCommandResponse> {
    const response = await this.deps.api.chartCommand(this.sessionId, command);
    const snapshot = await this.deps.api.getSession(this.sessionId);
    this.applySnapshot(snapshot);
    await this.render(response.chart);
    this.showMeta(response);
    return response;
  }

  async runWidgetCommand(command: string): Promise<void> {
    await this.deps.api.widgetCommand(this.sessionId, command);
    const snapshot = await this.deps.api.getSession(this.sessionId);
    this.applySnapshot(snapshot);
    if (snapshot.base_chart !== null) {
      await this.render(await this.deps.api.effectiveSpec(this.sessionId));
    }
  }

  private applySnapshot(snapshot: SessionSnapshot): void {
    this.base = snapshot.base_chart ?? {};
    this.panel.sync(snapshot.widgets);
  }

  private async render(spec: ChartDocument): Promise<void> {
    this.lastRendered = spec;
    if (this.renderer !== null) {
      await this.renderer.render(this.elements.chart, spec);
    }
  }

  private showMeta(response: ChartCommandResponse): void {
    const meta = response.meta;
    const parts = [
      `${meta.attempts} attempt${meta.attempts === 1 ? "" : "s"}`,
      `${meta.repair_rounds} repair${meta.repair_rounds === 1 ? "" : "s"}`,
    ];
    if (meta.date_repairs.length > 0) parts.push(`${meta.date_repairs.length} dates normalized`);
    if (response.auto_widget) parts.push(`widget added: ${response.auto_widget.title}`);
    this.elements.status.textContent = parts.join(", ");
  }
}
