/** Typed client for the session REST API.
 *
 * The UI talks to the engine exclusively through this module; the
 * fetch function is injectable so tests can run against a scripted
 * transport instead of a live server.
 */

import type {
  ChartCommandResponse,
  ChartDocument,
  EffectiveSpecResponse,
  SessionSnapshot,
  WidgetCommandResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorKind: string,
    message: string,
    public readonly detailPath?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchFn = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let kind = `http_${response.status}`;
      let message = `${method} ${path} failed with ${response.status}`;
      let detail: string | undefined;
      try {
        const payload = await response.json();
        kind = payload.error_kind ?? kind;
        message = payload.message ?? message;
        detail = payload.detail_path;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(response.status, kind, message, detail);
    }
    return (await response.json()) as T;
  }

  async createSession(payload: {
    csv?: string;
    records?: Record<string, unknown>[];
    spec?: ChartDocument;
  }): Promise<string> {
    const body = await this.request<{ session_id: string }>("POST", "/api/sessions", payload);
    return body.session_id;
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  chartCommand(sessionId: string, command: string): Promise<ChartCommandResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/chart-commands`, { command });
  }

  widgetCommand(sessionId: string, command: string): Promise<WidgetCommandResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/widget-commands`, { command });
  }

  widgetResult(
    sessionId: string,
    widgetId: string,
    transforms: unknown[],
    chart: ChartDocument,
  ): Promise<EffectiveSpecResponse> {
    return this.request(
      "POST",
      `/api/sessions/${sessionId}/widgets/${widgetId}/result`,
      { transforms, chart },
    );
  }

  toggleWidget(
    sessionId: string,
    widgetId: string,
    enabled: boolean,
  ): Promise<EffectiveSpecResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/widgets/${widgetId}/toggle`, {
      enabled,
    });
  }

  deleteWidget(sessionId: string, widgetId: string): Promise<EffectiveSpecResponse> {
    return this.request("DELETE", `/api/sessions/${sessionId}/widgets/${widgetId}`);
  }

  async effectiveSpec(sessionId: string): Promise<ChartDocument> {
    const body = await this.request<{ spec: ChartDocument }>(
      "GET",
      `/api/sessions/${sessionId}/effective-spec`,
    );
    return body.spec;
  }
}
