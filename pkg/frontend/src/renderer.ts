/** Chart rendering.
 *
 * The spec is the single source of truth: this module only draws what
 * the service hands back, injecting the session's rows under the
 * "table" dataset name the specs reference.
 */

import type { ChartDocument } from "./types";

export interface ChartRenderer {
  render(host: HTMLElement, spec: ChartDocument): Promise<void>;
}

export function withTableData(
  spec: ChartDocument,
  records: Record<string, unknown>[],
): ChartDocument {
  const data = spec["data"] as { name?: string } | undefined;
  if (!data || data.name === undefined) return spec;
  const datasets = { ...(spec["datasets"] as Record<string, unknown> | undefined) };
  datasets[data.name] = records;
  return { ...spec, datasets };
}

export function vegaRenderer(records: Record<string, unknown>[]): ChartRenderer {
  return {
    async render(host: HTMLElement, spec: ChartDocument): Promise<void> {
      const embed = (await import("vega-embed")).default;
      await embed(host, withTableData(spec, records) as never, { actions: false });
    },
  };
}
