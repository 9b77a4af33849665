/** Wire types for the session service. */

export type ChartDocument = Record<string, unknown>;

export interface WidgetInfo {
  id: string;
  title: string;
  markup: string;
  callback_source: string;
  is_transform_widget: boolean;
  enabled: boolean;
  seq: number;
}

export interface ColumnStats {
  name: string;
  atomic_type: string;
  min: unknown;
  max: unknown;
  unique_count: number;
  null_count: number;
  samples: unknown[];
}

export interface ColumnSummary {
  stats: ColumnStats;
  semantic_description: string;
  semantic_type: string;
}

export interface DataSummary {
  dataset_description: string;
  columns: ColumnSummary[];
  enrich_warning: boolean;
}

export interface DatasetJson {
  columns: { name: string; atomic_type: string }[];
  rows: unknown[][];
}

export interface SessionSnapshot {
  session_id: string;
  summary: DataSummary;
  base_chart: ChartDocument | null;
  widgets: WidgetInfo[];
  dataset: DatasetJson;
}

export interface ChartCommandResponse {
  chart: ChartDocument;
  meta: {
    attempts: number;
    repair_rounds: number;
    date_repairs: unknown[];
    auto_widget_meta?: Record<string, unknown>;
  };
  auto_widget?: WidgetInfo;
}

export interface WidgetCommandResponse {
  widget: WidgetInfo;
}

export interface EffectiveSpecResponse {
  effective_spec: ChartDocument;
}

/** What a widget callback must hand back. */
export interface CallbackResult {
  transforms: unknown[];
  chart: ChartDocument;
}

export function datasetRecords(dataset: DatasetJson): Record<string, unknown>[] {
  const names = dataset.columns.map((c) => c.name);
  return dataset.rows.map((row) =>
    Object.fromEntries(names.map((name, i) => [name, row[i]])),
  );
}
