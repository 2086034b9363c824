// Payload shapes of the modelprobe HTTP API (see modelprobe.service.schemas).

export interface MetricDef {
  name: string;
  direction: "higher" | "lower" | "none";
  verdict_rule: Record<string, unknown>;
  recommendations: Record<string, string>;
  description?: string;
}

export interface ParameterDef {
  name: string;
  value_type: "int" | "float" | "string" | "json";
  default: unknown;
  minimum: number | null;
  maximum: number | null;
  mandatory: boolean;
  help?: string;
}

export interface PropertyDefinition {
  id: string;
  modality: "tabular" | "text" | "timeseries";
  metric_defs: MetricDef[];
  parameter_defs: ParameterDef[];
  result_schema: string[];
  display_name?: string;
  description?: string;
}

export interface Subject {
  id: string;
  project_id: string;
  model_id: string;
  data_properties: { modality?: string; columns?: string[] };
}

export interface StatusRow {
  run_id: string;
  property_id: string;
  state: string;
  generated: number;
  executed: number;
  passed: number;
  failed: number;
  errored: number;
}

export interface CollectionStatus {
  collection_id: string;
  state: string;
  runs: StatusRow[];
}

export interface MetricEntry {
  value: number | string | null;
  verdict: string;
  recommendation: string;
}

export interface Grid {
  rows: string[];
  cols: string[];
  values: number[][];
}

export interface MetricReport {
  run_id: string;
  property_id: string;
  display_name?: string;
  state: string;
  status: Record<string, number>;
  metrics: Record<string, MetricEntry>;
  result_schema: string[];
  explanation: string;
  grid: Grid;
}

export type Sample = Record<string, unknown> | string;

export interface FailureItem {
  case: {
    id: string;
    run_id: string;
    samples: Sample[];
    role_tags: string[];
    reference: Record<string, unknown>;
  };
  result: {
    test_case_id: string;
    predictions: Array<{ label: string | null; confidence: number | null; error: string | null }>;
    verdict: string;
    detail: string;
  };
}

export interface FailurePage {
  run_id: string;
  property_id?: string;
  offset: number;
  limit: number;
  total_failures: number;
  items: FailureItem[];
}

export interface ComparisonRow {
  property_id: string;
  metric: string;
  direction: "higher" | "lower" | "none";
  values: Array<number | string | null>;
  verdicts: string[];
  best: number | null;
}

export interface ComparisonReport {
  collections: string[];
  rows: ComparisonRow[];
}

export interface RunConfigurationBody {
  selected_properties: string[];
  parameter_values: Record<string, Record<string, unknown>>;
  data_specific: Record<string, unknown>;
  generation_limit: number;
  seed: number;
}
