/**
 * Typed mirrors of the HTTP API payloads.
 *
 * The UI renders these values as-is: no metric is ever recomputed client-side,
 * so the backend stays the single source of truth.
 */

export interface ConfidenceInterval {
  low: number;
  high: number;
  level: number;
  method: string;
  n: number;
}

export interface BucketRow {
  label: string;
  n: number;
  values: Record<string, number>;
  intervals: Record<string, ConfidenceInterval | null>;
  sample_ids: string[];
}

export interface SingleAnalysisReport {
  schema_version: string;
  kind: "single_analysis";
  system_name: string;
  dataset_name: string;
  rank_basis: string;
  record_count: number;
  record_ids_digest: string;
  metrics: string[];
  overall: {
    values: Record<string, number>;
    intervals: Record<string, ConfidenceInterval | null>;
  };
  features: Record<string, BucketRow[]>;
}

export interface ComparisonBucket {
  feature: string;
  label: string;
  n: number;
  values: Record<string, number>;
  ranks: Record<string, number>;
}

export interface ComparisonReport {
  schema_version: string;
  kind: "comparison";
  systems: string[];
  metric: string;
  overall_values: Record<string, number>;
  overall_ranking: Record<string, number>;
  buckets: ComparisonBucket[];
  per_system: Record<string, { b_eq: number; b_neq: number }>;
}

export interface SystemHeaderInfo {
  schema_version: string;
  system_name: string;
  dataset_name: string;
  task: string;
  rank_basis: string;
  custom_features: Record<
    string,
    { dtype: string; description: string; num_buckets: number }
  >;
}

export interface SystemEntry {
  id: string;
  created_at: number;
  record_count: number;
  header: SystemHeaderInfo;
}

export interface ExampleRecordRow {
  id: string;
  head: string;
  relation: string;
  tail: string;
  direction: string;
  gold_rank: number;
  top_k?: [string, number][];
  features?: Record<string, string | number>;
}

export interface ExamplesPage {
  system_id: string;
  feature: string;
  label: string;
  offset: number;
  limit: number;
  records: ExampleRecordRow[];
}
