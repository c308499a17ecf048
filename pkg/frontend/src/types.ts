/** Wire types mirroring the evaluation service's JSON payloads. */

export type AnswerKind = "entity" | "date" | "number" | "number_unit" | "text" | "boolean";

export interface AnswerJson {
  kind: AnswerKind;
  value: string | number | boolean;
  unit?: string;
}

export interface SpanJson {
  start: number;
  end: number;
  surface: string;
}

export interface EntityLabelJson {
  span: SpanJson;
  entity_id: string;
}

export interface AnnotationJson {
  query_id: string;
  annotator_id: string;
  knowledge_seeking: boolean;
  properties: string[];
  answer_type: string;
  annotated_at: string;
  entity?: EntityLabelJson;
  relation?: string;
  answer?: AnswerJson;
}

export interface GoldJson {
  query_id: string;
  knowledge_seeking: boolean;
  properties: string[];
  answer_type: string;
  support_count: number;
  total_annotators: number;
  dominant: boolean;
  entity?: EntityLabelJson;
  relation?: string;
  answer?: AnswerJson;
  acceptable_entities?: string[];
}

export interface AgreementJson {
  task_id: string;
  field: string;
  alpha: number | null;
  kappa_pairs: [string, string, number | null][];
  flagged: boolean;
  drop_one_alphas: Record<string, number | null>;
  suspect_annotator: string | null;
}

export interface QualificationResultJson {
  annotator_id: string;
  score: number;
  passed: boolean;
  items: [string, boolean][];
}

export interface TaskQueryJson {
  query_id: string;
  text: string;
}

export interface TaskJson {
  task_id: string;
  kind: string;
  status: "open" | "closed";
  quorum: number;
  alpha_threshold: number;
  qualification_threshold: number;
  queries: TaskQueryJson[];
  assigned_annotators: string[];
  submissions: AnnotationJson[];
  golds: GoldJson[];
  agreement: AgreementJson | null;
  answer_key_size: number;
  results: QualificationResultJson[];
}

export interface TaskRowJson {
  task_id: string;
  kind: string;
  status: string;
  quorum: number;
  query_count: number;
  coverage: Record<string, number>;
}

export interface RunRowJson {
  run_id: string;
  created_at: string;
  system_id: string;
  snapshot_id: string;
  dataset_ids: string[];
  config_digest: string;
}

export interface MetricValueJson {
  numerator: number;
  denominator: number;
  pct: number | null;
}

export interface RatioPairJson {
  coverage: MetricValueJson;
  precision: MetricValueJson;
}

export interface ReportJson {
  dataset_id: string;
  slice_key: string;
  system_id: string;
  e2e: RatioPairJson;
  components: Record<string, Record<string, RatioPairJson>>;
  kg_quality: {
    accuracy: MetricValueJson;
    freshness: MetricValueJson;
    coverage: MetricValueJson;
  };
}

export interface MetricsResponseJson {
  run_id: string;
  system_id: string;
  snapshot_id: string;
  dataset_ids: string[];
  slice: string | null;
  reports: ReportJson[];
}

export interface SankeyEdgeJson {
  from: string;
  to: string;
  weight: number;
}

export interface SankeyJson {
  nodes: string[];
  edges: SankeyEdgeJson[];
}

export interface TrendPointJson {
  run_id: string;
  created_at: string;
  value: number;
}

export interface TrendsResponseJson {
  metric: string;
  slice: string;
  points: TrendPointJson[];
}

export interface TopRelationJson {
  relation: string;
  count: number;
}

export interface KgMatchJson {
  entity_id: string;
  canonical_name: string;
  ontology_type: string;
  aliases: string[];
  matched_alias: string;
  exact: boolean;
}

/** Subset of the browser Storage interface the app relies on. */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}
