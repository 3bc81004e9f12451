// Payload shapes mirrored from the /api/v1 JSON contract.

export interface Persona {
  persona_id: string;
  name: string;
  description: string;
  size: number;
  cluster_index: number;
  exemplar_ad_ids: string[];
  auto_labeled: boolean;
}

export interface Challenge {
  challenge_id: string;
  name: string;
  description: string;
  size: number;
  cluster_index: number;
  exemplar_ad_ids: string[];
  auto_labeled: boolean;
}

export interface MatrixPayload {
  personas: Persona[];
  challenges: Challenge[];
  counts: number[][];
  intersection_size: number;
}

export interface GapCell {
  persona_id: string;
  challenge_id: string;
  persona_name: string;
  challenge_name: string;
  count: number;
}

export interface GapsPayload {
  matrix: MatrixPayload;
  gaps: GapCell[];
}

export interface Offering {
  offering_id: string;
  name: string;
  description: string;
  brand: string;
}

export interface Brief {
  brief_id: string;
  persona_ref: string;
  challenge_ref: string;
  offering_ref: string;
  story: string;
  insight: string;
  idea: string;
  created_at: string;
  provenance: Record<string, unknown>;
}

export interface Heatmap {
  creative_id: string;
  width: number;
  height: number;
  weights: number[];
}

export interface Region {
  region_id: string;
  bbox: [number, number, number, number];
  mass: number;
  peak: number;
  cells: [number, number][];
}

export interface ReportRow {
  label: string;
  lpv_ratio: number;
  ctr_lpv_ratio: number;
  ctr_ratio: number;
  f1: number;
}

export interface AblationReport {
  rows: ReportRow[];
  overall: ReportRow;
}

export interface MetricPoint {
  period_key: string;
  impressions: number;
  clicks: number;
  lpv: number;
  results: number;
  reach: number;
  spend: number;
  frequency: number | null;
  cpr: number | null;
  cpm: number | null;
  ctr: number | null;
  cr_click_to_view: number | null;
  cr_click_to_result: number | null;
}

export interface TrendSeries {
  granularity: string;
  points: MetricPoint[];
  pct_changes: Record<string, number | null>[];
}

export interface RecommendedAction {
  kind: string;
  description: string;
  confidence: string;
  evidence_refs: string[];
}

export interface AnalyzePayload {
  series: TrendSeries;
  prompt: {
    sections: Record<string, string>;
    guiding_questions: string[];
    text: string;
  };
  actions: RecommendedAction[];
}

export type Granularity = "weekly" | "daily" | "creative";
