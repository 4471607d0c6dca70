/** Payload shapes of the local planning service. */

export interface InstanceSummary {
  name: string;
  base_year: number;
  year_offset: number;
  horizon_years: number;
  utilities: string[];
  municipalities: number;
  sources: number;
  available_sites: string[];
}

export interface NetworkNode {
  id: string;
  kind: "municipality" | "source";
  elevation: number;
  latitude: number;
  longitude: number;
  province?: string;
  source_type?: string;
  connected_municipality?: string;
}

export interface NetworkEdge {
  source: string;
  target: string;
  connection_id: string;
  distance: number;
  option_id: string;
  friction: number;
}

export interface NetworkView {
  nodes: NetworkNode[];
  edges: NetworkEdge[];
}

export type InterventionKind =
  | "open_source"
  | "close_source"
  | "install_pipe"
  | "replace_pipe"
  | "set_pumps"
  | "install_pv"
  | "nrw_budget"
  | "budget_rule";

/** One dated plan action; extra keys are the kind's parameters. */
export interface InterventionDoc {
  kind: InterventionKind;
  year: number;
  quarter?: number;
  [param: string]: unknown;
}

export interface PlanDoc {
  format_version: number;
  name: string;
  utilities: string[];
  horizon_years: number;
  interventions: InterventionDoc[];
}

export interface ValidationResult {
  ok: boolean;
  violations: string[];
}

export interface JobRef {
  job_id: string;
}

export type JobState = "running" | "done" | "failed";

export interface JobStatus {
  id: string;
  kind: "commit" | "what_if";
  status: JobState;
  done_years: number;
  total_years: number;
  error: string | null;
}

export interface KpiDoc {
  slice: string;
  tac_eur: number;
  ghg_t: number;
  reliability: number | null;
  affordability_pct: number | null;
  extras?: Record<string, number>;
}

export interface YearDoc {
  year_offset: number;
  calendar_year: number;
  demand_m3: Record<string, number>;
  delivered_m3: Record<string, number>;
  undelivered_m3: Record<string, number>;
  reliability: number | null;
  affordability_pct: number | null;
  nonconverged_hours: number;
  [field: string]: unknown;
}

export interface RunDoc {
  format_version: number;
  instance: string;
  seed: number;
  mode: "full" | "rep";
  plan: string;
  base_year: number;
  stage_start_offset: number;
  stage_years: number;
  years: YearDoc[];
  kpis: KpiDoc[];
  revealed_history: Record<string, Record<string, number[]>>;
}

export interface StageRequest {
  plan: PlanDoc;
  mode?: "full" | "rep";
  stage_years?: number;
  /** What-if only: explore an alternate trace seed (unstarted timeline). */
  seed?: number;
}
