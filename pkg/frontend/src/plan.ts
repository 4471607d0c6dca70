/** Plan editing model: build, edit and validate masterplan documents.
 *
 * Structural problems (missing parameters, bad years) are caught locally for
 * instant feedback while typing; the service's validator remains the
 * authority and is consulted for the full rule set.
 */

import type { ApiClient } from "./api";
import type {
  InterventionDoc,
  InterventionKind,
  PlanDoc,
  ValidationResult,
} from "./types";

export const PLAN_FORMAT_VERSION = 1;

export const REQUIRED_PARAMS: Record<InterventionKind, string[]> = {
  open_source: ["site", "size_m3_day", "pump_option", "pump_count", "pipe_option"],
  close_source: ["source"],
  install_pipe: ["connection", "option"],
  replace_pipe: ["connection", "option"],
  set_pumps: ["station", "option", "count"],
  install_pv: ["station", "kw"],
  nrw_budget: ["utility", "share_pct", "policy"],
  budget_rule: ["rule"],
};

export function emptyPlan(name: string, utilities: string[], horizonYears = 30): PlanDoc {
  return {
    format_version: PLAN_FORMAT_VERSION,
    name,
    utilities: [...utilities],
    horizon_years: horizonYears,
    interventions: [],
  };
}

export function addIntervention(plan: PlanDoc, intervention: InterventionDoc): PlanDoc {
  const interventions = [...plan.interventions, intervention].sort(
    (a, b) => a.year - b.year || (a.quarter ?? 0) - (b.quarter ?? 0),
  );
  return { ...plan, interventions };
}

export function removeIntervention(plan: PlanDoc, index: number): PlanDoc {
  const interventions = plan.interventions.filter((_, k) => k !== index);
  return { ...plan, interventions };
}

/** Instant structural checks, mirroring the service's parameter contract. */
export function localProblems(plan: PlanDoc): string[] {
  const problems: string[] = [];
  if (plan.horizon_years < 25) {
    problems.push(`plan horizon ${plan.horizon_years} is below the 25-year minimum`);
  }
  plan.interventions.forEach((iv, k) => {
    const where = `intervention[${k}] (${iv.kind}, year ${iv.year})`;
    const required = REQUIRED_PARAMS[iv.kind];
    if (!required) {
      problems.push(`${where}: unknown intervention kind`);
      return;
    }
    if (!Number.isInteger(iv.year) || iv.year < 0 || iv.year >= plan.horizon_years) {
      problems.push(`${where}: year outside the plan horizon`);
    }
    const quarter = iv.quarter ?? 0;
    if (!Number.isInteger(quarter) || quarter < 0 || quarter > 3) {
      problems.push(`${where}: quarter must be 0..3`);
    }
    const missing = required.filter((param) => !(param in iv));
    if (missing.length > 0) {
      problems.push(`${where}: missing parameters [${missing.join(", ")}]`);
    }
  });
  return problems;
}

export interface PlanFeedback {
  ok: boolean;
  /** Local structural problems, available synchronously. */
  local: string[];
  /** Authoritative violations from the service validator. */
  remote: string[];
}

/** Inline validation: local checks first, then the service's full rule set. */
export async function validateInline(client: ApiClient, plan: PlanDoc): Promise<PlanFeedback> {
  const local = localProblems(plan);
  if (local.length > 0) {
    // A structurally broken plan would be rejected remotely anyway; skip the
    // round trip and surface the local findings immediately.
    return { ok: false, local, remote: [] };
  }
  const result: ValidationResult = await client.validatePlan({ plan });
  return { ok: result.ok, local: [], remote: result.violations };
}
