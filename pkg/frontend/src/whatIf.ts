/** What-if exploration: isolated candidate runs beside the committed line.
 *
 * Every scenario runs on a server-side clone; nothing here can move the
 * committed timeline forward. Scenarios launch in parallel and settle
 * independently.
 */

import type { ApiClient } from "./api";
import { awaitJob } from "./jobs";
import type { JobStatus, PlanDoc, RunDoc } from "./types";

export interface Scenario {
  label: string;
  plan: PlanDoc;
  mode?: "full" | "rep";
  stageYears?: number;
  /** Alternate trace seed; only honored on an unstarted timeline. */
  seed?: number;
}

export interface ScenarioOutcome {
  label: string;
  status: "done" | "failed";
  result?: RunDoc;
  error?: string;
}

export async function runScenario(
  client: ApiClient,
  scenario: Scenario,
  onProgress?: (label: string, status: JobStatus) => void,
): Promise<ScenarioOutcome> {
  try {
    const ref = await client.whatIf({
      plan: scenario.plan,
      mode: scenario.mode ?? "rep",
      stage_years: scenario.stageYears ?? 25,
      ...(scenario.seed !== undefined ? { seed: scenario.seed } : {}),
    });
    const result = await awaitJob(client, ref.job_id, {
      onProgress: (status) => onProgress?.(scenario.label, status),
    });
    return { label: scenario.label, status: "done", result };
  } catch (error) {
    return {
      label: scenario.label,
      status: "failed",
      error: error instanceof Error ? error.message : String(error),
    };
  }
}

/** Launch all scenarios at once; the service isolates each on its own clone. */
export function runScenarios(
  client: ApiClient,
  scenarios: Scenario[],
  onProgress?: (label: string, status: JobStatus) => void,
): Promise<ScenarioOutcome[]> {
  return Promise.all(scenarios.map((scenario) => runScenario(client, scenario, onProgress)));
}

/** Side-by-side national KPI comparison of finished scenarios. */
export function compareOutcomes(outcomes: ScenarioOutcome[]): {
  label: string;
  reliability: number | null;
  tac_eur: number;
  ghg_t: number;
}[] {
  return outcomes
    .filter((outcome): outcome is ScenarioOutcome & { result: RunDoc } => !!outcome.result)
    .map((outcome) => {
      const national = outcome.result.kpis.find((kpi) => kpi.slice === "national");
      if (!national) {
        throw new Error(`scenario ${outcome.label}: run carries no national KPI slice`);
      }
      return {
        label: outcome.label,
        reliability: national.reliability,
        tac_eur: national.tac_eur,
        ghg_t: national.ghg_t,
      };
    });
}
