/** Stage dashboard model: pure projections of a run document into the rows
 * and strings the page renders. Kept DOM-free so tests can pin the exact
 * displayed values against the raw service fields. */

import { formatKpi, formatVolume, type KpiStrings } from "./format";
import type { RunDoc, YearDoc } from "./types";

export interface YearRow {
  calendarYear: number;
  demand: string;
  delivered: string;
  reliability: string;
  nonconvergedHours: number;
}

export interface StageDashboard {
  title: string;
  mode: string;
  stageSpan: string;
  /** One formatted card per KPI slice; national first. */
  kpiCards: KpiStrings[];
  yearRows: YearRow[];
  warnings: string[];
}

function sum(values: Record<string, number>): number {
  return Object.values(values).reduce((acc, v) => acc + v, 0);
}

function yearRow(year: YearDoc): YearRow {
  const demand = sum(year.demand_m3);
  const delivered = sum(year.delivered_m3);
  return {
    calendarYear: year.calendar_year,
    demand: formatVolume(demand),
    delivered: formatVolume(delivered),
    reliability: year.reliability === null ? "n/a" : year.reliability.toFixed(6),
    nonconvergedHours: year.nonconverged_hours,
  };
}

export function buildDashboard(run: RunDoc): StageDashboard {
  const ordered = [...run.kpis].sort((a, b) =>
    a.slice === "national" ? -1 : b.slice === "national" ? 1 : a.slice.localeCompare(b.slice),
  );
  const firstYear = run.base_year + run.stage_start_offset;
  const lastYear = firstYear + run.stage_years - 1;
  const warnings: string[] = [];
  const stressed = run.years.filter((year) => year.nonconverged_hours > 0);
  if (stressed.length > 0) {
    const total = stressed.reduce((acc, year) => acc + year.nonconverged_hours, 0);
    warnings.push(
      `${total} hydraulic hour(s) across ${stressed.length} year(s) did not converge; ` +
        "results for those hours are flagged, not silently dropped",
    );
  }
  return {
    title: `${run.instance} — plan "${run.plan}" (seed ${run.seed})`,
    mode: run.mode === "rep" ? "representative weeks" : "full resolution",
    stageSpan: `${firstYear}–${lastYear}`,
    kpiCards: ordered.map(formatKpi),
    yearRows: run.years.map(yearRow),
    warnings,
  };
}

/** The dashboard's headline reliability cell (national slice). */
export function headlineReliability(dashboard: StageDashboard): string {
  const national = dashboard.kpiCards.find((card) => card.slice === "national");
  if (!national) {
    throw new Error("dashboard has no national KPI card");
  }
  return national.reliability;
}
