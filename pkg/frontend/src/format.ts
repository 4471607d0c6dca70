/** Fixed-precision formatting shared by every KPI display.
 *
 * The widths mirror the service's own reporting conventions so a dashboard
 * cell can be compared to the raw field by formatting alone.
 */

import type { KpiDoc } from "./types";

export const NOT_APPLICABLE = "n/a";

export function formatReliability(value: number | null): string {
  return value === null ? NOT_APPLICABLE : value.toFixed(6);
}

export function formatTac(value: number): string {
  return value.toFixed(2);
}

export function formatGhg(value: number): string {
  return value.toFixed(3);
}

export function formatAffordability(value: number | null): string {
  return value === null ? NOT_APPLICABLE : value.toFixed(4);
}

export interface KpiStrings {
  slice: string;
  tac_eur: string;
  ghg_t: string;
  reliability: string;
  affordability_pct: string;
}

export function formatKpi(kpi: KpiDoc): KpiStrings {
  return {
    slice: kpi.slice,
    tac_eur: formatTac(kpi.tac_eur),
    ghg_t: formatGhg(kpi.ghg_t),
    reliability: formatReliability(kpi.reliability),
    affordability_pct: formatAffordability(kpi.affordability_pct),
  };
}

/** Compact thousands display for volumes, e.g. 1 234 567 -> "1.23 Mm3". */
export function formatVolume(m3: number): string {
  if (Math.abs(m3) >= 1e6) {
    return `${(m3 / 1e6).toFixed(2)} Mm3`;
  }
  if (Math.abs(m3) >= 1e3) {
    return `${(m3 / 1e3).toFixed(1)}k m3`;
  }
  return `${m3.toFixed(0)} m3`;
}
