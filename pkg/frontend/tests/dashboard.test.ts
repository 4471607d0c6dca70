import { describe, expect, it } from "vitest";

import { buildDashboard, headlineReliability } from "../src/dashboard";
import type { RunDoc } from "../src/types";

function runDoc(): RunDoc {
  return {
    format_version: 1,
    instance: "demo",
    seed: 7,
    mode: "rep",
    plan: "empty",
    base_year: 2030,
    stage_start_offset: 2,
    stage_years: 2,
    years: [
      {
        year_offset: 2,
        calendar_year: 2032,
        demand_m3: { M00: 1_500_000, M01: 500_000 },
        delivered_m3: { M00: 1_400_000, M01: 500_000 },
        undelivered_m3: { M00: 100_000, M01: 0 },
        reliability: 0.95,
        affordability_pct: 0.91,
        nonconverged_hours: 0,
      },
      {
        year_offset: 3,
        calendar_year: 2033,
        demand_m3: { M00: 1_600_000 },
        delivered_m3: { M00: 1_200_000 },
        undelivered_m3: { M00: 400_000 },
        reliability: 0.75,
        affordability_pct: 0.92,
        nonconverged_hours: 3,
      },
    ],
    kpis: [
      {
        slice: "utility:WU_north",
        tac_eur: 1000.5,
        ghg_t: 10.25,
        reliability: 0.9,
        affordability_pct: 0.95,
      },
      {
        slice: "national",
        tac_eur: 2000.123,
        ghg_t: 20.5554,
        reliability: 0.8828803021009978,
        affordability_pct: 0.9712,
      },
    ],
    revealed_history: {},
  };
}

describe("stage dashboard", () => {
  it("puts the national card first and formats every KPI", () => {
    const dashboard = buildDashboard(runDoc());
    expect(dashboard.kpiCards.map((card) => card.slice)).toEqual([
      "national",
      "utility:WU_north",
    ]);
    expect(dashboard.kpiCards[0]).toEqual({
      slice: "national",
      tac_eur: "2000.12",
      ghg_t: "20.555",
      reliability: "0.882880",
      affordability_pct: "0.9712",
    });
  });

  it("headline reliability is the fixed-precision national value", () => {
    const doc = runDoc();
    const dashboard = buildDashboard(doc);
    const raw = doc.kpis.find((kpi) => kpi.slice === "national")!.reliability!;
    expect(headlineReliability(dashboard)).toBe(raw.toFixed(6));
  });

  it("summarizes years and the stage span", () => {
    const dashboard = buildDashboard(runDoc());
    expect(dashboard.stageSpan).toBe("2032–2033");
    expect(dashboard.yearRows).toEqual([
      {
        calendarYear: 2032,
        demand: "2.00 Mm3",
        delivered: "1.90 Mm3",
        reliability: "0.950000",
        nonconvergedHours: 0,
      },
      {
        calendarYear: 2033,
        demand: "1.60 Mm3",
        delivered: "1.20 Mm3",
        reliability: "0.750000",
        nonconvergedHours: 3,
      },
    ]);
  });

  it("warns about non-converged hydraulic hours instead of hiding them", () => {
    const dashboard = buildDashboard(runDoc());
    expect(dashboard.warnings).toHaveLength(1);
    expect(dashboard.warnings[0]).toContain("3 hydraulic hour(s)");
    const clean = runDoc();
    clean.years.forEach((year) => (year.nonconverged_hours = 0));
    expect(buildDashboard(clean).warnings).toEqual([]);
  });
});
