import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import {
  addIntervention,
  emptyPlan,
  localProblems,
  removeIntervention,
  validateInline,
} from "../src/plan";
import { scriptedFetch } from "./helpers";

const UTILITIES = ["WU_north", "WU_south"];

describe("plan editing", () => {
  it("builds a well-formed empty plan", () => {
    const plan = emptyPlan("draft", UTILITIES);
    expect(plan.format_version).toBe(1);
    expect(plan.horizon_years).toBe(30);
    expect(plan.interventions).toEqual([]);
    expect(localProblems(plan)).toEqual([]);
  });

  it("keeps interventions sorted by year then quarter", () => {
    let plan = emptyPlan("draft", UTILITIES);
    plan = addIntervention(plan, { kind: "budget_rule", year: 5, rule: "equity" });
    plan = addIntervention(plan, {
      kind: "close_source",
      year: 2,
      quarter: 3,
      source: "S00",
    });
    plan = addIntervention(plan, {
      kind: "close_source",
      year: 2,
      quarter: 1,
      source: "S01",
    });
    expect(plan.interventions.map((iv) => [iv.year, iv.quarter ?? 0])).toEqual([
      [2, 1],
      [2, 3],
      [5, 0],
    ]);
    const trimmed = removeIntervention(plan, 0);
    expect(trimmed.interventions).toHaveLength(2);
    expect(plan.interventions).toHaveLength(3); // editing is non-destructive
  });
});

describe("local structural checks", () => {
  it("flags a short horizon", () => {
    const plan = { ...emptyPlan("p", UTILITIES), horizon_years: 20 };
    expect(localProblems(plan)).toEqual(["plan horizon 20 is below the 25-year minimum"]);
  });

  it("flags missing parameters and bad years", () => {
    let plan = emptyPlan("p", UTILITIES);
    plan = addIntervention(plan, { kind: "open_source", year: 40 });
    const problems = localProblems(plan);
    expect(problems.some((p) => p.includes("year outside the plan horizon"))).toBe(true);
    expect(
      problems.some((p) =>
        p.includes("missing parameters [site, size_m3_day, pump_option, pump_count, pipe_option]"),
      ),
    ).toBe(true);
  });

  it("flags out-of-range quarters", () => {
    let plan = emptyPlan("p", UTILITIES);
    plan = addIntervention(plan, { kind: "budget_rule", year: 0, quarter: 4, rule: "equity" });
    expect(localProblems(plan)).toEqual([
      "intervention[0] (budget_rule, year 0): quarter must be 0..3",
    ]);
  });
});

describe("inline validation", () => {
  it("short-circuits on local problems without calling the service", async () => {
    const { fetch, calls } = scriptedFetch({});
    const client = new ApiClient("http://service", fetch);
    const plan = { ...emptyPlan("p", UTILITIES), horizon_years: 10 };
    const feedback = await validateInline(client, plan);
    expect(feedback.ok).toBe(false);
    expect(feedback.local).toHaveLength(1);
    expect(calls).toHaveLength(0);
  });

  it("relays the service verdict for structurally sound plans", async () => {
    const { fetch, calls } = scriptedFetch({
      "POST /plan/validate": {
        body: { ok: false, violations: ["unknown site 'SITE_X'"] },
      },
    });
    const client = new ApiClient("http://service", fetch);
    const feedback = await validateInline(client, emptyPlan("p", UTILITIES));
    expect(feedback).toEqual({ ok: false, local: [], remote: ["unknown site 'SITE_X'"] });
    expect(calls[0]).toMatchObject({ url: "/plan/validate", method: "POST" });
  });
});
