/** End-to-end tests against the real local service.
 *
 * Spawns the Python service on a private port with a small generated
 * instance, then drives it exactly as the UI modules do.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { buildDashboard, headlineReliability } from "../src/dashboard";
import { awaitJob } from "../src/jobs";
import { emptyPlan, validateInline } from "../src/plan";
import { runScenarios } from "../src/whatIf";

const PORT = 18000 + (process.pid % 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workdir: string;
const client = new ApiClient(BASE);

async function up(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await client.instance();
      return;
    } catch {
      if (Date.now() > deadline) {
        throw new Error("service did not come up");
      }
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "waterplan-ui-"));
  const instancePath = join(workdir, "instance.json");
  const generated = spawnSync(
    "python3",
    ["-m", "waterplan.cli", "gen-instance", "--munis", "3", "--sources", "1",
     "--seed", "5", "--out", instancePath],
    { encoding: "utf-8" },
  );
  if (generated.status !== 0) {
    throw new Error(`gen-instance failed: ${generated.stderr}`);
  }
  server = spawn(
    "python3",
    ["-m", "waterplan.cli", "serve", "--port", String(PORT),
     "--instance", instancePath, "--seed", "11"],
    { stdio: "ignore" },
  );
  await up();
}, 90_000);

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

function plan() {
  return emptyPlan("ui-e2e", ["WU_north", "WU_south"]);
}

describe("planner against the live service", () => {
  it("validates plans inline through the service", async () => {
    const good = await validateInline(client, plan());
    expect(good).toEqual({ ok: true, local: [], remote: [] });
    const bad = await validateInline(client, {
      ...plan(),
      interventions: [{ kind: "close_source", year: 0, source: "S_MISSING" }],
    });
    expect(bad.ok).toBe(false);
    expect(bad.remote.some((v) => v.includes("unknown source 'S_MISSING'"))).toBe(true);
  }, 30_000);

  it("dashboard reliability matches the raw KPI field exactly", async () => {
    const ref = await client.runStage({ plan: plan(), mode: "rep", stage_years: 2 });
    const result = await awaitJob(client, ref.job_id, { timeoutMs: 120_000 });
    const dashboard = buildDashboard(result);

    const raw = result.kpis.find((kpi) => kpi.slice === "national")!;
    const expected = raw.reliability === null ? "n/a" : raw.reliability.toFixed(6);
    expect(headlineReliability(dashboard)).toBe(expected);
    expect(expected).not.toBe("n/a");

    const summary = await client.instance();
    expect(summary.year_offset).toBe(2);
  }, 180_000);

  it("five parallel what-ifs leave the committed report byte-identical", async () => {
    // The committed job from the previous test is job-1 on this service.
    const committedBefore = await client.jobResultText("job-1");
    const before = await client.instance();

    const outcomes = await runScenarios(
      client,
      [1, 2, 3, 4, 5].map((k) => ({
        label: `scenario ${k}`,
        plan: plan(),
        mode: "rep" as const,
        stageYears: 1,
      })),
    );
    expect(outcomes.map((o) => o.status)).toEqual(["done", "done", "done", "done", "done"]);
    // Each clone continued from the committed offset, in isolation.
    for (const outcome of outcomes) {
      expect(outcome.result!.stage_start_offset).toBe(before.year_offset);
    }

    const committedAfter = await client.jobResultText("job-1");
    expect(committedAfter).toBe(committedBefore);
    const after = await client.instance();
    expect(after.year_offset).toBe(before.year_offset);
  }, 240_000);

  it("refuses alternate-seed what-ifs once the timeline has started", async () => {
    const outcomes = await runScenarios(client, [
      { label: "reseed", plan: plan(), stageYears: 1, seed: 99 },
    ]);
    expect(outcomes[0].status).toBe("failed");
    expect(outcomes[0].error).toContain("unstarted timeline");
  }, 30_000);
});
