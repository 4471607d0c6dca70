/** Browser entry point: wires the planner panels to the DOM.
 *
 * Layout (see index.html): instance header, plan editor with inline
 * validation, committed-stage runner with a progress bar, what-if panel,
 * and the stage dashboard.
 */

import { ApiClient, isConflict } from "./api";
import { buildDashboard, type StageDashboard } from "./dashboard";
import { awaitJob, progressPercent } from "./jobs";
import { emptyPlan, validateInline } from "./plan";
import type { PlanDoc, RunDoc } from "./types";
import { compareOutcomes, runScenarios, type Scenario } from "./whatIf";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function renderList(target: HTMLElement, items: string[], cssClass: string): void {
  target.innerHTML = "";
  for (const item of items) {
    const li = document.createElement("li");
    li.className = cssClass;
    li.textContent = item;
    target.appendChild(li);
  }
}

function renderDashboard(target: HTMLElement, dashboard: StageDashboard): void {
  target.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = `${dashboard.title} — ${dashboard.stageSpan} (${dashboard.mode})`;
  target.appendChild(heading);

  const cards = document.createElement("div");
  cards.className = "kpi-cards";
  for (const card of dashboard.kpiCards) {
    const div = document.createElement("div");
    div.className = "kpi-card";
    div.innerHTML =
      `<h3>${card.slice}</h3>` +
      `<dl><dt>reliability</dt><dd data-kpi="reliability">${card.reliability}</dd>` +
      `<dt>TAC (EUR/yr)</dt><dd data-kpi="tac">${card.tac_eur}</dd>` +
      `<dt>GHG (t)</dt><dd data-kpi="ghg">${card.ghg_t}</dd>` +
      `<dt>affordability (%)</dt><dd data-kpi="affordability">${card.affordability_pct}</dd></dl>`;
    cards.appendChild(div);
  }
  target.appendChild(cards);

  const table = document.createElement("table");
  table.innerHTML =
    "<thead><tr><th>year</th><th>demand</th><th>delivered</th>" +
    "<th>reliability</th><th>stressed hours</th></tr></thead>";
  const body = document.createElement("tbody");
  for (const row of dashboard.yearRows) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${row.calendarYear}</td><td>${row.demand}</td><td>${row.delivered}</td>` +
      `<td>${row.reliability}</td><td>${row.nonconvergedHours}</td>`;
    body.appendChild(tr);
  }
  table.appendChild(body);
  target.appendChild(table);

  const warnings = document.createElement("ul");
  renderList(warnings, dashboard.warnings, "warning");
  target.appendChild(warnings);
}

export async function boot(baseUrl: string = ""): Promise<void> {
  const client = new ApiClient(baseUrl || window.location.origin);

  const summary = await client.instance();
  el("instance-name").textContent = summary.name;
  el("instance-facts").textContent =
    `${summary.municipalities} municipalities, ${summary.sources} sources, ` +
    `year ${summary.base_year + summary.year_offset} ` +
    `(offset ${summary.year_offset}/${summary.horizon_years})`;

  const editor = el<HTMLTextAreaElement>("plan-editor");
  editor.value = JSON.stringify(emptyPlan("draft", summary.utilities), null, 2);
  const feedback = el<HTMLUListElement>("plan-feedback");

  let lastValidPlan: PlanDoc | null = null;

  async function revalidate(): Promise<void> {
    let plan: PlanDoc;
    try {
      plan = JSON.parse(editor.value) as PlanDoc;
    } catch (error) {
      renderList(feedback, [`not valid JSON: ${(error as Error).message}`], "violation");
      lastValidPlan = null;
      return;
    }
    const result = await validateInline(client, plan);
    if (result.ok) {
      renderList(feedback, ["plan is valid"], "ok");
      lastValidPlan = plan;
    } else {
      renderList(feedback, [...result.local, ...result.remote], "violation");
      lastValidPlan = null;
    }
  }
  editor.addEventListener("input", () => void revalidate());
  await revalidate();

  const progress = el<HTMLProgressElement>("stage-progress");
  const statusLine = el("stage-status");

  async function commitStage(): Promise<void> {
    if (!lastValidPlan) {
      statusLine.textContent = "fix the plan before committing a stage";
      return;
    }
    const mode = el<HTMLSelectElement>("stage-mode").value as "full" | "rep";
    const years = Number(el<HTMLInputElement>("stage-years").value);
    statusLine.textContent = "starting…";
    let result: RunDoc;
    try {
      const ref = await client.runStage({
        plan: lastValidPlan,
        mode,
        stage_years: years,
      });
      result = await awaitJob(client, ref.job_id, {
        onProgress: (status) => {
          progress.value = progressPercent(status);
          statusLine.textContent = `${status.done_years}/${status.total_years} years`;
        },
      });
    } catch (error) {
      statusLine.textContent = isConflict(error)
        ? "another committed run is in flight; retry when it finishes"
        : `run failed: ${(error as Error).message}`;
      return;
    }
    statusLine.textContent = "stage committed";
    renderDashboard(el("dashboard"), buildDashboard(result));
    const refreshed = await client.instance();
    el("instance-facts").textContent =
      `${refreshed.municipalities} municipalities, ${refreshed.sources} sources, ` +
      `year ${refreshed.base_year + refreshed.year_offset} ` +
      `(offset ${refreshed.year_offset}/${refreshed.horizon_years})`;
  }
  el("run-stage").addEventListener("click", () => void commitStage());

  async function exploreWhatIfs(): Promise<void> {
    if (!lastValidPlan) {
      el("whatif-status").textContent = "fix the plan first";
      return;
    }
    const years = Number(el<HTMLInputElement>("stage-years").value);
    const seeds = el<HTMLInputElement>("whatif-seeds")
      .value.split(",")
      .map((part) => part.trim())
      .filter((part) => part.length > 0)
      .map(Number);
    const scenarios: Scenario[] = seeds.length
      ? seeds.map((seed) => ({
          label: `seed ${seed}`,
          plan: lastValidPlan as PlanDoc,
          stageYears: years,
          seed,
        }))
      : [{ label: "current seed", plan: lastValidPlan, stageYears: years }];
    el("whatif-status").textContent = `running ${scenarios.length} scenario(s)…`;
    const outcomes = await runScenarios(client, scenarios);
    const rows = compareOutcomes(outcomes);
    const failed = outcomes.filter((outcome) => outcome.status === "failed");
    const table = el<HTMLTableElement>("whatif-table");
    table.innerHTML =
      "<thead><tr><th>scenario</th><th>reliability</th><th>TAC</th><th>GHG</th></tr></thead>";
    const body = document.createElement("tbody");
    for (const row of rows) {
      const tr = document.createElement("tr");
      tr.innerHTML =
        `<td>${row.label}</td>` +
        `<td>${row.reliability === null ? "n/a" : row.reliability.toFixed(6)}</td>` +
        `<td>${row.tac_eur.toFixed(2)}</td><td>${row.ghg_t.toFixed(3)}</td>`;
      body.appendChild(tr);
    }
    table.appendChild(body);
    el("whatif-status").textContent = failed.length
      ? `${failed.length} scenario(s) failed: ${failed.map((f) => f.error).join("; ")}`
      : "what-if runs finished (committed timeline untouched)";
  }
  el("run-whatifs").addEventListener("click", () => void exploreWhatIfs());
}

if (typeof document !== "undefined" && document.getElementById("plan-editor")) {
  void boot();
}
