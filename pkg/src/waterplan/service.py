"""Local planning service.

A thin HTTP layer over one committed `Simulation` timeline. Stage runs
are asynchronous jobs with per-year progress; what-if jobs run on an
isolated clone and never touch the committed state. Commits are
serialized: only one commit job may be in flight at a time.
"""

from __future__ import annotations

import datetime as dt
import itertools
import threading
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .domain import visible_network
from .engine import EngineError, Masterplan, PlanError, Simulation, parse_plan, validate_plan
from .instance import Instance


class PlanRequest(BaseModel):
    plan: dict[str, Any]
    mode: str = "rep"
    stage_years: int = 25
    seed: int | None = None  # what-if only: alternate trace seed


class _Job:
    def __init__(self, job_id: str, kind: str) -> None:
        self.id = job_id
        self.kind = kind  # "commit" | "what_if"
        self.status = "running"
        self.done_years = 0
        self.total_years = 0
        self.error: str | None = None
        self.result: dict[str, Any] | None = None


def create_app(instance: Instance, seed: int = 0) -> FastAPI:
    app = FastAPI(title="waterplan service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    sim = Simulation(instance, seed=seed)
    commit_lock = threading.Lock()
    state_lock = threading.Lock()  # guards reads/clones of the committed sim
    jobs: dict[str, _Job] = {}
    counter = itertools.count(1)

    def _parse(doc: dict[str, Any]) -> Masterplan:
        try:
            return parse_plan(doc)
        except PlanError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    def _start_job(kind: str, target, total_years: int) -> _Job:
        job = _Job(f"job-{next(counter)}", kind)
        job.total_years = total_years
        jobs[job.id] = job

        def progress(done: int, total: int) -> None:
            job.done_years, job.total_years = done, total

        def run() -> None:
            try:
                job.result = target(progress)
                job.status = "done"
            except (EngineError, PlanError) as exc:
                job.status = "failed"
                job.error = str(exc)
            except Exception as exc:  # defensive: report, never hang
                job.status = "failed"
                job.error = f"internal error: {exc}"
            finally:
                if job.kind == "commit":
                    commit_lock.release()

        threading.Thread(target=run, daemon=True).start()
        return job

    @app.get("/instance")
    def instance_summary() -> dict[str, Any]:
        with state_lock:
            on = dt.date(instance.base_year + sim.year_offset, 1, 1)
            return {
                "name": instance.name,
                "base_year": instance.base_year,
                "year_offset": sim.year_offset,
                "horizon_years": sim.horizon_years,
                "utilities": sorted(instance.utilities),
                "municipalities": len(sim.state.open_municipalities(on)),
                "sources": len(sim.state.active_sources(on)),
                "available_sites": sorted(instance.available_sites),
            }

    @app.get("/network")
    def network() -> dict[str, Any]:
        with state_lock:
            on = dt.date(instance.base_year + sim.year_offset, 1, 1)
            graph = visible_network(sim.state, on)
        nodes = [
            {"id": node, **{k: v for k, v in data.items()}}
            for node, data in graph.nodes(data=True)
        ]
        edges = [
            {"source": a, "target": b, **{k: v for k, v in data.items()}}
            for a, b, data in graph.edges(data=True)
        ]
        return {"nodes": nodes, "edges": edges}

    @app.post("/plan/validate")
    def plan_validate(req: PlanRequest) -> dict[str, Any]:
        plan = _parse(req.plan)
        violations = validate_plan(plan, instance)
        return {"ok": not violations, "violations": violations}

    def _commit_endpoint(req: PlanRequest) -> dict[str, Any]:
        plan = _parse(req.plan)
        violations = validate_plan(plan, instance)
        if violations:
            raise HTTPException(status_code=422, detail=violations)
        if not commit_lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409,
                detail="a committed-timeline run is already in flight; retry when it finishes",
            )

        def target(progress) -> dict[str, Any]:
            with state_lock:
                out = sim.run_stage(
                    plan, mode=req.mode, stage_years=req.stage_years, progress=progress
                )
            return out.to_dict()

        job = _start_job("commit", target, req.stage_years)
        return {"job_id": job.id}

    @app.post("/run-stage")
    def run_stage(req: PlanRequest) -> dict[str, Any]:
        return _commit_endpoint(req)

    @app.post("/advance-stage")
    def advance_stage(req: PlanRequest) -> dict[str, Any]:
        return _commit_endpoint(req)

    @app.post("/what-if")
    def what_if(req: PlanRequest) -> dict[str, Any]:
        plan = _parse(req.plan)
        violations = validate_plan(plan, instance)
        if violations:
            raise HTTPException(status_code=422, detail=violations)
        if req.seed is not None:
            # Alternate trace sampling is only meaningful from the start of
            # the timeline; carried state is conditioned on the original one.
            with state_lock:
                at_start = sim.year_offset == 0
            if not at_start:
                raise HTTPException(
                    status_code=422,
                    detail="what-if with an alternate seed requires an unstarted timeline",
                )
            candidate = Simulation(instance, seed=req.seed)
        else:
            with state_lock:
                candidate = sim.clone()

        def target(progress) -> dict[str, Any]:
            out = candidate.run_stage(
                plan, mode=req.mode, stage_years=req.stage_years, progress=progress
            )
            return out.to_dict()

        job = _start_job("what_if", target, req.stage_years)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str) -> dict[str, Any]:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return {
            "id": job.id,
            "kind": job.kind,
            "status": job.status,
            "done_years": job.done_years,
            "total_years": job.total_years,
            "error": job.error,
        }

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str) -> dict[str, Any]:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        if job.status == "failed":
            raise HTTPException(status_code=500, detail=job.error)
        if job.status != "done":
            raise HTTPException(status_code=409, detail="job still running")
        return job.result

    return app
