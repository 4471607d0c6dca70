"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 runtime error, 64 usage
errors (unknown flags). All outputs are deterministic given the flags.
"""

from __future__ import annotations

import json
import sys

import click

from .engine import EngineError, Masterplan, PlanError, Simulation, load_plan, validate_plan
from .instance import InstanceError, demo_instance, generate_instance, load_instance

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64


@click.group()
def cli() -> None:
    """Staged masterplanning simulator for regional water networks."""


@cli.command()
@click.argument("instance_path", type=click.Path(exists=True))
@click.argument("plan_path", type=click.Path(exists=True))
def validate(instance_path: str, plan_path: str) -> None:
    """Validate a plan against an instance; list every violation."""
    instance = load_instance(instance_path)
    plan = load_plan(plan_path)
    violations = validate_plan(plan, instance)
    if violations:
        for v in violations:
            click.echo(f"violation: {v}")
        sys.exit(EXIT_VALIDATION)
    click.echo("ok")


@cli.command()
@click.argument("instance_path", type=click.Path(exists=True))
@click.argument("plan_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["full", "rep"]), default="full", show_default=True)
@click.option("--years", type=int, default=25, show_default=True, help="Stage length.")
@click.option("--out", "outdir", type=click.Path(), required=True)
def simulate(instance_path: str, plan_path: str, seed: int, mode: str,
             years: int, outdir: str) -> None:
    """Run one stage and write tables and figures to the output directory."""
    from .report import write_run

    instance = load_instance(instance_path)
    plan = load_plan(plan_path)
    violations = validate_plan(plan, instance)
    if violations:
        for v in violations:
            click.echo(f"violation: {v}")
        sys.exit(EXIT_VALIDATION)
    sim = Simulation(instance, seed=seed)
    out = sim.run_stage(plan, mode=mode, stage_years=years)
    write_run(out, outdir)
    national = out.national_kpis()
    click.echo(f"wrote {outdir}")
    click.echo(
        f"reliability={national.reliability:.6f} tac_eur={national.tac_eur:.2f} "
        f"ghg_t={national.ghg_t:.3f} affordability_pct={national.affordability_pct:.4f}"
    )


@cli.command()
@click.argument("instance_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def trace(instance_path: str, seed: int, out_path: str) -> None:
    """Export the full scenario trace for a seed (replay format)."""
    from .scenario import trace_to_doc

    instance = load_instance(instance_path)
    sim = Simulation(instance, seed=seed)
    doc = trace_to_doc(sim.trace)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    click.echo(f"wrote {out_path}")


@cli.command()
@click.argument("rundir", type=click.Path(exists=True))
@click.option("--slice", "slice_id", default="national", show_default=True,
              help="KPI slice: national or utility:<id>.")
def kpi(rundir: str, slice_id: str) -> None:
    """Print the four metrics of a finished run for one slice."""
    import os

    with open(os.path.join(rundir, "run.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    for report in doc["kpis"]:
        if report["slice"] == slice_id:
            rel = report["reliability"]
            aff = report["affordability_pct"]
            click.echo(f"slice: {report['slice']}")
            click.echo(f"tac_eur: {report['tac_eur']:.2f}")
            click.echo(f"ghg_t: {report['ghg_t']:.3f}")
            click.echo(f"reliability: {'n/a' if rel is None else f'{rel:.6f}'}")
            click.echo(f"affordability_pct: {'n/a' if aff is None else f'{aff:.4f}'}")
            return
    click.echo(f"no such slice {slice_id!r} in {rundir}", err=True)
    sys.exit(EXIT_VALIDATION)


@cli.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
def serve(port: int, instance_path: str, seed: int) -> None:
    """Run the local planning service."""
    import uvicorn

    from .service import create_app

    app = create_app(load_instance(instance_path), seed=seed)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


@cli.command("gen-instance")
@click.option("--munis", type=int, default=12, show_default=True)
@click.option("--sources", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write here instead of stdout.")
@click.option("--demo", is_flag=True, help="Emit the bundled demo instance instead.")
def gen_instance(munis: int, sources: int, seed: int, out_path: str | None,
                 demo: bool) -> None:
    """Generate a synthetic instance document."""
    from .instance import dump_instance

    doc = demo_instance() if demo else generate_instance(
        n_munis=munis, n_sources=sources, seed=seed
    )
    text = dump_instance(doc)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


def main(argv: list[str] | None = None) -> None:
    args = sys.argv[1:] if argv is None else argv
    try:
        cli.main(args=args, standalone_mode=False)
    except SystemExit:
        raise
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION)
    except click.exceptions.Abort:
        sys.exit(EXIT_RUNTIME)
    except (InstanceError, PlanError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except EngineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    except Exception as exc:  # anything else is a runtime failure
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
