"""Run artifacts: delimited tables and rendered figures.

`write_run` lays out a run directory with a canonical JSON dump, three
CSV tables (yearly national series, municipality-years, source-days) and
matplotlib figures rendered to PNG files alongside them. All numeric
formatting is fixed so two identical runs produce byte-identical
directories.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .engine import RunOutput  # noqa: E402

_FLOAT_FMT = "{:.6f}"
_PNG_METADATA = {"Software": "waterplan"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return _FLOAT_FMT.format(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_json(out: RunOutput) -> str:
    """Canonical serialization of a run (sorted keys, stable floats)."""
    return json.dumps(out.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_run(out: RunOutput, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    figdir = os.path.join(outdir, "figures")
    os.makedirs(figdir, exist_ok=True)

    with open(os.path.join(outdir, "run.json"), "w", encoding="utf-8") as fh:
        fh.write(run_json(out))

    years = out.years
    _write_csv(
        os.path.join(outdir, "timeseries.csv"),
        [
            "year", "calendar_year", "demand_m3", "delivered_m3", "undelivered_m3",
            "reliability", "affordability_pct", "tac_eur", "ghg_t",
            "energy_purchased_kwh", "revenue_eur", "capex_eur", "opex_eur",
            "fines_eur", "bond_issued_eur",
        ],
        [
            [
                y.year_offset,
                y.calendar_year,
                sum(y.demand_m3.values()),
                sum(y.delivered_m3.values()),
                sum(y.undelivered_m3.values()),
                y.reliability,
                y.affordability_pct,
                sum(y.tac_eur.values()),
                sum(y.ghg_t.values()),
                sum(y.energy_purchased_kwh.values()),
                sum(y.revenue_eur.values()),
                sum(y.capex_eur.values()),
                sum(y.opex_eur.values()),
                sum(y.fines_eur.values()),
                sum(y.bond_issued_eur.values()),
            ]
            for y in years
        ],
    )

    muni_rows = []
    for y in years:
        for mid in sorted(y.demand_m3):
            muni_rows.append(
                [
                    y.year_offset,
                    mid,
                    y.population.get(mid),
                    y.demand_m3[mid],
                    y.delivered_m3.get(mid),
                    y.undelivered_m3.get(mid),
                    y.billable_delivered_m3.get(mid),
                    y.nrw_m3_day.get(mid),
                    y.net_age_years.get(mid),
                ]
            )
    _write_csv(
        os.path.join(outdir, "muni_year.csv"),
        [
            "year", "municipality", "population", "demand_m3", "delivered_m3",
            "undelivered_m3", "billable_delivered_m3", "nrw_m3_day", "net_age_years",
        ],
        muni_rows,
    )

    source_rows = []
    for y in years:
        for sid in sorted(y.source_daily_outflow):
            daily = y.source_daily_outflow[sid]
            avail = y.source_availability.get(sid, [1] * len(daily))
            for day, volume in enumerate(daily):
                source_rows.append([y.year_offset, sid, day, volume, avail[day]])
    _write_csv(
        os.path.join(outdir, "source_daily.csv"),
        ["year", "source", "day", "outflow_m3", "available"],
        source_rows,
    )

    _render_figures(out, figdir)


def _render_figures(out: RunOutput, figdir: str) -> None:
    years = [y.year_offset for y in out.years]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(years, [y.reliability for y in out.years], marker="o", color="tab:blue")
    ax.set_xlabel("year offset")
    ax.set_ylabel("service reliability")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(figdir, "reliability.png"), metadata=_PNG_METADATA)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(years, [sum(y.demand_m3.values()) / 1e6 for y in out.years],
            label="demand", color="tab:gray")
    ax.plot(years, [sum(y.delivered_m3.values()) / 1e6 for y in out.years],
            label="delivered", color="tab:blue")
    ax.set_xlabel("year offset")
    ax.set_ylabel("volume (Mm3/year)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(figdir, "volumes.png"), metadata=_PNG_METADATA)
    plt.close(fig)

    utilities = sorted({u for y in out.years for u in y.tac_eur})
    fig, ax = plt.subplots(figsize=(7, 4))
    bottom = [0.0] * len(years)
    for uid in utilities:
        vals = [y.tac_eur.get(uid, 0.0) / 1e6 for y in out.years]
        ax.bar(years, vals, bottom=bottom, label=uid)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_xlabel("year offset")
    ax.set_ylabel("TAC (M EUR/year)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(figdir, "tac.png"), metadata=_PNG_METADATA)
    plt.close(fig)

    sources = sorted({s for y in out.years for s in y.source_outflow_m3})
    fig, ax = plt.subplots(figsize=(7, 4))
    for sid in sources:
        ax.plot(years, [y.source_outflow_m3.get(sid, 0.0) / 1e6 for y in out.years],
                marker=".", label=sid)
    ax.set_xlabel("year offset")
    ax.set_ylabel("source outflow (Mm3/year)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(figdir, "sources.png"), metadata=_PNG_METADATA)
    plt.close(fig)
