"""The staged simulation loop.

A `Simulation` owns one committed timeline: world state, scenario trace,
ledgers and asset registries. `run_stage` validates a masterplan, then
advances the world year by year — lifecycle events and interventions on
January 1 (quarterly interventions at quarter starts), budget allocation,
asset aging, hourly pressure-driven solves with daily source caps — and
books every euro into per-utility ledgers, issuing bonds on shortfall.
Everything random comes from the trace, so identical inputs replay
exactly.
"""

from __future__ import annotations

import copy
import datetime as dt
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import demand as demand_mod
from . import nrw as nrw_mod
from .assets import (
    PumpFleetState,
    check_groundwater_permit,
    pv_active,
    schedule_construction,
    source_size_class,
)
from .domain import (
    Connection,
    GROUNDWATER_PERMIT_HEADROOM,
    PipeInstance,
    PumpingStation,
    PvInstallation,
    WaterSource,
    apply_absorb,
    apply_cluster,
)
from .economy import ALLOCATION_RULES, EconomicLedger, allocate_budget, tariff_revenue
from .hydraulics import (
    CompiledNetwork,
    FixedHead,
    HydraulicNetwork,
    Junction,
    PipeLink,
    PumpGroupLink,
    SolverOptions,
)
from .instance import Instance
from .kpi import (
    AssetCharge,
    BondCharge,
    EmbeddedEmission,
    KpiReport,
    affordability,
    percentile_income_p20,
    reliability,
    tac_year,
)
from .scenario import ScenarioTrace, generate_trace, reveal_history

DAYS_PER_YEAR = 365
MONTH_LENGTHS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
QUARTER_START_DAYS = (0, 91, 182, 273)
REP_WEEK_DAYS = 7

PV_SOLAR_NOON_DAY = 172  # seasonal peak of the generation model
PV_SYSTEM_EFFICIENCY = 0.9

INTERVENTION_KINDS = (
    "open_source",
    "close_source",
    "install_pipe",
    "replace_pipe",
    "set_pumps",
    "install_pv",
    "nrw_budget",
    "budget_rule",
)

PLAN_FORMAT_VERSION = 1


class EngineError(RuntimeError):
    """A run could not proceed (invalid plan, horizon, or solver failure)."""


class PlanError(ValueError):
    """Malformed plan document."""


# --------------------------------------------------------------------------
# Masterplans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Intervention:
    """One dated plan action; ``year`` counts from the start of the stage."""

    kind: str
    year: int
    quarter: int = 0
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Masterplan:
    name: str
    utilities: tuple[str, ...]
    horizon_years: int
    interventions: tuple[Intervention, ...]


def parse_plan(doc: dict[str, Any]) -> Masterplan:
    """Build a plan from its document form, rejecting unknown fields."""
    allowed = {"format_version", "name", "utilities", "horizon_years", "interventions"}
    for key in doc:
        if key not in allowed:
            raise PlanError(f"$.{key}: unknown field")
    for key in ("utilities", "horizon_years", "interventions"):
        if key not in doc:
            raise PlanError(f"$.{key}: missing field")
    if doc.get("format_version", PLAN_FORMAT_VERSION) != PLAN_FORMAT_VERSION:
        raise PlanError(f"$.format_version: unsupported version {doc['format_version']}")
    interventions = []
    for k, item in enumerate(doc["interventions"]):
        loc = f"$.interventions[{k}]"
        if "kind" not in item or "year" not in item:
            raise PlanError(f"{loc}: needs 'kind' and 'year'")
        params = {
            key: value
            for key, value in item.items()
            if key not in ("kind", "year", "quarter")
        }
        interventions.append(
            Intervention(
                kind=item["kind"],
                year=int(item["year"]),
                quarter=int(item.get("quarter", 0)),
                params=params,
            )
        )
    return Masterplan(
        name=doc.get("name", "unnamed"),
        utilities=tuple(doc["utilities"]),
        horizon_years=int(doc["horizon_years"]),
        interventions=tuple(interventions),
    )


def plan_to_doc(plan: Masterplan) -> dict[str, Any]:
    return {
        "format_version": PLAN_FORMAT_VERSION,
        "name": plan.name,
        "utilities": list(plan.utilities),
        "horizon_years": plan.horizon_years,
        "interventions": [
            {"kind": iv.kind, "year": iv.year, "quarter": iv.quarter, **iv.params}
            for iv in plan.interventions
        ],
    }


def load_plan(path: str) -> Masterplan:
    import json

    with open(path, encoding="utf-8") as fh:
        return parse_plan(json.load(fh))


_REQUIRED_PARAMS = {
    "open_source": {"site", "size_m3_day", "pump_option", "pump_count", "pipe_option"},
    "close_source": {"source"},
    "install_pipe": {"connection", "option"},
    "replace_pipe": {"connection", "option"},
    "set_pumps": {"station", "option", "count"},
    "install_pv": {"station", "kw"},
    "nrw_budget": {"utility", "share_pct", "policy"},
    "budget_rule": {"rule"},
}


def validate_plan(plan: Masterplan, instance: Instance) -> list[str]:
    """Static validation. Returns every violation, never just the first."""
    violations: list[str] = []
    if plan.horizon_years < 25:
        violations.append(f"plan horizon {plan.horizon_years} is below the 25-year minimum")
    for uid in plan.utilities:
        if uid not in instance.utilities:
            violations.append(f"unknown utility {uid!r}")

    opened_sites: set[str] = set()
    closed_sources: set[str] = set()
    piped_connections = {
        cid for cid, c in instance.connections.items() if c.installed_pipe is not None
    }
    known_stations = set(instance.stations)

    for k, iv in enumerate(plan.interventions):
        where = f"intervention[{k}] ({iv.kind}, year {iv.year})"
        if iv.kind not in INTERVENTION_KINDS:
            violations.append(f"{where}: unknown intervention kind")
            continue
        if not 0 <= iv.year < plan.horizon_years:
            violations.append(f"{where}: year outside the plan horizon")
        if not 0 <= iv.quarter <= 3:
            violations.append(f"{where}: quarter must be 0..3")
        missing = _REQUIRED_PARAMS[iv.kind] - set(iv.params)
        unknown = set(iv.params) - _REQUIRED_PARAMS[iv.kind]
        if missing:
            violations.append(f"{where}: missing parameters {sorted(missing)}")
            continue
        if unknown:
            violations.append(f"{where}: unknown parameters {sorted(unknown)}")

        if iv.kind == "open_source":
            site_id = iv.params["site"]
            site = instance.available_sites.get(site_id)
            if site is None:
                violations.append(f"{where}: unknown site {site_id!r}")
                continue
            if site_id in opened_sites:
                violations.append(f"{where}: site {site_id!r} already opened by this plan")
            opened_sites.add(site_id)
            size = float(iv.params["size_m3_day"])
            if size <= 0:
                violations.append(f"{where}: size must be > 0")
            if site["source_type"] == "groundwater":
                permit = site["permit_m3_year"]
                if size > GROUNDWATER_PERMIT_HEADROOM * permit:
                    violations.append(
                        f"{where}: groundwater size {size:g} exceeds the permitted "
                        f"30% headroom over the extraction permit ({permit:g})"
                    )
            else:
                if size > site["max_capacity_m3_day"]:
                    violations.append(
                        f"{where}: size {size:g} above the site maximum "
                        f"{site['max_capacity_m3_day']:g}"
                    )
            if iv.params["pump_option"] not in instance.pump_options:
                violations.append(f"{where}: unknown pump option {iv.params['pump_option']!r}")
            if int(iv.params["pump_count"]) < 1:
                violations.append(f"{where}: pump count must be >= 1")
            if iv.params["pipe_option"] not in instance.pipe_options:
                violations.append(f"{where}: unknown pipe option {iv.params['pipe_option']!r}")
            known_stations.add(f"ST_{site_id}")
        elif iv.kind == "close_source":
            sid = iv.params["source"]
            if sid not in instance.sources and sid not in opened_sites:
                violations.append(f"{where}: unknown source {sid!r}")
            elif sid in closed_sources:
                violations.append(f"{where}: source {sid!r} closed twice; no reopening")
            closed_sources.add(sid)
        elif iv.kind in ("install_pipe", "replace_pipe"):
            cid = iv.params["connection"]
            conn = instance.connections.get(cid)
            if conn is None:
                violations.append(f"{where}: unknown connection {cid!r}")
                continue
            if iv.params["option"] not in instance.pipe_options:
                violations.append(f"{where}: unknown pipe option {iv.params['option']!r}")
            if iv.kind == "install_pipe":
                if cid in piped_connections:
                    violations.append(
                        f"{where}: duplicate pipe on connection {cid!r}; "
                        "duplicate pipes are not allowed (use replace_pipe)"
                    )
                piped_connections.add(cid)
            else:
                if cid not in piped_connections:
                    violations.append(f"{where}: connection {cid!r} has no pipe to replace")
        elif iv.kind == "set_pumps":
            if iv.params["station"] not in known_stations:
                violations.append(f"{where}: unknown station {iv.params['station']!r}")
            if iv.params["option"] not in instance.pump_options:
                violations.append(f"{where}: unknown pump option {iv.params['option']!r}")
            if int(iv.params["count"]) < 1:
                violations.append(f"{where}: pump count must be >= 1")
        elif iv.kind == "install_pv":
            if iv.params["station"] not in known_stations:
                violations.append(f"{where}: unknown station {iv.params['station']!r}")
            if float(iv.params["kw"]) <= 0:
                violations.append(f"{where}: PV capacity must be > 0")
        elif iv.kind == "nrw_budget":
            if iv.params["utility"] not in instance.utilities:
                violations.append(f"{where}: unknown utility {iv.params['utility']!r}")
            if not 0 <= float(iv.params["share_pct"]) <= 100:
                violations.append(f"{where}: share must be a percentage in [0, 100]")
            if iv.params["policy"] not in ("by_leak_class", "by_population"):
                violations.append(f"{where}: unknown NRW policy {iv.params['policy']!r}")
        elif iv.kind == "budget_rule":
            if iv.params["rule"] not in ALLOCATION_RULES:
                violations.append(f"{where}: unknown budget rule {iv.params['rule']!r}")
    return violations


# --------------------------------------------------------------------------
# Run outputs
# --------------------------------------------------------------------------

@dataclass
class YearRecord:
    """Everything the engine learned about one simulated year."""

    year_offset: int
    calendar_year: int
    demand_m3: dict[str, float] = field(default_factory=dict)  # per muni, incl. NRW
    delivered_m3: dict[str, float] = field(default_factory=dict)
    undelivered_m3: dict[str, float] = field(default_factory=dict)
    billable_delivered_m3: dict[str, float] = field(default_factory=dict)
    nrw_m3_day: dict[str, float] = field(default_factory=dict)
    net_age_years: dict[str, float] = field(default_factory=dict)
    population: dict[str, float] = field(default_factory=dict)
    energy_purchased_kwh: dict[str, float] = field(default_factory=dict)  # per utility
    pv_offset_kwh: dict[str, float] = field(default_factory=dict)
    energy_cost_eur: dict[str, float] = field(default_factory=dict)
    opex_eur: dict[str, float] = field(default_factory=dict)
    capex_eur: dict[str, float] = field(default_factory=dict)
    revenue_eur: dict[str, float] = field(default_factory=dict)
    fines_eur: dict[str, float] = field(default_factory=dict)
    allocated_eur: dict[str, float] = field(default_factory=dict)
    bond_issued_eur: dict[str, float] = field(default_factory=dict)
    interest_paid_eur: dict[str, float] = field(default_factory=dict)
    remaining_eur: dict[str, float] = field(default_factory=dict)
    tac_eur: dict[str, float] = field(default_factory=dict)
    ghg_t: dict[str, float] = field(default_factory=dict)
    source_outflow_m3: dict[str, float] = field(default_factory=dict)  # annual, per source
    source_daily_outflow: dict[str, list[float]] = field(default_factory=dict)
    source_availability: dict[str, list[int]] = field(default_factory=dict)
    reliability: float | None = None
    affordability_pct: float | None = None
    nonconverged_hours: int = 0
    simulated_days: int = 0

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for key, value in self.__dict__.items():
            out[key] = value
        return out


@dataclass
class RunOutput:
    instance_name: str
    seed: int
    mode: str
    plan_name: str
    base_year: int
    stage_start_offset: int
    stage_years: int
    years: list[YearRecord]
    kpis: list[KpiReport]
    revealed_history: dict[str, Any]

    def national_kpis(self) -> KpiReport:
        for report in self.kpis:
            if report.slice_id == "national":
                return report
        raise EngineError("run output carries no national KPI slice")

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": 1,
            "instance": self.instance_name,
            "seed": self.seed,
            "mode": self.mode,
            "plan": self.plan_name,
            "base_year": self.base_year,
            "stage_start_offset": self.stage_start_offset,
            "stage_years": self.stage_years,
            "years": [y.to_dict() for y in self.years],
            "kpis": [k.to_dict() for k in self.kpis],
            "revealed_history": self.revealed_history,
        }


# --------------------------------------------------------------------------
# The simulation engine
# --------------------------------------------------------------------------

@dataclass
class _PendingSource:
    site: dict[str, Any]
    size_m3_day: float
    pump_option: str
    pump_count: int
    activation_year: int  # global offset


def _doc_distance_m(a: dict[str, Any], b_lat: float, b_lon: float) -> float:
    dx = (a["longitude"] - b_lon) * 70_000.0
    dy = (a["latitude"] - b_lat) * 111_000.0
    return max(float(np.hypot(dx, dy)), 500.0)


def _pv_capacity_factor(day: int, hour: int) -> float:
    if not 6 <= hour <= 18:
        return 0.0
    diurnal = float(np.sin(np.pi * (hour - 6) / 12.0))
    seasonal = 0.75 + 0.25 * float(
        np.cos(2.0 * np.pi * (day - PV_SOLAR_NOON_DAY) / DAYS_PER_YEAR)
    )
    return diurnal * seasonal * PV_SYSTEM_EFFICIENCY


class Simulation:
    """One committed timeline over a world instance.

    State persists across stages: assets keep annualizing, bonds keep
    accruing interest, ages and frictions carry forward. `clone()` gives
    an isolated copy for what-if runs.
    """

    def __init__(
        self,
        instance: Instance,
        seed: int,
        horizon_years: int | None = None,
        failure_budget: int = 200,
    ) -> None:
        self.instance = instance
        self.seed = seed
        self.failure_budget = failure_budget
        available = self._available_horizon()
        self.horizon_years = horizon_years or available
        if self.horizon_years > available:
            raise EngineError(
                f"requested horizon {self.horizon_years} exceeds the instance's "
                f"driver coverage ({available} years)"
            )
        surface_ids = [
            s.id for s in instance.sources.values() if s.source_type == "surface"
        ] + [
            sid
            for sid, site in instance.available_sites.items()
            if site["source_type"] == "surface"
        ]
        self.trace: ScenarioTrace = generate_trace(
            instance.drivers,
            seed,
            self.horizon_years,
            surface_sources=sorted(surface_ids),
            lifecycle_candidates=instance.lifecycle_candidates,
        )
        self.state = instance.world_state()
        self.year_offset = 0

        self.ledgers = {uid: EconomicLedger(uid) for uid in instance.utilities}
        self.assets: dict[str, list[AssetCharge]] = {uid: [] for uid in instance.utilities}
        self.embedded: dict[str, list[EmbeddedEmission]] = {
            uid: [] for uid in instance.utilities
        }
        self.opex_by_year: dict[str, dict[int, float]] = {uid: {} for uid in instance.utilities}
        self.budget_rule: str = instance.economy["budget_rule"]
        self.nrw_policy: dict[str, tuple[float, str]] = {}
        self.pending_sources: list[_PendingSource] = []
        self.source_sizes: dict[str, float] = {
            sid: s.nominal_capacity for sid, s in instance.sources.items()
        }

        self.fleets: dict[str, PumpFleetState] = {}
        for st in self.state.stations.values():
            source = self.state.sources[st.source_id]
            install_year = source.activation_date.year - instance.base_year
            self.fleets[st.id] = PumpFleetState(
                station_id=st.id,
                option=instance.pump_options[st.pump_option],
                install_years=[install_year] * st.pump_count,
            )

        # Identity of merged municipalities, for driver aggregation.
        self.constituents: dict[str, list[str]] = {
            mid: [mid] for mid in instance.municipalities
        }
        self._base_muni = copy.deepcopy(instance.municipalities)

        self._profile_library = demand_mod.synthetic_library()
        self._nrw_table = nrw_mod.NrwClassTable(
            bounds={
                **nrw_mod.NrwClassTable().bounds,
                "E": (55.0, float(instance.nrw_params.get("e_class_cap", 80.0))),
            }
        )
        self._nrw_unit_costs = {
            tuple(key.split(":")): cost
            for key, cost in instance.nrw_params["unit_costs"].items()
        }
        self._solver_options = SolverOptions()

    # -- helpers -----------------------------------------------------------

    def _available_horizon(self) -> int:
        limit = 10**6
        for spec in self.instance.drivers:
            mean = np.asarray(spec.mean, dtype=float)
            if mean.ndim > 0:
                limit = min(limit, mean.shape[0])
        return limit if limit < 10**6 else 50

    def clone(self) -> "Simulation":
        """Deep, isolated copy for what-if exploration."""
        return copy.deepcopy(self)

    def _date(self, year_offset: int) -> dt.date:
        return dt.date(self.instance.base_year + year_offset, 1, 1)

    def _utility_of(self, province: str) -> str:
        return self.instance.utility_of_province(province)

    def _muni_utility(self, muni_id: str) -> str:
        return self._utility_of(self.state.municipalities[muni_id].province)

    def _cumulative_inflation(self, year_offset: int) -> float:
        """Price level of ``year_offset`` relative to the base year."""
        path = self.trace.get("inflation")
        return float(np.prod(1.0 + path[:year_offset]))

    def _effective_population(self, muni_id: str, year_offset: int) -> float:
        pops = self.trace.series
        return float(
            sum(pops[("population", orig)][year_offset] for orig in self.constituents[muni_id])
        )

    def _effective_counts(self, muni_id: str, year_offset: int) -> tuple[float, float]:
        """Houses and businesses scaled with each constituent's population path."""
        houses = businesses = 0.0
        for orig in self.constituents[muni_id]:
            base = self._base_muni[orig]
            if base.population > 0:
                ratio = self.trace.get("population", orig)[year_offset] / base.population
            else:
                ratio = 1.0
            houses += base.houses * ratio
            businesses += base.businesses * ratio
        return houses, businesses

    def _book_capex(
        self,
        utility: str,
        year_offset: int,
        amount: float,
        lifetime: float,
        emissions_t: float = 0.0,
    ) -> None:
        self.ledgers[utility].year(year_offset).capex += amount
        self.assets[utility].append(
            AssetCharge(capex=amount, lifetime_years=lifetime, start_year=year_offset)
        )
        if emissions_t > 0:
            self.embedded[utility].append(
                EmbeddedEmission(
                    emissions_t=emissions_t, lifetime_years=lifetime, start_year=year_offset
                )
            )

    def _pipe_utilities(self, conn: Connection) -> list[str]:
        """Paying utilities: both halves for an inter-province pipe."""
        provinces = []
        for node in (conn.node_a, conn.node_b):
            if node in self.state.municipalities:
                provinces.append(self.state.municipalities[node].province)
            elif node in self.state.sources:
                provinces.append(self.state.sources[node].province)
        provinces = sorted(set(provinces))
        return [self._utility_of(p) for p in provinces]

    # -- interventions -----------------------------------------------------

    def _apply_intervention(self, iv: Intervention, g: int) -> None:
        """Apply one due intervention at global year offset ``g``."""
        cumf = self._cumulative_inflation(g)
        inst = self.instance
        if iv.kind == "open_source":
            site = inst.available_sites[iv.params["site"]]
            size = float(iv.params["size_m3_day"])
            bounds = inst.construction_time_bounds[site["source_type"]]
            cost_model = inst.source_costs[source_size_class(size)]
            sched = schedule_construction(
                site["id"], g, size, bounds, cost_model.unit_construction_cost * cumf, self.trace
            )
            utility = self._utility_of(site["province"])
            self._book_capex(utility, g, sched.capital_cost, inst.source_lifetime_years)
            # Feeder pipe and pumps are part of the project, booked upfront.
            muni = self.state.municipalities[site["connected_municipality"]]
            dist = _doc_distance_m(site, muni.latitude, muni.longitude)
            pipe_opt = inst.pipe_options[iv.params["pipe_option"]]
            self._book_capex(
                utility,
                g,
                pipe_opt.cost_per_m * cumf * dist,
                pipe_opt.lifetime_years,
                emissions_t=pipe_opt.emissions_t_per_m * dist,
            )
            pump_opt = inst.pump_options[iv.params["pump_option"]]
            count = int(iv.params["pump_count"])
            pump_life = sum(pump_opt.lifetime_bounds) / 2.0
            self._book_capex(utility, g, pump_opt.unit_cost * cumf * count, pump_life)
            self.pending_sources.append(
                _PendingSource(
                    site=dict(site, feeder_pipe=iv.params["pipe_option"], feeder_distance=dist),
                    size_m3_day=size,
                    pump_option=iv.params["pump_option"],
                    pump_count=count,
                    activation_year=sched.activation_year,
                )
            )
        elif iv.kind == "close_source":
            source = self.state.sources.get(iv.params["source"])
            if source is not None and source.closure_date is None:
                source.closure_date = self._date(g) + dt.timedelta(
                    days=QUARTER_START_DAYS[iv.quarter]
                )
        elif iv.kind in ("install_pipe", "replace_pipe"):
            conn = self.state.connections[iv.params["connection"]]
            option = inst.pipe_options[iv.params["option"]]
            if conn.hidden:
                # The connection vanished (municipality merger) after the plan
                # was made: cancel, with a fee of half the contract value.
                payers = self._pipe_utilities(conn) or sorted(inst.utilities)
                fee = 0.5 * option.cost_per_m * cumf * conn.distance
                for utility in payers:
                    self.ledgers[utility].year(g).capex += fee / len(payers)
                return
            payers = self._pipe_utilities(conn)
            cost = option.cost_per_m * cumf * conn.distance
            emissions = option.emissions_t_per_m * conn.distance
            for utility in payers:
                self._book_capex(
                    utility,
                    g,
                    cost / len(payers),
                    option.lifetime_years,
                    emissions_t=emissions / len(payers),
                )
            conn.installed_pipe = PipeInstance(
                option_id=option.id,
                install_date=self._date(g) + dt.timedelta(days=QUARTER_START_DAYS[iv.quarter]),
                current_friction=option.f_new,
            )
        elif iv.kind == "set_pumps":
            station = self.state.stations[iv.params["station"]]
            option = inst.pump_options[iv.params["option"]]
            count = int(iv.params["count"])
            station.pump_option = option.id
            station.pump_count = count
            self.fleets[station.id] = PumpFleetState(
                station_id=station.id, option=option, install_years=[g] * count
            )
            utility = self._utility_of(self.state.sources[station.source_id].province)
            self._book_capex(
                utility, g, option.unit_cost * cumf * count, sum(option.lifetime_bounds) / 2.0
            )
        elif iv.kind == "install_pv":
            station = self.state.stations[iv.params["station"]]
            kw = float(iv.params["kw"])
            station.pv_installations.append(
                PvInstallation(install_date=self._date(g), capacity_kw=kw)
            )
            unit_cost = float(self.trace.get("pv_unit_cost")[g])
            utility = self._utility_of(self.state.sources[station.source_id].province)
            self._book_capex(utility, g, unit_cost * kw, 25.0)
        elif iv.kind == "nrw_budget":
            self.nrw_policy[iv.params["utility"]] = (
                float(iv.params["share_pct"]),
                iv.params["policy"],
            )
        elif iv.kind == "budget_rule":
            self.budget_rule = iv.params["rule"]

    def _activate_pending(self, g: int) -> None:
        for pending in [p for p in self.pending_sources if p.activation_year == g]:
            site = pending.site
            sid = site["id"]
            self.state.sources[sid] = WaterSource(
                id=sid,
                source_type=site["source_type"],
                latitude=site["latitude"],
                longitude=site["longitude"],
                elevation=site["elevation"],
                province=site["province"],
                connected_municipality=site["connected_municipality"],
                activation_date=self._date(g),
                nominal_capacity=pending.size_m3_day,
                target_factor=site["target_factor"],
                permit=site.get("permit_m3_year"),
                max_capacity=site.get("max_capacity_m3_day"),
            )
            self.source_sizes[sid] = pending.size_m3_day
            station_id = f"ST_{sid}"
            self.state.stations[station_id] = PumpingStation(
                id=station_id,
                source_id=sid,
                pump_option=pending.pump_option,
                pump_count=pending.pump_count,
            )
            self.fleets[station_id] = PumpFleetState(
                station_id=station_id,
                option=self.instance.pump_options[pending.pump_option],
                install_years=[g] * pending.pump_count,
            )
            self.state.connections[f"FEED_{sid}"] = Connection(
                id=f"FEED_{sid}",
                node_a=sid,
                node_b=site["connected_municipality"],
                kind="intra-province",
                distance=site["feeder_distance"],
                installed_pipe=PipeInstance(
                    option_id=site["feeder_pipe"],
                    install_date=self._date(g),
                    current_friction=self.instance.pipe_options[site["feeder_pipe"]].f_new,
                ),
            )
        self.pending_sources = [p for p in self.pending_sources if p.activation_year != g]

    def _apply_lifecycle(self, g: int) -> None:
        on = self._date(g)
        for event in [e for e in self.trace.events if e.year == g]:
            if event.kind == "absorb":
                apply_absorb(self.state, event.sources[0], event.destination, on)
                merged = list(event.sources)
            elif event.kind == "cluster":
                successor = self.state.municipalities.get(event.destination)
                if successor is not None:
                    successor.begin_date = on
                apply_cluster(self.state, list(event.sources), event.destination, on)
                merged = list(event.sources)
            else:
                continue
            dest = self.constituents.setdefault(event.destination, [event.destination])
            for mid in merged:
                for orig in self.constituents.get(mid, [mid]):
                    if orig not in dest:
                        dest.append(orig)
            closed = set(merged)
            for source in self.state.sources.values():
                if source.connected_municipality in closed:
                    source.connected_municipality = event.destination
            for pending in self.pending_sources:
                if pending.site["connected_municipality"] in closed:
                    pending.site["connected_municipality"] = event.destination

    # -- aging -------------------------------------------------------------

    def _age_assets(self, g: int) -> None:
        """Yearly wear: network ages, pipe friction, pump end-of-life."""
        on = self._date(g)
        if g > 0:
            for muni in self.state.municipalities.values():
                if muni.is_open(on):
                    muni.dist_net_avg_age += 1.0
        for conn in self.state.connections.values():
            pipe = conn.installed_pipe
            if pipe is None or conn.hidden:
                continue
            option = self.instance.pipe_options[pipe.option_id]
            rate = self.trace.realized(
                f"{conn.id}@{pipe.install_date.isoformat()}",
                "pipe_decay",
                option.decay_bounds[0],
                option.decay_bounds[1],
            )
            years = max(0.0, (on - pipe.install_date).days / 365.0)
            pipe.current_friction = option.f_new + rate * years
        cumf = self._cumulative_inflation(g)
        for station in self.state.stations.values():
            source = self.state.sources[station.source_id]
            if not source.is_active(on):
                continue
            fleet = self.fleets[station.id]
            utility = self._utility_of(source.province)
            for repl in fleet.age_to(g, self.trace, fleet.option.unit_cost * cumf):
                self._book_capex(
                    utility, g, repl.cost, sum(fleet.option.lifetime_bounds) / 2.0
                )

    # -- network construction ---------------------------------------------

    def _build_network(self, on: dt.date) -> HydraulicNetwork:
        net = HydraulicNetwork()
        for muni in self.state.open_municipalities(on):
            net.junctions.append(Junction(muni.id, muni.elevation, 0.0))
        active = self.state.active_sources(on)
        active_ids = {s.id for s in active}
        for source in active:
            net.fixed_heads.append(FixedHead(source.id, source.elevation))
            net.junctions.append(Junction(f"{source.id}.out", source.elevation, 0.0))
            station = self.state.station_for_source(source.id)
            if station is not None:
                option = self.instance.pump_options[station.pump_option]
                net.pumps.append(
                    PumpGroupLink(
                        id=station.id,
                        node_a=source.id,
                        node_b=f"{source.id}.out",
                        head_curve=option.head_curve,
                        efficiency_curve=option.efficiency_curve,
                        units=station.pump_count,
                    )
                )
        node_ids = {j.id for j in net.junctions} | {f.id for f in net.fixed_heads}
        for conn in sorted(self.state.connections.values(), key=lambda c: c.id):
            if conn.hidden or conn.installed_pipe is None:
                continue
            a = f"{conn.node_a}.out" if conn.node_a in active_ids else conn.node_a
            b = f"{conn.node_b}.out" if conn.node_b in active_ids else conn.node_b
            if a not in node_ids or b not in node_ids:
                continue
            net.pipes.append(
                PipeLink(
                    id=conn.id,
                    node_a=a,
                    node_b=b,
                    length=conn.distance,
                    diameter=self.instance.pipe_options[conn.installed_pipe.option_id].diameter,
                    darcy_f=conn.installed_pipe.current_friction,
                )
            )
        return net

    def _compiled_variant(
        self,
        base: HydraulicNetwork,
        closed_sources: frozenset[str],
        cache: dict[frozenset[str], CompiledNetwork],
    ) -> CompiledNetwork:
        if closed_sources not in cache:
            if closed_sources:
                variant = HydraulicNetwork(
                    junctions=list(base.junctions),
                    fixed_heads=[f for f in base.fixed_heads if f.id not in closed_sources],
                    pipes=list(base.pipes),
                    pumps=[p for p in base.pumps if p.node_a not in closed_sources],
                )
            else:
                variant = base
            cache[closed_sources] = CompiledNetwork(variant, self._solver_options)
        return cache[closed_sources]

    # -- the year loop -----------------------------------------------------

    def run_stage(
        self,
        plan: Masterplan,
        mode: str = "full",
        stage_years: int = 25,
        progress=None,
    ) -> RunOutput:
        """Simulate and commit one stage under the given plan.

        ``progress``, when given, is called as ``progress(done, total)``
        after each simulated year.
        """
        if mode not in ("full", "rep"):
            raise EngineError(f"unknown simulation mode {mode!r}")
        violations = validate_plan(plan, self.instance)
        if violations:
            raise EngineError("plan failed validation:\n" + "\n".join(violations))
        if stage_years > plan.horizon_years:
            raise EngineError("stage length exceeds the plan horizon")
        if self.year_offset + stage_years > self.horizon_years:
            raise EngineError(
                f"stage of {stage_years} years starting at offset {self.year_offset} "
                f"does not fit the {self.horizon_years}-year trace"
            )

        start = self.year_offset
        records: list[YearRecord] = []
        nonconverged_total = 0
        for local_year in range(stage_years):
            record = self._run_year(plan, start, local_year, mode)
            nonconverged_total += record.nonconverged_hours
            if nonconverged_total > self.failure_budget:
                raise EngineError(
                    f"hydraulic failure budget exhausted: {nonconverged_total} "
                    f"non-converged hours by year offset {start + local_year}"
                )
            records.append(record)
            if progress is not None:
                progress(local_year + 1, stage_years)

        self.year_offset = start + stage_years
        kpis = self._stage_kpis(records, start, stage_years)
        return RunOutput(
            instance_name=self.instance.name,
            seed=self.seed,
            mode=mode,
            plan_name=plan.name,
            base_year=self.instance.base_year,
            stage_start_offset=start,
            stage_years=stage_years,
            years=records,
            kpis=kpis,
            revealed_history=reveal_history(self.trace, self.year_offset),
        )

    def advance_stage(self, new_plan: Masterplan, mode: str = "full",
                      stage_years: int = 25) -> RunOutput:
        """Continue the committed timeline under a revised plan."""
        return self.run_stage(new_plan, mode=mode, stage_years=stage_years)

    # The year loop proper.

    def _run_year(
        self, plan: Masterplan, stage_start: int, local_year: int, mode: str
    ) -> YearRecord:
        g = stage_start + local_year
        inst = self.instance
        on = self._date(g)
        cumf = self._cumulative_inflation(g)
        record = YearRecord(year_offset=g, calendar_year=inst.base_year + g)

        # January 1: lifecycle, construction completions, Q0 interventions.
        self._apply_lifecycle(g)
        self._activate_pending(g)
        due = sorted(
            (iv for iv in plan.interventions if iv.year == local_year),
            key=lambda iv: (iv.quarter, iv.kind),
        )
        for iv in due:
            if iv.quarter == 0:
                self._apply_intervention(iv, g)

        # Budget allocation under the current rule.
        open_munis = self.state.open_municipalities(on)
        pops_by_utility: dict[str, float] = {uid: 0.0 for uid in inst.utilities}
        income_by_utility: dict[str, list[float]] = {uid: [] for uid in inst.utilities}
        for muni in open_munis:
            uid = self._utility_of(muni.province)
            pop = self._effective_population(muni.id, g)
            muni.population = pop
            pops_by_utility[uid] += pop
            for orig in self.constituents[muni.id]:
                income_by_utility[uid].append(float(self.trace.get("income_p20", orig)[g]))
        national_budget = inst.economy["national_budget"] * cumf
        allocations = allocate_budget(
            national_budget,
            self.budget_rule,
            {u: max(p, 1.0) for u, p in pops_by_utility.items()},
            income_index={
                u: (float(np.mean(v)) if v else 1.0) for u, v in income_by_utility.items()
            },
        )
        for uid, amount in allocations.items():
            self.ledgers[uid].year(g).allocated = amount
            record.allocated_eur[uid] = amount

        # Aging before the year is simulated.
        self._age_assets(g)

        # NRW demand for the year, one draw per municipality.
        nrw_day: dict[str, float] = {}
        for muni in open_munis:
            cls = nrw_mod.classify(muni.dist_net_avg_age, self._nrw_table)
            km = nrw_mod.km_pipes(muni.population)
            muni.dist_net_length = km
            nrw_day[muni.id] = nrw_mod.sample_nrw_demand(
                cls, km, self.trace.rng("nrw", muni.id, g), self._nrw_table
            )
            record.nrw_m3_day[muni.id] = nrw_day[muni.id]
            record.net_age_years[muni.id] = muni.dist_net_avg_age
            record.population[muni.id] = muni.population

        # Billable demand series per municipality.
        drivers = [
            demand_mod.MuniDemandDrivers(
                muni_id=muni.id,
                houses=self._effective_counts(muni.id, g)[0],
                businesses=self._effective_counts(muni.id, g)[1],
                per_house_m3_day=inst.demand_params["per_house_m3_day"],
                per_business_m3_day=inst.demand_params["per_business_m3_day"],
                population=muni.population,
            )
            for muni in open_munis
        ]
        volumes = demand_mod.phase1_annual_volumes(
            drivers,
            float(self.trace.get("national_demand")[g]),
            lambda mid: self.trace.rng("demand", "annual", mid, g),
            sigma=inst.demand_params["sigma"],
        )
        tmax = float(self.trace.get("tmax")[g])
        muni_ids = [m.id for m in open_munis]
        hourly = np.empty((len(muni_ids), demand_mod.HOURS_PER_YEAR))
        for row, muni in enumerate(open_munis):
            profiles = demand_mod.phase2_assign_profiles(
                muni.population,
                self._profile_library,
                self.trace.rng("demand", "profiles", muni.id, g),
            )
            series = demand_mod.phase3_hourly_series(
                muni.id,
                g,
                volumes,
                profiles,
                inst.demand_params["residential_weight"],
                tmax,
                self.trace.rng("demand", "noise", muni.id, g),
            )
            hourly[row] = series.samples
        nrw_hourly = np.array([nrw_day[mid] / 24.0 for mid in muni_ids])
        total_hourly = hourly + nrw_hourly[:, None]

        self._simulate_days(record, g, local_year, plan, mode, muni_ids, hourly, total_hourly)
        self._close_year(record, g, cumf, muni_ids, open_munis)
        return record

    def _simulated_days(self, mode: str) -> list[tuple[int, float]]:
        if mode == "full":
            return [(d, 1.0) for d in range(DAYS_PER_YEAR)]
        days: list[tuple[int, float]] = []
        start = 0
        for length in MONTH_LENGTHS:
            weight = length / REP_WEEK_DAYS
            days.extend((start + k, weight) for k in range(REP_WEEK_DAYS))
            start += length
        return days

    def _simulate_days(
        self,
        record: YearRecord,
        g: int,
        local_year: int,
        plan: Masterplan,
        mode: str,
        muni_ids: list[str],
        billable_hourly: np.ndarray,
        total_hourly: np.ndarray,
    ) -> None:
        inst = self.instance
        on_year = self._date(g)
        elec_level = float(self.trace.get("electricity_price")[g])
        shape = np.asarray(inst.economy["electricity_daily_shape"], dtype=float)
        hour_price = elec_level * shape

        quarter_due = {
            q: [iv for iv in plan.interventions if iv.year == local_year and iv.quarter == q]
            for q in (1, 2, 3)
        }

        n_munis = len(muni_ids)
        delivered_year = np.zeros(n_munis)
        demand_year = np.zeros(n_munis)
        billable_delivered_year = np.zeros(n_munis)
        energy_by_station: dict[str, float] = {}
        pv_by_station: dict[str, float] = {}
        energy_cost_by_station: dict[str, float] = {}
        outflow_annual: dict[str, float] = {}
        daily_outflow: dict[str, list[float]] = {}
        availability_flags: dict[str, list[int]] = {}
        # Treatment-energy cost accumulators per source.
        src_energy_cost: dict[str, float] = {}

        base_net: HydraulicNetwork | None = None
        cache: dict[frozenset[str], CompiledNetwork] = {}
        row_cache: dict[frozenset[str], tuple[np.ndarray, np.ndarray]] = {}
        next_quarter = 1

        def rebuild(day: int) -> None:
            nonlocal base_net
            base_net = self._build_network(on_year + dt.timedelta(days=day))
            cache.clear()
            row_cache.clear()

        rebuild(0)
        sim_days = self._simulated_days(mode)
        record.simulated_days = len(sim_days)

        for day, weight in sim_days:
            while next_quarter <= 3 and day >= QUARTER_START_DAYS[next_quarter]:
                if quarter_due[next_quarter]:
                    for iv in quarter_due[next_quarter]:
                        self._apply_intervention(iv, g)
                    rebuild(QUARTER_START_DAYS[next_quarter])
                next_quarter += 1

            on = on_year + dt.timedelta(days=day)
            active = self.state.active_sources(on)
            unavailable: set[str] = set()
            for source in active:
                flags = availability_flags.setdefault(
                    source.id, [1] * DAYS_PER_YEAR
                )
                if source.source_type == "surface":
                    avail = int(self.trace.availability[source.id][g, day])
                    flags[day] = avail
                    if avail == 0:
                        unavailable.add(source.id)
                daily_outflow.setdefault(source.id, [0.0] * DAYS_PER_YEAR)
                outflow_annual.setdefault(source.id, 0.0)
                src_energy_cost.setdefault(source.id, 0.0)

            closed = frozenset(unavailable)
            remaining = {s.id: s.nominal_capacity for s in active if s.id not in closed}
            day_out = {s.id: 0.0 for s in active}
            src_hour_price_flow = {s.id: 0.0 for s in active}

            for hour in range(24):
                while True:
                    compiled = self._compiled_variant(base_net, closed, cache)
                    if closed not in row_cache:
                        row_of = {mid: r for r, mid in enumerate(muni_ids)}
                        rows = np.array(
                            [row_of.get(j.id, -1) for j in compiled.junctions], dtype=int
                        )
                        pump_src = np.array(
                            [p.node_a for p in compiled.pumps], dtype=object
                        )
                        row_cache[closed] = (rows, pump_src)
                    rows, pump_src = row_cache[closed]
                    dvec = np.where(
                        rows >= 0,
                        total_hourly[np.maximum(rows, 0), day * 24 + hour],
                        0.0,
                    )
                    sol = compiled.solve(dvec)
                    over = {
                        str(pump_src[k])
                        for k in range(len(compiled.pumps))
                        if str(pump_src[k]) in remaining
                        and day_out[str(pump_src[k])] + sol.pump_flow[k]
                        > remaining[str(pump_src[k])] + 1e-9
                    }
                    if not over:
                        break
                    # Cap crossed: close those feeds for the rest of the day
                    # and re-solve the hour.
                    closed = frozenset(closed | over)
                    for sid in over:
                        remaining.pop(sid, None)

                if not sol.converged:
                    record.nonconverged_hours += 1

                supplied_rows = rows >= 0
                delivered_vec = np.zeros(n_munis)
                demand_vec = total_hourly[:, day * 24 + hour]
                delivered_vec[rows[supplied_rows]] = sol.delivered[supplied_rows]
                delivered_year += weight * delivered_vec
                demand_year += weight * demand_vec
                with np.errstate(divide="ignore", invalid="ignore"):
                    billable_share = np.where(
                        demand_vec > 0,
                        billable_hourly[:, day * 24 + hour] / demand_vec,
                        0.0,
                    )
                billable_delivered_year += weight * delivered_vec * billable_share

                price = float(hour_price[hour])
                for k, pump in enumerate(compiled.pumps):
                    sid = str(pump.node_a)
                    flow = float(sol.pump_flow[k])
                    day_out[sid] += flow
                    src_hour_price_flow[sid] += flow * price
                    station = self.state.station_for_source(sid)
                    if station is None:
                        continue
                    pump_kwh = float(sol.pump_electric_kw[k])  # one hour
                    pv_kw = sum(
                        pv.capacity_kw
                        for pv in station.pv_installations
                        if pv_active(pv.install_date, on)
                    )
                    produced = pv_kw * _pv_capacity_factor(day, hour)
                    offset = min(pump_kwh, produced)
                    purchased = pump_kwh - offset
                    energy_by_station[station.id] = (
                        energy_by_station.get(station.id, 0.0) + weight * purchased
                    )
                    pv_by_station[station.id] = (
                        pv_by_station.get(station.id, 0.0) + weight * offset
                    )
                    energy_cost_by_station[station.id] = (
                        energy_cost_by_station.get(station.id, 0.0)
                        + weight * purchased * price
                    )

            for source in active:
                volume = day_out[source.id]
                daily_outflow[source.id][day] = volume
                outflow_annual[source.id] += weight * volume
                if volume > 0:
                    avg_price = src_hour_price_flow[source.id] / volume
                    model = inst.source_costs[source_size_class(self.source_sizes[source.id])]
                    src_energy_cost[source.id] += (
                        weight * volume * model.energy_intensity * avg_price
                    )

        # Stash accumulators on the record.
        for row, mid in enumerate(muni_ids):
            record.demand_m3[mid] = float(demand_year[row])
            record.delivered_m3[mid] = float(delivered_year[row])
            record.undelivered_m3[mid] = float(
                max(demand_year[row] - delivered_year[row], 0.0)
            )
            record.billable_delivered_m3[mid] = float(billable_delivered_year[row])
        record.source_outflow_m3 = {k: float(v) for k, v in sorted(outflow_annual.items())}
        record.source_daily_outflow = {
            k: [float(x) for x in v] for k, v in sorted(daily_outflow.items())
        }
        record.source_availability = {
            k: list(v) for k, v in sorted(availability_flags.items())
        }
        self._year_station_energy = (energy_by_station, pv_by_station, energy_cost_by_station)
        self._year_src_energy_cost = src_energy_cost

    def _close_year(
        self,
        record: YearRecord,
        g: int,
        cumf: float,
        muni_ids: list[str],
        open_munis: list,
    ) -> None:
        inst = self.instance
        energy_by_station, pv_by_station, energy_cost_by_station = self._year_station_energy
        src_energy_cost = self._year_src_energy_cost

        energy_u: dict[str, float] = {uid: 0.0 for uid in inst.utilities}
        pv_u: dict[str, float] = {uid: 0.0 for uid in inst.utilities}
        ecost_u: dict[str, float] = {uid: 0.0 for uid in inst.utilities}
        opex_u: dict[str, float] = {uid: 0.0 for uid in inst.utilities}
        fines_u: dict[str, float] = {uid: 0.0 for uid in inst.utilities}
        revenue_u: dict[str, float] = {uid: 0.0 for uid in inst.utilities}

        for station_id, kwh in energy_by_station.items():
            source = self.state.sources[self.state.stations[station_id].source_id]
            uid = self._utility_of(source.province)
            energy_u[uid] += kwh
            pv_u[uid] += pv_by_station.get(station_id, 0.0)
            ecost_u[uid] += energy_cost_by_station.get(station_id, 0.0)
            opex_u[uid] += energy_cost_by_station.get(station_id, 0.0)

        # Production costs and permit fines per source.
        for sid, annual_volume in record.source_outflow_m3.items():
            source = self.state.sources[sid]
            uid = self._utility_of(source.province)
            model = inst.source_costs[source_size_class(self.source_sizes[sid])]
            # Fixed/volume components at base prices, escalated; treatment
            # energy was accumulated at the hourly market price already.
            days = DAYS_PER_YEAR
            nominal = source.nominal_capacity
            planned = nominal * source.target_factor * days
            extra_vol = max(0.0, annual_volume - planned)
            opex_src = (
                model.fixed_per_year
                + annual_volume * model.non_energy_rate
                + extra_vol * model.non_energy_rate * (model.over_target_multiplier - 1.0)
            ) * cumf + src_energy_cost.get(sid, 0.0)
            opex_u[uid] += opex_src
            if source.source_type == "groundwater" and source.permit:
                fine = check_groundwater_permit(
                    annual_volume, source.permit, [(t, r) for t, r in inst.fine_schedule]
                )
                fines_u[uid] += fine * cumf

        # Tariff revenue on billable delivered volumes.
        tariff = inst.economy["tariff"]
        for muni in open_munis:
            uid = self._utility_of(muni.province)
            houses, _ = self._effective_counts(muni.id, g)
            revenue_u[uid] += tariff_revenue(
                record.billable_delivered_m3.get(muni.id, 0.0),
                houses,
                tariff["fixed_monthly"] * cumf,
                tariff["volumetric"] * cumf,
            )

        # NRW interventions: each utility spends its configured budget share.
        for uid, (share_pct, policy) in sorted(self.nrw_policy.items()):
            budget = self.ledgers[uid].year(g).allocated * share_pct / 100.0
            if budget <= 0:
                continue
            recs = [
                nrw_mod.MuniNrwRecord(
                    muni_id=m.id,
                    age=m.dist_net_avg_age,
                    km=m.dist_net_length,
                    population=m.population,
                )
                for m in open_munis
                if self._utility_of(m.province) == uid
            ]
            unit_costs = {
                key: cost * cumf for key, cost in self._nrw_unit_costs.items()
            }
            result = nrw_mod.apply_nrw_intervention(
                recs,
                budget,
                policy,
                unit_costs,
                effectiveness=float(inst.nrw_params.get("effectiveness", 1.0)),
                table=self._nrw_table,
            )
            for m in open_munis:
                if m.id in result.new_ages:
                    m.dist_net_avg_age = result.new_ages[m.id]
            opex_u[uid] += result.total_spent

        # Settle ledgers: pay interest, cover shortfalls with bonds.
        investor_demand = float(np.clip(self.trace.get("investor_demand")[g], 0.8, 1.2))
        bond_cfg = inst.economy["bond"]
        for uid in sorted(inst.utilities):
            ledger = self.ledgers[uid]
            year_ledger = ledger.year(g)
            year_ledger.opex += opex_u[uid]
            year_ledger.fines += fines_u[uid]
            year_ledger.revenue += revenue_u[uid]
            ledger.close_year(
                g,
                market=(
                    bond_cfg["risk_free"],
                    bond_cfg["credit_spread"],
                    bond_cfg["demand_sensitivity"],
                    investor_demand,
                ),
                maturity_years=bond_cfg["maturity_years"],
            )
            self.opex_by_year[uid][g] = year_ledger.opex

            record.energy_purchased_kwh[uid] = energy_u[uid]
            record.pv_offset_kwh[uid] = pv_u[uid]
            record.energy_cost_eur[uid] = ecost_u[uid]
            record.opex_eur[uid] = year_ledger.opex
            record.capex_eur[uid] = year_ledger.capex
            record.revenue_eur[uid] = year_ledger.revenue
            record.fines_eur[uid] = year_ledger.fines
            record.bond_issued_eur[uid] = year_ledger.bond_issued
            record.interest_paid_eur[uid] = year_ledger.interest_paid
            record.remaining_eur[uid] = year_ledger.remaining

            bonds = [
                BondCharge(b.principal, b.coupon, b.issue_year, b.maturity_years)
                for b in ledger.bonds
            ]
            record.tac_eur[uid] = tac_year(self.assets[uid], year_ledger.opex, bonds, g)
            ef = float(self.trace.get("electricity_ef")[g])
            embedded_t = sum(e.annual_emissions(g) for e in self.embedded[uid])
            record.ghg_t[uid] = embedded_t + energy_u[uid] * ef / 1000.0

        total_d = sum(record.demand_m3.values())
        total_u = sum(record.undelivered_m3.values())
        record.reliability = (1.0 - total_u / total_d) if total_d > 0 else None

        incomes = [
            float(self.trace.get("income_p20", orig)[g])
            for m in open_munis
            for orig in self.constituents[m.id]
        ]
        if incomes:
            lifeline = (
                inst.economy["lifeline_m3_person_month"] * inst.economy["avg_household_size"]
            )
            record.affordability_pct = affordability(
                inst.economy["tariff"]["volumetric"] * cumf,
                inst.economy["tariff"]["fixed_monthly"] * cumf,
                lifeline,
                percentile_income_p20(incomes),
            )

    # -- KPI aggregation ---------------------------------------------------

    def _stage_kpis(
        self, records: list[YearRecord], start: int, stage_years: int
    ) -> list[KpiReport]:
        reports: list[KpiReport] = []
        utilities = sorted(self.instance.utilities)

        def report_for(slice_id: str, uids: list[str], munis: set[str] | None) -> KpiReport:
            tac_total = 0.0
            ghg_total = 0.0
            demand = delivered = 0.0
            afford = []
            for rec in records:
                for uid in uids:
                    tac_total += rec.tac_eur.get(uid, 0.0)
                    ghg_total += rec.ghg_t.get(uid, 0.0)
                for mid, d in rec.demand_m3.items():
                    if munis is None or mid in munis:
                        demand += d
                        delivered += rec.delivered_m3.get(mid, 0.0)
                if rec.affordability_pct is not None:
                    afford.append(rec.affordability_pct)
            rel = reliability(np.array([demand]), np.array([delivered]))
            return KpiReport(
                slice_id=slice_id,
                tac_eur=tac_total,
                ghg_t=ghg_total,
                reliability=rel,
                affordability_pct=float(np.mean(afford)) if afford else None,
                extras={
                    "demand_m3": demand,
                    "delivered_m3": delivered,
                },
            )

        reports.append(report_for("national", utilities, None))
        for uid in utilities:
            province = self.instance.utilities[uid].province
            munis = {
                mid
                for mid, m in self.state.municipalities.items()
                if m.province == province
            }
            reports.append(report_for(f"utility:{uid}", [uid], munis))
        return reports
