"""Instance documents: the versioned JSON format describing a world
(entities, catalogs, economic parameters, driver specs, available sites),
its validation, canonical serialization, and a synthetic generator."""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import nrw
from .assets import PipeOption, PumpOption, SourceCostModel
from .domain import (
    Connection,
    Municipality,
    PipeInstance,
    PumpingStation,
    WaterSource,
    WaterUtility,
    WorldState,
)
from .scenario import DriverSpec, LifecycleCandidate

FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Schema, reference or invariant violation, with a document location."""

    def __init__(self, location: str, message: str) -> None:
        self.location = location
        super().__init__(f"{location}: {message}")


def _require(obj: dict, location: str, required: set[str], optional: set[str] = frozenset()) -> None:
    for key in required:
        if key not in obj:
            raise InstanceError(location, f"missing field {key!r}")
    for key in obj:
        if key not in required and key not in optional:
            raise InstanceError(f"{location}.{key}", "unknown field")


@dataclass
class Instance:
    """A fully validated world description."""

    name: str
    base_year: int
    utilities: dict[str, WaterUtility]
    municipalities: dict[str, Municipality]
    sources: dict[str, WaterSource]
    connections: dict[str, Connection]
    stations: dict[str, PumpingStation]
    pump_options: dict[str, PumpOption]
    pipe_options: dict[str, PipeOption]
    source_costs: dict[str, SourceCostModel]
    construction_time_bounds: dict[str, tuple[int, int]]
    fine_schedule: list[tuple[float, float]]
    economy: dict[str, Any]
    nrw_params: dict[str, Any]
    demand_params: dict[str, Any]
    available_sites: dict[str, dict[str, Any]]
    drivers: list[DriverSpec]
    lifecycle_candidates: list[LifecycleCandidate]
    source_lifetime_years: float = 40.0
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    def world_state(self) -> WorldState:
        """Fresh mutable state with deep copies of the dynamic entities."""
        import copy

        return WorldState(
            utilities=dict(self.utilities),
            municipalities=copy.deepcopy(self.municipalities),
            sources=copy.deepcopy(self.sources),
            connections=copy.deepcopy(self.connections),
            stations=copy.deepcopy(self.stations),
        )

    def utility_of_province(self, province: str) -> str:
        for uid, util in self.utilities.items():
            if util.province == province:
                return uid
        raise InstanceError("utilities", f"no utility covers province {province!r}")


def _parse_date(value: str, location: str) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except ValueError as exc:
        raise InstanceError(location, f"bad date {value!r}") from exc


def parse_instance(doc: dict[str, Any]) -> Instance:
    """Validate a raw document and build the typed instance.

    Unknown fields are rejected with their location; entity invariants
    from the domain and asset models run at load time.
    """
    _require(
        doc,
        "$",
        {
            "format_version", "name", "base_year", "utilities", "municipalities",
            "sources", "connections", "pump_options", "pipe_options", "source_costs",
            "construction_time_bounds", "fine_schedule", "economy", "nrw", "demand",
            "available_sites", "drivers",
        },
        {"lifecycle_candidates", "source_lifetime_years"},
    )
    if doc["format_version"] != FORMAT_VERSION:
        raise InstanceError("$.format_version", f"unsupported version {doc['format_version']}")

    utilities: dict[str, WaterUtility] = {}
    for k, u in enumerate(doc["utilities"]):
        loc = f"$.utilities[{k}]"
        _require(u, loc, {"id", "province"})
        if u["id"] in utilities:
            raise InstanceError(loc, f"duplicate utility id {u['id']!r}")
        utilities[u["id"]] = WaterUtility(id=u["id"], province=u["province"])

    municipalities: dict[str, Municipality] = {}
    for k, m in enumerate(doc["municipalities"]):
        loc = f"$.municipalities[{k}]"
        _require(
            m, loc,
            {"id", "name", "latitude", "longitude", "elevation", "province",
             "begin_date", "population", "houses", "businesses",
             "dist_net_length", "dist_net_avg_age"},
            {"end_date", "end_disposition", "surface_land", "surface_water_inland",
             "surface_water_open"},
        )
        if m["id"] in municipalities:
            raise InstanceError(loc, f"duplicate municipality id {m['id']!r}")
        try:
            municipalities[m["id"]] = Municipality(
                id=m["id"], name=m["name"], latitude=m["latitude"], longitude=m["longitude"],
                elevation=m["elevation"], province=m["province"],
                begin_date=_parse_date(m["begin_date"], loc),
                end_date=_parse_date(m["end_date"], loc) if m.get("end_date") else None,
                end_disposition=tuple(m["end_disposition"]) if m.get("end_disposition") else None,
                population=m["population"], houses=m["houses"], businesses=m["businesses"],
                surface_land=m.get("surface_land", 0.0),
                surface_water_inland=m.get("surface_water_inland", 0.0),
                surface_water_open=m.get("surface_water_open", 0.0),
                dist_net_length=m["dist_net_length"], dist_net_avg_age=m["dist_net_avg_age"],
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc

    pump_options: dict[str, PumpOption] = {}
    for k, p in enumerate(doc["pump_options"]):
        loc = f"$.pump_options[{k}]"
        _require(p, loc, {"id", "head_curve", "efficiency_curve", "lifetime_bounds", "unit_cost"})
        try:
            pump_options[p["id"]] = PumpOption(
                id=p["id"],
                head_curve=tuple(map(tuple, p["head_curve"])),
                efficiency_curve=tuple(map(tuple, p["efficiency_curve"])),
                lifetime_bounds=tuple(p["lifetime_bounds"]),
                unit_cost=p["unit_cost"],
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc

    pipe_options: dict[str, PipeOption] = {}
    for k, p in enumerate(doc["pipe_options"]):
        loc = f"$.pipe_options[{k}]"
        _require(
            p, loc,
            {"id", "diameter_m", "material", "f_new", "decay_bounds", "cost_per_m",
             "emissions_t_per_m"},
            {"lifetime_years"},
        )
        try:
            pipe_options[p["id"]] = PipeOption(
                id=p["id"], diameter=p["diameter_m"], material=p["material"],
                f_new=p["f_new"], decay_bounds=tuple(p["decay_bounds"]),
                cost_per_m=p["cost_per_m"], emissions_t_per_m=p["emissions_t_per_m"],
                lifetime_years=p.get("lifetime_years", 50.0),
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc

    sources: dict[str, WaterSource] = {}
    stations: dict[str, PumpingStation] = {}
    for k, s in enumerate(doc["sources"]):
        loc = f"$.sources[{k}]"
        _require(
            s, loc,
            {"id", "source_type", "latitude", "longitude", "elevation", "province",
             "connected_municipality", "activation_date", "nominal_capacity_m3_day",
             "target_factor", "station"},
            {"closure_date", "permit_m3_year", "max_capacity_m3_day"},
        )
        if s["connected_municipality"] not in municipalities:
            raise InstanceError(
                f"{loc}.connected_municipality",
                f"unknown municipality {s['connected_municipality']!r}",
            )
        try:
            sources[s["id"]] = WaterSource(
                id=s["id"], source_type=s["source_type"], latitude=s["latitude"],
                longitude=s["longitude"], elevation=s["elevation"], province=s["province"],
                connected_municipality=s["connected_municipality"],
                activation_date=_parse_date(s["activation_date"], loc),
                closure_date=_parse_date(s["closure_date"], loc) if s.get("closure_date") else None,
                nominal_capacity=s["nominal_capacity_m3_day"],
                target_factor=s["target_factor"],
                permit=s.get("permit_m3_year"),
                max_capacity=s.get("max_capacity_m3_day"),
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc
        st = s["station"]
        st_loc = f"{loc}.station"
        _require(st, st_loc, {"pump_option", "pump_count"}, {"pv_kw"})
        if st["pump_option"] not in pump_options:
            raise InstanceError(st_loc, f"unknown pump option {st['pump_option']!r}")
        stations[f"ST_{s['id']}"] = PumpingStation(
            id=f"ST_{s['id']}", source_id=s["id"], pump_option=st["pump_option"],
            pump_count=st["pump_count"],
        )

    connections: dict[str, Connection] = {}
    node_ids = set(municipalities) | set(sources)
    for k, c in enumerate(doc["connections"]):
        loc = f"$.connections[{k}]"
        _require(c, loc, {"id", "node_a", "node_b", "kind", "distance_m"}, {"installed_pipe"})
        for side in ("node_a", "node_b"):
            if c[side] not in node_ids:
                raise InstanceError(f"{loc}.{side}", f"unknown node {c[side]!r}")
        pipe = None
        if c.get("installed_pipe"):
            ip = c["installed_pipe"]
            _require(ip, f"{loc}.installed_pipe", {"option_id", "install_date"})
            if ip["option_id"] not in pipe_options:
                raise InstanceError(
                    f"{loc}.installed_pipe.option_id", f"unknown pipe option {ip['option_id']!r}"
                )
            opt = pipe_options[ip["option_id"]]
            pipe = PipeInstance(
                option_id=ip["option_id"],
                install_date=_parse_date(ip["install_date"], loc),
                current_friction=opt.f_new,
            )
        try:
            connections[c["id"]] = Connection(
                id=c["id"], node_a=c["node_a"], node_b=c["node_b"], kind=c["kind"],
                distance=c["distance_m"], installed_pipe=pipe,
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc

    source_costs = {}
    for cls, sc in doc["source_costs"].items():
        loc = f"$.source_costs.{cls}"
        _require(
            sc, loc,
            {"fixed_per_year", "energy_intensity_kwh_m3", "non_energy_eur_m3",
             "over_target_multiplier", "unit_construction_cost"},
        )
        try:
            source_costs[cls] = SourceCostModel(
                fixed_per_year=sc["fixed_per_year"],
                energy_intensity=sc["energy_intensity_kwh_m3"],
                non_energy_rate=sc["non_energy_eur_m3"],
                over_target_multiplier=sc["over_target_multiplier"],
                unit_construction_cost=sc["unit_construction_cost"],
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc

    drivers = []
    for k, d in enumerate(doc["drivers"]):
        loc = f"$.drivers[{k}]"
        _require(
            d, loc, {"name", "scope", "kind", "mean"},
            {"lower", "upper", "volatility", "reversion", "observable"},
        )
        try:
            drivers.append(
                DriverSpec(
                    name=d["name"], scope=d["scope"], kind=d["kind"], mean=d["mean"],
                    lower=d.get("lower"), upper=d.get("upper"),
                    volatility=d.get("volatility", 0.0),
                    reversion=d.get("reversion", 0.3),
                    observable=d.get("observable", True),
                )
            )
        except ValueError as exc:
            raise InstanceError(loc, str(exc)) from exc

    candidates = []
    for k, c in enumerate(doc.get("lifecycle_candidates", [])):
        loc = f"$.lifecycle_candidates[{k}]"
        _require(c, loc, {"kind", "sources", "destination", "window"}, {"probability"})
        for sid in c["sources"]:
            if sid not in municipalities:
                raise InstanceError(loc, f"unknown municipality {sid!r}")
        if c["destination"] not in municipalities:
            raise InstanceError(loc, f"unknown municipality {c['destination']!r}")
        candidates.append(
            LifecycleCandidate(
                kind=c["kind"], sources=tuple(c["sources"]), destination=c["destination"],
                window=tuple(c["window"]), probability=c.get("probability", 1.0),
            )
        )

    sites = {}
    for k, s in enumerate(doc["available_sites"]):
        loc = f"$.available_sites[{k}]"
        _require(
            s, loc,
            {"id", "source_type", "latitude", "longitude", "elevation", "province",
             "connected_municipality", "target_factor"},
            {"permit_m3_year", "max_capacity_m3_day"},
        )
        if s["connected_municipality"] not in municipalities:
            raise InstanceError(loc, f"unknown municipality {s['connected_municipality']!r}")
        sites[s["id"]] = dict(s)

    return Instance(
        name=doc["name"],
        base_year=doc["base_year"],
        utilities=utilities,
        municipalities=municipalities,
        sources=sources,
        connections=connections,
        stations=stations,
        pump_options=pump_options,
        pipe_options=pipe_options,
        source_costs=source_costs,
        construction_time_bounds={
            k: tuple(v) for k, v in doc["construction_time_bounds"].items()
        },
        fine_schedule=[tuple(x) for x in doc["fine_schedule"]],
        economy=doc["economy"],
        nrw_params=doc["nrw"],
        demand_params=doc["demand"],
        available_sites=sites,
        drivers=drivers,
        lifecycle_candidates=candidates,
        source_lifetime_years=doc.get("source_lifetime_years", 40.0),
        raw=doc,
    )


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}:{exc.lineno}", exc.msg) from exc
    return parse_instance(doc)


def dump_instance(doc: dict[str, Any]) -> str:
    """Canonical serialization: sorted keys, fixed separators, newline at end."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_instance(doc: dict[str, Any], path: str) -> None:
    parse_instance(doc)  # never write an invalid document
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_instance(doc))


# --- synthetic generation -------------------------------------------------

def generate_instance(
    n_munis: int = 12,
    n_sources: int = 4,
    seed: int = 42,
    name: str | None = None,
    base_year: int = 2030,
    horizon_years: int = 30,
) -> dict[str, Any]:
    """Synthetic but hydraulically sensible instance document.

    Municipalities sit on a jittered grid across two provinces; a chain of
    trunk connections plus a few cross links carries installed pipes sized
    by downstream population; sources are placed to cover total demand
    with ~40% headroom.
    """
    if n_munis < 2 or n_sources < 1:
        raise InstanceError("$", "need at least 2 municipalities and 1 source")
    rng = np.random.default_rng(seed)
    name = name or f"synthetic-{n_munis}m{n_sources}s-{seed}"

    provinces = ["north", "south"]
    utilities = [{"id": f"WU_{p}", "province": p} for p in provinces]

    munis = []
    cols = int(math.ceil(math.sqrt(n_munis)))
    for k in range(n_munis):
        pop = float(np.round(rng.lognormal(mean=10.0, sigma=0.8)))
        pop = float(min(max(pop, 5_000), 250_000))
        row, col = divmod(k, cols)
        munis.append(
            {
                "id": f"M{k:02d}",
                "name": f"Town {k:02d}",
                "latitude": 52.0 + 0.15 * row + float(rng.uniform(-0.03, 0.03)),
                "longitude": 4.5 + 0.15 * col + float(rng.uniform(-0.03, 0.03)),
                "elevation": float(np.round(rng.uniform(0.0, 15.0), 1)),
                "province": provinces[0] if row < cols / 2 else provinces[1],
                "begin_date": f"{base_year - 30}-01-01",
                "population": pop,
                "houses": float(np.round(pop / 2.2)),
                "businesses": float(np.round(pop / 18.0)),
                "dist_net_length": float(np.round(nrw.km_pipes(pop), 2)),
                "dist_net_avg_age": float(np.round(rng.uniform(15.0, 58.0), 1)),
            }
        )

    per_house = 0.26  # m3/day
    per_business = 1.8  # m3/day
    total_daily = sum(m["houses"] * per_house + m["businesses"] * per_business for m in munis)
    # Leakage roughly doubles peak-hour stress; keep 40% capacity headroom.
    total_capacity = total_daily * 2.0 * 1.4

    pump_options = []
    pipe_options = [
        {"id": "P300", "diameter_m": 0.3, "material": "PE", "f_new": 0.018,
         "decay_bounds": [0.0001, 0.0006], "cost_per_m": 250.0,
         "emissions_t_per_m": 0.08, "lifetime_years": 50.0},
        {"id": "P500", "diameter_m": 0.5, "material": "steel", "f_new": 0.016,
         "decay_bounds": [0.0001, 0.0008], "cost_per_m": 420.0,
         "emissions_t_per_m": 0.15, "lifetime_years": 50.0},
        {"id": "P800", "diameter_m": 0.8, "material": "steel", "f_new": 0.015,
         "decay_bounds": [0.0001, 0.0008], "cost_per_m": 700.0,
         "emissions_t_per_m": 0.28, "lifetime_years": 50.0},
        {"id": "P1200", "diameter_m": 1.2, "material": "concrete", "f_new": 0.015,
         "decay_bounds": [0.0001, 0.001], "cost_per_m": 1100.0,
         "emissions_t_per_m": 0.45, "lifetime_years": 60.0},
    ]

    sources = []
    types = ["groundwater", "surface", "desalination"]
    # Spread sources across the map, largest municipalities first.
    ranked = sorted(range(n_munis), key=lambda k: -munis[k]["population"])
    share = total_capacity / n_sources
    for j in range(n_sources):
        muni = munis[ranked[j % len(ranked)]]
        stype = types[j % len(types)]
        capacity = float(np.round(share * rng.uniform(0.9, 1.1)))
        src: dict[str, Any] = {
            "id": f"S{j:02d}",
            "source_type": stype,
            "latitude": muni["latitude"] + float(rng.uniform(-0.02, 0.02)),
            "longitude": muni["longitude"] + float(rng.uniform(-0.02, 0.02)),
            "elevation": float(np.round(rng.uniform(0.0, 10.0), 1)),
            "province": muni["province"],
            "connected_municipality": muni["id"],
            "activation_date": f"{base_year - 20}-01-01",
            "nominal_capacity_m3_day": capacity,
            "target_factor": 0.8,
        }
        if stype == "groundwater":
            src["permit_m3_year"] = float(np.round(capacity * 365.0 / 1.1))
        else:
            src["max_capacity_m3_day"] = float(np.round(capacity * 1.5))
        # Per-unit curve sized so two units cover the source's peak outflow
        # comfortably inside the tabulated range.
        q_max = capacity / 24.0 * 2.0
        option_id = f"PU{j:02d}"
        pump_options.append(
            {
                "id": option_id,
                "head_curve": [[0.0, 90.0], [q_max * 0.35, 80.0], [q_max * 0.7, 65.0],
                               [q_max, 45.0]],
                "efficiency_curve": [[0.0, 0.45], [q_max * 0.5, 0.78], [q_max, 0.6]],
                "lifetime_bounds": [12.0, 20.0],
                "unit_cost": 80_000.0 + 40.0 * q_max,
            }
        )
        src["station"] = {"pump_option": option_id, "pump_count": 2}
        sources.append(src)

    def dist_m(a: dict, b: dict) -> float:
        dx = (a["longitude"] - b["longitude"]) * 70_000.0
        dy = (a["latitude"] - b["latitude"]) * 111_000.0
        return float(np.round(max(math.hypot(dx, dy), 500.0), 0))

    connections = []

    def pipe_for(pop: float) -> str:
        if pop > 150_000:
            return "P1200"
        if pop > 60_000:
            return "P800"
        if pop > 20_000:
            return "P500"
        return "P300"

    # Trunk: chain of nearest unvisited municipalities.
    visited = [0]
    unvisited = list(range(1, n_munis))
    cid = 0
    while unvisited:
        best = None
        for a in visited:
            for b in unvisited:
                d = dist_m(munis[a], munis[b])
                if best is None or d < best[2]:
                    best = (a, b, d)
        a, b, d = best
        kind = "intra-province" if munis[a]["province"] == munis[b]["province"] else "inter-province"
        connections.append(
            {
                "id": f"C{cid:03d}", "node_a": munis[a]["id"], "node_b": munis[b]["id"],
                "kind": kind, "distance_m": d,
                "installed_pipe": {
                    "option_id": pipe_for(max(munis[a]["population"], munis[b]["population"])),
                    "install_date": f"{base_year - 25}-01-01",
                },
            }
        )
        cid += 1
        visited.append(b)
        unvisited.remove(b)
    # A few redundancy links and one spare (pipe-free) connection.
    extra = min(3, n_munis - 1)
    for k in range(extra):
        a, b = int(rng.integers(n_munis)), int(rng.integers(n_munis))
        if a == b or any(
            {c["node_a"], c["node_b"]} == {munis[a]["id"], munis[b]["id"]} for c in connections
        ):
            continue
        kind = "intra-province" if munis[a]["province"] == munis[b]["province"] else "inter-province"
        connections.append(
            {
                "id": f"C{cid:03d}", "node_a": munis[a]["id"], "node_b": munis[b]["id"],
                "kind": kind, "distance_m": dist_m(munis[a], munis[b]),
                "installed_pipe": None if k == extra - 1 else {
                    "option_id": "P500", "install_date": f"{base_year - 15}-01-01",
                },
            }
        )
        cid += 1
    # Source feeder connections.
    for src in sources:
        muni = next(m for m in munis if m["id"] == src["connected_municipality"])
        connections.append(
            {
                "id": f"C{cid:03d}", "node_a": src["id"], "node_b": muni["id"],
                "kind": "intra-province", "distance_m": dist_m(src, muni),
                "installed_pipe": {
                    "option_id": "P800", "install_date": f"{base_year - 20}-01-01",
                },
            }
        )
        cid += 1

    national_target = float(np.round(total_daily * 365.0))
    horizon = horizon_years

    drivers: list[dict[str, Any]] = []
    for m in munis:
        growth = rng.uniform(-0.002, 0.008)
        mean_path = [float(np.round(m["population"] * (1 + growth) ** t)) for t in range(horizon)]
        drivers.append(
            {"name": "population", "scope": m["id"], "kind": "bounded_random_walk",
             "mean": mean_path, "lower": [v * 0.9 for v in mean_path],
             "upper": [v * 1.1 for v in mean_path], "volatility": 0.005}
        )
        drivers.append(
            {"name": "income_p20", "scope": m["id"], "kind": "mean_reverting",
             "mean": float(np.round(rng.uniform(1300, 2100))), "volatility": 0.01}
        )
    drivers += [
        {"name": "tmax", "scope": "", "kind": "bounded_random_walk",
         "mean": [28.0 + 0.05 * t for t in range(horizon)],
         "lower": [24.0] * horizon, "upper": [40.0] * horizon, "volatility": 0.03},
        {"name": "electricity_price", "scope": "", "kind": "ar1_lognormal",
         "mean": [0.22 * 1.02**t for t in range(horizon)],
         "lower": [0.08] * horizon, "upper": [0.8] * horizon, "volatility": 0.08},
        {"name": "electricity_ef", "scope": "", "kind": "bounded_random_walk",
         "mean": [max(0.25 - 0.008 * t, 0.03) for t in range(horizon)],
         "lower": [0.0] * horizon, "upper": [0.5] * horizon, "volatility": 0.02},
        {"name": "pv_unit_cost", "scope": "", "kind": "bounded_random_walk",
         "mean": [max(900.0 - 12.0 * t, 300.0) for t in range(horizon)],
         "lower": [200.0] * horizon, "upper": [1500.0] * horizon, "volatility": 0.02},
        {"name": "inflation", "scope": "", "kind": "mean_reverting",
         "mean": 0.02, "lower": -0.01, "upper": 0.08, "volatility": 0.3,
         "reversion": 0.5},
        {"name": "national_demand", "scope": "", "kind": "bounded_random_walk",
         "mean": [national_target * (1 + 0.002 * t) for t in range(horizon)],
         "lower": [national_target * 0.85] * horizon,
         "upper": [national_target * 1.25] * horizon, "volatility": 0.01},
        {"name": "investor_demand", "scope": "", "kind": "bounded_random_walk",
         "mean": 1.0, "lower": 0.8, "upper": 1.2, "volatility": 0.05,
         "observable": False},
    ]

    doc = {
        "format_version": FORMAT_VERSION,
        "name": name,
        "base_year": base_year,
        "utilities": utilities,
        "municipalities": munis,
        "sources": sources,
        "connections": connections,
        "pump_options": pump_options,
        "pipe_options": pipe_options,
        "source_costs": {
            "small": {"fixed_per_year": 400_000.0, "energy_intensity_kwh_m3": 0.25,
                      "non_energy_eur_m3": 0.08, "over_target_multiplier": 1.5,
                      "unit_construction_cost": 300.0},
            "medium": {"fixed_per_year": 1_500_000.0, "energy_intensity_kwh_m3": 0.45,
                       "non_energy_eur_m3": 0.15, "over_target_multiplier": 1.4,
                       "unit_construction_cost": 450.0},
            "large": {"fixed_per_year": 4_000_000.0, "energy_intensity_kwh_m3": 0.9,
                      "non_energy_eur_m3": 0.3, "over_target_multiplier": 1.3,
                      "unit_construction_cost": 600.0},
        },
        "construction_time_bounds": {
            "groundwater": [2, 4], "surface": [3, 6], "desalination": [5, 10],
        },
        "fine_schedule": [[0.0, 0.5], [500_000.0, 1.0], [2_000_000.0, 2.5]],
        "economy": {
            "national_budget": float(np.round(total_daily * 365 * 1.2)),
            "budget_rule": "per_capita",
            "bond": {"risk_free": 0.03, "credit_spread": 0.01,
                     "demand_sensitivity": 0.02, "maturity_years": 20},
            "tariff": {"fixed_monthly": 8.0, "volumetric": 1.45},
            "electricity_daily_shape": [
                0.62, 0.58, 0.55, 0.54, 0.56, 0.66, 0.85, 1.1, 1.28, 1.32, 1.3, 1.28,
                1.26, 1.24, 1.22, 1.2, 1.22, 1.3, 1.38, 1.34, 1.18, 0.98, 0.8, 0.84,
            ],
            "avg_household_size": 2.2,
            "lifeline_m3_person_month": 1.5,
        },
        "nrw": {
            "e_class_cap": 80.0,
            "unit_costs": {
                f"{cls}:{size}": cost
                for cls, base in (("B", 9000.0), ("C", 8000.0), ("D", 7000.0), ("E", 6000.0))
                for size, cost in (("small", base), ("medium", base * 1.15), ("large", base * 1.3))
            },
            "effectiveness": 0.002,
        },
        "demand": {
            "per_house_m3_day": per_house,
            "per_business_m3_day": per_business,
            "sigma": 0.05,
            "residential_weight": 0.6,
        },
        "available_sites": [
            {"id": "SITE_GW1", "source_type": "groundwater",
             "latitude": munis[1]["latitude"], "longitude": munis[1]["longitude"],
             "elevation": 5.0, "province": munis[1]["province"],
             "connected_municipality": munis[1]["id"], "target_factor": 0.8,
             "permit_m3_year": float(np.round(total_daily * 365 * 0.2))},
            {"id": "SITE_DESAL1", "source_type": "desalination",
             "latitude": munis[0]["latitude"] + 0.05, "longitude": munis[0]["longitude"],
             "elevation": 2.0, "province": munis[0]["province"],
             "connected_municipality": munis[0]["id"], "target_factor": 0.85,
             "max_capacity_m3_day": float(np.round(total_daily * 0.8))},
        ],
        "drivers": drivers,
        "lifecycle_candidates": [],
        "source_lifetime_years": 40.0,
    }
    parse_instance(doc)
    return doc


def demo_instance() -> dict[str, Any]:
    """The bundled 12-municipality, 4-source demo world."""
    return generate_instance(n_munis=12, n_sources=4, seed=7, name="demo")
