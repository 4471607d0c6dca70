"""Static and dynamic entities of the planning world.

Utilities, municipalities, sources, connections and pumping stations,
plus the municipality lifecycle (absorption and clustering on January 1)
and the visible-network view the hydraulic solver consumes.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import networkx as nx


class DomainError(ValueError):
    """Invalid entity data."""


class LifecycleError(DomainError):
    """A lifecycle event violated its preconditions."""


@dataclass(frozen=True)
class WaterUtility:
    id: str
    province: str


@dataclass
class Municipality:
    id: str
    name: str
    latitude: float
    longitude: float
    elevation: float
    province: str
    begin_date: dt.date
    end_date: dt.date | None = None
    end_disposition: tuple[str, str] | None = None  # ("absorbed-into"|"clustered-into", id)
    population: float = 0.0
    surface_land: float = 0.0
    surface_water_inland: float = 0.0
    surface_water_open: float = 0.0
    houses: float = 0.0
    businesses: float = 0.0
    dist_net_length: float = 0.0
    dist_net_avg_age: float = 0.0

    def __post_init__(self) -> None:
        if self.begin_date.month != 1 or self.begin_date.day != 1:
            raise DomainError(f"municipality {self.id!r}: begin_date must be a January 1st")
        if self.end_date is not None:
            if self.end_date.month != 1 or self.end_date.day != 1:
                raise DomainError(f"municipality {self.id!r}: end_date must be a January 1st")
            if self.end_date <= self.begin_date:
                raise DomainError(f"municipality {self.id!r}: end_date must follow begin_date")
        if self.population < 0 or self.dist_net_avg_age < 0:
            raise DomainError(f"municipality {self.id!r}: negative population or network age")

    def is_open(self, on: dt.date) -> bool:
        return self.begin_date <= on and (self.end_date is None or on < self.end_date)


SOURCE_TYPES = ("groundwater", "surface", "desalination")

#: Groundwater capacity may exceed the permit figure by at most 30%.
GROUNDWATER_PERMIT_HEADROOM = 1.3


@dataclass
class WaterSource:
    id: str
    source_type: str
    latitude: float
    longitude: float
    elevation: float
    province: str
    connected_municipality: str
    activation_date: dt.date
    nominal_capacity: float  # m3/day
    target_factor: float
    closure_date: dt.date | None = None
    permit: float | None = None  # m3/year, groundwater
    max_capacity: float | None = None  # m3/day, surface/desalination

    def __post_init__(self) -> None:
        if self.source_type not in SOURCE_TYPES:
            raise DomainError(f"source {self.id!r}: unknown type {self.source_type!r}")
        if self.nominal_capacity <= 0:
            raise DomainError(f"source {self.id!r}: nominal capacity must be > 0")
        if not 0.0 <= self.target_factor <= 1.0:
            raise DomainError(f"source {self.id!r}: target factor must be in [0, 1]")
        if self.source_type == "groundwater":
            if self.permit is None or self.permit <= 0:
                raise DomainError(f"groundwater source {self.id!r} needs a positive permit")
            if self.nominal_capacity > GROUNDWATER_PERMIT_HEADROOM * self.permit + 1e-9:
                raise DomainError(
                    f"groundwater source {self.id!r}: capacity exceeds permit headroom"
                )
        else:
            if self.max_capacity is None or self.max_capacity <= 0:
                raise DomainError(f"source {self.id!r} needs a positive max capacity")
            if self.nominal_capacity > self.max_capacity + 1e-9:
                raise DomainError(f"source {self.id!r}: capacity above its maximum")

    def is_active(self, on: dt.date) -> bool:
        return self.activation_date <= on and (self.closure_date is None or on < self.closure_date)


@dataclass
class PipeInstance:
    option_id: str
    install_date: dt.date
    current_friction: float


@dataclass
class Connection:
    id: str
    node_a: str
    node_b: str
    kind: str  # "intra-province" | "inter-province"
    distance: float  # m
    minor_loss: float = 0.0
    installed_pipe: PipeInstance | None = None
    hidden: bool = False

    def __post_init__(self) -> None:
        if self.distance <= 0:
            raise DomainError(f"connection {self.id!r}: distance must be > 0")
        if self.minor_loss != 0:
            raise DomainError(f"connection {self.id!r}: minor loss is fixed at 0")


@dataclass
class PvInstallation:
    install_date: dt.date
    capacity_kw: float


@dataclass
class PumpingStation:
    id: str
    source_id: str
    pump_option: str
    pump_count: int = 1
    pump_install_dates: list[dt.date] = field(default_factory=list)
    pv_installations: list[PvInstallation] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.pump_count < 1:
            raise DomainError(f"station {self.id!r}: needs at least one pump")


@dataclass
class WorldState:
    """Single-writer mutable simulation state."""

    utilities: dict[str, WaterUtility] = field(default_factory=dict)
    municipalities: dict[str, Municipality] = field(default_factory=dict)
    sources: dict[str, WaterSource] = field(default_factory=dict)
    connections: dict[str, Connection] = field(default_factory=dict)
    stations: dict[str, PumpingStation] = field(default_factory=dict)

    def open_municipalities(self, on: dt.date) -> list[Municipality]:
        return sorted(
            (m for m in self.municipalities.values() if m.is_open(on)), key=lambda m: m.id
        )

    def active_sources(self, on: dt.date) -> list[WaterSource]:
        return sorted(
            (s for s in self.sources.values() if s.is_active(on)), key=lambda s: s.id
        )

    def station_for_source(self, source_id: str) -> PumpingStation | None:
        for st in self.stations.values():
            if st.source_id == source_id:
                return st
        return None


ADDITIVE_FIELDS = (
    "population",
    "surface_land",
    "surface_water_inland",
    "surface_water_open",
    "houses",
    "businesses",
    "dist_net_length",
)


def _merge_additive(dst: Municipality, srcs: list[Municipality]) -> None:
    # Length-weighted age merge; ages drive NRW classes.
    total_len = dst.dist_net_length + sum(s.dist_net_length for s in srcs)
    if total_len > 0:
        dst.dist_net_avg_age = (
            dst.dist_net_avg_age * dst.dist_net_length
            + sum(s.dist_net_avg_age * s.dist_net_length for s in srcs)
        ) / total_len
    for name in ADDITIVE_FIELDS:
        setattr(dst, name, getattr(dst, name) + sum(getattr(s, name) for s in srcs))


def _repoint_connections(state: WorldState, absorbed: set[str], target: str) -> None:
    """Re-point the absorbed nodes' connections to the surviving node.

    A connection inside the absorbed set (or duplicating an existing
    visible one) becomes hidden: it is now internal distribution network.
    """
    existing_pairs = {
        frozenset((c.node_a, c.node_b))
        for c in state.connections.values()
        if not c.hidden and c.node_a not in absorbed and c.node_b not in absorbed
    }
    for conn in sorted(state.connections.values(), key=lambda c: c.id):
        if conn.hidden:
            continue
        a_in, b_in = conn.node_a in absorbed, conn.node_b in absorbed
        if not (a_in or b_in):
            continue
        new_a = target if a_in else conn.node_a
        new_b = target if b_in else conn.node_b
        if new_a == new_b or frozenset((new_a, new_b)) in existing_pairs:
            conn.hidden = True
            continue
        conn.node_a, conn.node_b = new_a, new_b
        existing_pairs.add(frozenset((new_a, new_b)))


def apply_absorb(state: WorldState, src_id: str, dst_id: str, on: dt.date) -> None:
    """Absorb one municipality into an open neighbor on January 1."""
    if on.month != 1 or on.day != 1:
        raise LifecycleError("lifecycle events happen on January 1st only")
    src = state.municipalities.get(src_id)
    dst = state.municipalities.get(dst_id)
    if src is None or dst is None:
        raise LifecycleError(f"unknown municipality in absorb({src_id!r}, {dst_id!r})")
    if not src.is_open(on):
        raise LifecycleError(f"municipality {src_id!r} is not open on {on}")
    if not dst.is_open(on):
        raise LifecycleError(f"municipality {dst_id!r} is not open on {on}")
    _merge_additive(dst, [src])
    src.end_date = on
    src.end_disposition = ("absorbed-into", dst_id)
    _repoint_connections(state, {src_id}, dst_id)


def apply_cluster(state: WorldState, src_ids: list[str], new_id: str, on: dt.date) -> None:
    """Close several municipalities and open their successor on January 1.

    The successor must pre-exist in the registry (its coordinates are the
    new city center from the instance file) with ``begin_date`` equal to
    the event date.
    """
    if on.month != 1 or on.day != 1:
        raise LifecycleError("lifecycle events happen on January 1st only")
    if len(src_ids) < 2:
        raise LifecycleError("clustering needs at least two municipalities")
    new = state.municipalities.get(new_id)
    if new is None:
        raise LifecycleError(f"clustered municipality {new_id!r} not in the registry")
    srcs = []
    for sid in src_ids:
        muni = state.municipalities.get(sid)
        if muni is None or not muni.is_open(on):
            raise LifecycleError(f"municipality {sid!r} is not open on {on}")
        srcs.append(muni)
    if new.begin_date != on:
        raise LifecycleError(
            f"clustered municipality {new_id!r} begins {new.begin_date}, event is {on}"
        )
    _merge_additive(new, srcs)
    for muni in srcs:
        muni.end_date = on
        muni.end_disposition = ("clustered-into", new_id)
    _repoint_connections(state, set(src_ids), new_id)


def visible_network(state: WorldState, on: dt.date) -> nx.Graph:
    """Graph of open municipalities, active sources, and installed pipes.

    Node and edge iteration order is deterministic (sorted insertion).
    """
    graph = nx.Graph()
    for muni in state.open_municipalities(on):
        graph.add_node(
            muni.id,
            kind="municipality",
            elevation=muni.elevation,
            latitude=muni.latitude,
            longitude=muni.longitude,
            province=muni.province,
        )
    for source in state.active_sources(on):
        graph.add_node(
            source.id,
            kind="source",
            source_type=source.source_type,
            elevation=source.elevation,
            latitude=source.latitude,
            longitude=source.longitude,
            connected_municipality=source.connected_municipality,
        )
    for conn in sorted(state.connections.values(), key=lambda c: c.id):
        if conn.hidden or conn.installed_pipe is None:
            continue
        if conn.node_a in graph.nodes and conn.node_b in graph.nodes:
            graph.add_edge(
                conn.node_a,
                conn.node_b,
                connection_id=conn.id,
                distance=conn.distance,
                option_id=conn.installed_pipe.option_id,
                friction=conn.installed_pipe.current_friction,
            )
    return graph
