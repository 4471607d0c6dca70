import datetime as dt

import pytest

from waterplan.domain import (
    Connection,
    DomainError,
    LifecycleError,
    Municipality,
    PipeInstance,
    WaterSource,
    WorldState,
    apply_absorb,
    apply_cluster,
    visible_network,
)

JAN1 = dt.date(2030, 1, 1)


def muni(mid, pop=10_000.0, km=50.0, age=30.0, province="north", begin=dt.date(2000, 1, 1)):
    return Municipality(
        id=mid, name=mid, latitude=52.0, longitude=4.5, elevation=2.0,
        province=province, begin_date=begin, population=pop,
        houses=pop / 2.2, businesses=pop / 18.0,
        dist_net_length=km, dist_net_avg_age=age,
    )


def source(sid, muni_id="A", stype="groundwater", capacity=1000.0, permit=None):
    return WaterSource(
        id=sid, source_type=stype, latitude=52.0, longitude=4.5, elevation=1.0,
        province="north", connected_municipality=muni_id,
        activation_date=dt.date(2010, 1, 1), nominal_capacity=capacity,
        target_factor=0.8,
        permit=permit if stype == "groundwater" else None,
        max_capacity=None if stype == "groundwater" else capacity * 1.5,
    )


class TestEntities:
    def test_dates_must_be_january_first(self):
        with pytest.raises(DomainError):
            muni("A", begin=dt.date(2000, 3, 1))

    def test_groundwater_permit_headroom_boundary(self):
        # Exactly 30% above the permit figure is accepted; more is not.
        source("S", capacity=1.3 * 1000.0, permit=1000.0)
        with pytest.raises(DomainError):
            source("S", capacity=1.31 * 1000.0, permit=1000.0)

    def test_surface_needs_max_capacity(self):
        with pytest.raises(DomainError):
            WaterSource(
                id="S", source_type="surface", latitude=0, longitude=0, elevation=0,
                province="north", connected_municipality="A",
                activation_date=dt.date(2010, 1, 1), nominal_capacity=10.0,
                target_factor=0.8,
            )

    def test_connection_minor_loss_fixed_at_zero(self):
        with pytest.raises(DomainError):
            Connection(id="C", node_a="A", node_b="B", kind="intra-province",
                       distance=100.0, minor_loss=0.5)
        with pytest.raises(DomainError):
            Connection(id="C", node_a="A", node_b="B", kind="intra-province",
                       distance=0.0)

    def test_open_interval(self):
        m = muni("A")
        m.end_date = dt.date(2035, 1, 1)
        assert m.is_open(dt.date(2034, 12, 31))
        assert not m.is_open(dt.date(2035, 1, 1))


def two_town_state():
    state = WorldState()
    state.municipalities = {"A": muni("A", pop=10_000, km=40.0, age=20.0),
                            "B": muni("B", pop=30_000, km=60.0, age=50.0),
                            "C": muni("C", pop=5_000, km=10.0, age=40.0)}
    pipe = PipeInstance("P500", dt.date(2010, 1, 1), 0.016)
    state.connections = {
        "AB": Connection("AB", "A", "B", "intra-province", 5_000.0, installed_pipe=pipe),
        "BC": Connection("BC", "B", "C", "intra-province", 4_000.0,
                         installed_pipe=PipeInstance("P500", dt.date(2010, 1, 1), 0.016)),
        "AC": Connection("AC", "A", "C", "intra-province", 7_000.0,
                         installed_pipe=PipeInstance("P300", dt.date(2015, 1, 1), 0.018)),
    }
    return state


class TestAbsorb:
    def test_merges_and_repoints(self):
        state = two_town_state()
        apply_absorb(state, "C", "B", JAN1)
        b = state.municipalities["B"]
        assert b.population == 35_000
        # Length-weighted age merge: (60*50 + 10*40) / 70
        assert b.dist_net_avg_age == pytest.approx((60 * 50 + 10 * 40) / 70)
        c = state.municipalities["C"]
        assert c.end_date == JAN1
        assert c.end_disposition == ("absorbed-into", "B")
        # BC collapsed into B (internal); AC now runs A-B but duplicates AB.
        assert state.connections["BC"].hidden
        assert state.connections["AC"].hidden
        assert not state.connections["AB"].hidden

    def test_preconditions(self):
        state = two_town_state()
        with pytest.raises(LifecycleError):
            apply_absorb(state, "C", "B", dt.date(2030, 6, 1))
        with pytest.raises(LifecycleError):
            apply_absorb(state, "X", "B", JAN1)
        apply_absorb(state, "C", "B", JAN1)
        with pytest.raises(LifecycleError):  # already closed
            apply_absorb(state, "C", "B", dt.date(2031, 1, 1))


class TestCluster:
    def test_successor_collects_constituents(self):
        state = two_town_state()
        new = muni("NEW", pop=0.0, km=0.0, age=0.0, begin=JAN1)
        new.houses = new.businesses = 0.0
        state.municipalities["NEW"] = new
        apply_cluster(state, ["A", "B"], "NEW", JAN1)
        assert new.population == 40_000
        assert new.dist_net_length == 100.0
        assert state.municipalities["A"].end_disposition == ("clustered-into", "NEW")
        # AB became internal; AC (first by id) now reaches NEW and BC is a
        # hidden duplicate of the same pair.
        assert state.connections["AB"].hidden
        ends = {state.connections["AC"].node_a, state.connections["AC"].node_b}
        assert ends == {"NEW", "C"}
        assert state.connections["BC"].hidden

    def test_needs_two_and_matching_begin_date(self):
        state = two_town_state()
        with pytest.raises(LifecycleError):
            apply_cluster(state, ["A"], "B", JAN1)
        late = muni("NEW", begin=dt.date(2031, 1, 1))
        state.municipalities["NEW"] = late
        with pytest.raises(LifecycleError):
            apply_cluster(state, ["A", "B"], "NEW", JAN1)


class TestVisibleNetwork:
    def test_nodes_edges_and_exclusions(self):
        state = two_town_state()
        state.sources = {"S0": source("S0", permit=1000.0)}
        state.connections["S0A"] = Connection(
            "S0A", "S0", "A", "intra-province", 1_000.0,
            installed_pipe=PipeInstance("P800", dt.date(2010, 1, 1), 0.015),
        )
        state.connections["SPARE"] = Connection("SPARE", "A", "B", "intra-province", 9_000.0)
        graph = visible_network(state, JAN1)
        assert set(graph.nodes) == {"A", "B", "C", "S0"}
        assert graph.nodes["S0"]["kind"] == "source"
        assert graph.number_of_edges() == 4  # SPARE has no pipe
        apply_absorb(state, "C", "B", JAN1)
        after = visible_network(state, JAN1)
        assert "C" not in after.nodes
        assert after.number_of_edges() == 2  # AB + feeder survive
