import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waterplan.economy import coupon_rate
from waterplan.kpi import (
    AssetCharge,
    BondCharge,
    EmbeddedEmission,
    KpiError,
    affordability,
    ghg,
    ghg_operational,
    percentile_income_p20,
    reliability,
    tac,
    tac_year,
)


class TestAnnualizedCost:
    def test_straight_line_charge_window(self):
        charge = AssetCharge(capex=1000.0, lifetime_years=10, start_year=0)
        assert charge.annual_charge(0) == 100.0
        assert charge.annual_charge(9) == 100.0
        assert charge.annual_charge(10) == 0.0
        assert charge.annual_charge(-1) == 0.0

    def test_bond_interest_window(self):
        bond = BondCharge(principal=200.0, coupon=0.04, issue_year=0, maturity_years=20)
        assert bond.annual_interest(0) == 0.0  # first coupon a year after issue
        assert bond.annual_interest(1) == pytest.approx(8.0)
        assert bond.annual_interest(20) == pytest.approx(8.0)
        assert bond.annual_interest(21) == 0.0

    def test_tac_fixture(self):
        # 1000/10 + 50 + 0.04 x 200 = 158
        assets = [AssetCharge(1000.0, 10, 0)]
        bonds = [BondCharge(200.0, 0.04, 0, 20)]
        assert tac_year(assets, 50.0, bonds, 1) == pytest.approx(158.0)

    def test_tac_series_covers_opex_years(self):
        assets = [AssetCharge(1000.0, 10, 0)]
        series = tac(assets, {0: 5.0, 1: 7.0}, [])
        assert series == {0: 105.0, 1: 107.0}

    def test_bad_lifetime_rejected(self):
        with pytest.raises(KpiError):
            AssetCharge(100.0, 0, 0)


class TestCoupon:
    def test_fixture_values(self):
        assert coupon_rate(0.03, 0.01, 0.02, 0.8) == pytest.approx(0.044)
        assert coupon_rate(0.03, 0.01, 0.02, 1.2) == pytest.approx(0.036)
        assert coupon_rate(0.03, 0.01, 0.02, 1.0) == pytest.approx(0.04)


class TestEmissions:
    def test_operational_unit_conversion(self):
        assert ghg_operational(np.array([1000.0]), 0.5) == pytest.approx(0.5)

    def test_embedded_annualized_window(self):
        emb = EmbeddedEmission(emissions_t=50.0, lifetime_years=25, start_year=3)
        assert emb.annual_emissions(3) == pytest.approx(2.0)
        assert emb.annual_emissions(27) == pytest.approx(2.0)
        assert emb.annual_emissions(28) == 0.0

    def test_combined_for_one_year(self):
        emb = [EmbeddedEmission(50.0, 25, 0)]
        total = ghg(emb, np.array([2000.0]), 0.25, year=0)
        assert total == pytest.approx(2.0 + 0.5)

    def test_negative_factor_rejected(self):
        with pytest.raises(KpiError):
            ghg_operational(np.array([1.0]), -0.1)


class TestReliability:
    def test_fixture(self):
        assert reliability(np.array([100.0]), np.array([80.0])) == pytest.approx(0.8)

    def test_no_demand_is_not_applicable(self):
        assert reliability(np.zeros(5), np.zeros(5)) is None

    def test_overdelivery_clamped(self):
        assert reliability(np.array([10.0, 10.0]), np.array([15.0, 10.0])) == 1.0

    @given(
        st.lists(st.floats(0.0, 1e6), min_size=2, max_size=40),
        st.data(),
    )
    def test_slice_consistency(self, demand, data):
        # The combined metric must equal the demand-weighted merge of any
        # two-way split: undelivered volumes are additive.
        delivered = [
            data.draw(st.floats(0.0, d if d > 0 else 1.0)) for d in demand
        ]
        cut = data.draw(st.integers(1, len(demand) - 1))
        d, q = np.asarray(demand), np.asarray(delivered)
        whole = reliability(d, q)
        u_left = np.maximum(d[:cut] - q[:cut], 0).sum()
        u_right = np.maximum(d[cut:] - q[cut:], 0).sum()
        if whole is None:
            assert d.sum() == 0
        else:
            merged = 1.0 - (u_left + u_right) / d.sum()
            assert whole == pytest.approx(merged, abs=1e-9)


class TestAffordability:
    def test_fixture(self):
        # (1 x 4.5 + 10) / 1500 x 100 = 0.9667 %
        assert affordability(1.0, 10.0, 4.5, 1500.0) == pytest.approx(0.9667, abs=1e-4)

    def test_nearest_rank_p20(self):
        assert percentile_income_p20([500, 100, 300, 200, 400]) == 100
        assert percentile_income_p20(list(range(1, 11))) == 2
        assert percentile_income_p20([1234.0]) == 1234.0

    def test_empty_and_zero_income_rejected(self):
        with pytest.raises(KpiError):
            percentile_income_p20([])
        with pytest.raises(KpiError):
            affordability(1.0, 1.0, 1.0, 0.0)
