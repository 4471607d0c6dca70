import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waterplan.economy import (
    EconomicLedger,
    EconomyError,
    allocate_budget,
    coupon_rate,
    escalate,
    hourly_electricity_price,
    issue_bond_if_needed,
    tariff_revenue,
)


class TestAllocation:
    def test_per_capita_fixture(self):
        shares = allocate_budget(100.0, "per_capita", {"a": 1000, "b": 3000})
        assert shares == {"a": 25.0, "b": 75.0}

    def test_inverse_population(self):
        shares = allocate_budget(100.0, "inverse_population", {"a": 1000, "b": 3000})
        assert shares == {"a": 75.0, "b": 25.0}

    def test_income_and_equity(self):
        pops = {"a": 1.0, "b": 1.0}
        income = {"a": 1000.0, "b": 3000.0}
        rich_first = allocate_budget(100.0, "income_based", pops, income_index=income)
        poor_first = allocate_budget(100.0, "equity", pops, income_index=income)
        assert rich_first["b"] == 75.0
        assert poor_first["a"] == 75.0

    def test_custom_weights_must_sum_to_one(self):
        with pytest.raises(EconomyError):
            allocate_budget(10.0, "custom", {"a": 1, "b": 1}, custom_weights={"a": 0.6, "b": 0.6})
        shares = allocate_budget(10.0, "custom", {"a": 1, "b": 1}, custom_weights={"a": 0.3, "b": 0.7})
        assert shares == {"a": 3.0, "b": 7.0}

    def test_deterministic_cent_tiebreak(self):
        # One cent, two equal claims: the lexicographically first id wins.
        shares = allocate_budget(0.01, "per_capita", {"b": 10, "a": 10})
        assert shares == {"a": 0.01, "b": 0.0}

    def test_unknown_rule_rejected(self):
        with pytest.raises(EconomyError):
            allocate_budget(1.0, "fanciest_office", {"a": 1})

    @given(
        st.dictionaries(
            st.text(alphabet="abcdefgh", min_size=1, max_size=3),
            st.floats(1.0, 1e7),
            min_size=1,
            max_size=8,
        ),
        st.floats(0.0, 1e9),
    )
    def test_cent_conservation(self, populations, total):
        shares = allocate_budget(total, "per_capita", populations)
        # Settled on whole cents and conserved exactly.
        assert sum(round(v * 100) for v in shares.values()) == round(total * 100)
        assert all(v >= 0 for v in shares.values())


class TestBonds:
    def test_zero_shortfall_issues_nothing(self):
        assert issue_bond_if_needed(0.0, 0.03, 0.01, 0.02, 1.0, 5) is None

    def test_terms_and_par_issue(self):
        bond = issue_bond_if_needed(1_000.0, 0.03, 0.01, 0.02, 0.8, 5)
        assert bond.principal == 1_000.0
        assert bond.coupon == pytest.approx(0.044)
        assert bond.issue_price == bond.principal
        assert bond.maturity_years == 20

    def test_investor_demand_bounds(self):
        with pytest.raises(EconomyError):
            coupon_rate(0.03, 0.01, 0.02, 0.79)
        with pytest.raises(EconomyError):
            issue_bond_if_needed(-1.0, 0.03, 0.01, 0.02, 1.0, 0)


class TestTariffs:
    def test_revenue_formula(self):
        assert tariff_revenue(1000.0, 100, 8.0, 1.45) == pytest.approx(
            100 * 8.0 * 12 + 1000.0 * 1.45
        )

    def test_negative_inputs_rejected(self):
        with pytest.raises(EconomyError):
            tariff_revenue(-1.0, 0, 0.0, 0.0)


class TestInflation:
    def test_compounding(self):
        path = np.array([0.02, 0.03, 0.01])
        assert escalate(100.0, path, 2030, 2032, 2030) == pytest.approx(100 * 1.02 * 1.03)
        assert escalate(100.0, path, 2031, 2031, 2030) == 100.0

    def test_interval_must_be_covered(self):
        path = np.array([0.02])
        with pytest.raises(EconomyError):
            escalate(1.0, path, 2030, 2032, 2030)
        with pytest.raises(EconomyError):
            escalate(1.0, path, 2031, 2030, 2030)


class TestElectricity:
    def test_hourly_price(self):
        shape = np.ones(24)
        shape[12] = 1.5
        shape[0] = 0.5
        assert abs(shape.mean() - 1.0) < 1e-12
        assert hourly_electricity_price(0.2, shape, 12) == pytest.approx(0.3)

    def test_shape_must_have_mean_one(self):
        with pytest.raises(EconomyError):
            hourly_electricity_price(0.2, np.full(24, 1.1), 0)
        with pytest.raises(EconomyError):
            hourly_electricity_price(0.2, np.ones(23), 0)


class TestLedger:
    MARKET = (0.03, 0.01, 0.02, 1.0)  # coupon 0.04

    def test_shortfall_covered_by_bond(self):
        ledger = EconomicLedger("WU")
        year = ledger.year(0)
        year.allocated, year.capex = 100.0, 150.0
        bond = ledger.close_year(0, self.MARKET)
        assert bond.principal == pytest.approx(50.0)
        assert year.bond_issued == pytest.approx(50.0)
        assert year.remaining == 0.0
        # Interest starts the following year and carries forward.
        assert ledger.interest_due(1) == pytest.approx(2.0)
        year1 = ledger.year(1)
        year1.allocated = 10.0
        assert ledger.close_year(1, self.MARKET) is None
        assert year1.interest_paid == pytest.approx(2.0)
        assert year1.remaining == pytest.approx(8.0)

    def test_surplus_keeps_remaining(self):
        ledger = EconomicLedger("WU")
        year = ledger.year(0)
        year.allocated, year.revenue, year.opex = 50.0, 20.0, 30.0
        assert ledger.close_year(0, self.MARKET) is None
        assert year.remaining == pytest.approx(40.0)

    def test_ledger_identity(self):
        # settle == allocated + revenue - capex - opex - fines - interest
        ledger = EconomicLedger("WU")
        y = ledger.year(0)
        y.allocated, y.revenue, y.capex, y.opex, y.fines = 10, 4, 3, 2, 1
        y.interest_paid = 0.5
        assert y.settle() == pytest.approx(10 + 4 - 3 - 2 - 1 - 0.5)
