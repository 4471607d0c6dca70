"""Economic machinery: budget allocation, automatic bond issuance,
tariff revenue, inflation compounding and hourly electricity pricing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EconomyError(ValueError):
    """Invalid economic input or rule."""


ALLOCATION_RULES = ("per_capita", "inverse_population", "income_based", "equity", "custom")


def allocate_budget(
    national_total: float,
    rule: str,
    populations: dict[str, float],
    income_index: dict[str, float] | None = None,
    custom_weights: dict[str, float] | None = None,
) -> dict[str, float]:
    """Split the national budget across utilities by the chosen rule.

    Shares are normalized to sum to the total exactly, settled on whole
    cents by largest remainder.
    """
    ids = sorted(populations)
    if rule == "per_capita":
        weights = [populations[i] for i in ids]
    elif rule == "inverse_population":
        if any(populations[i] <= 0 for i in ids):
            raise EconomyError("inverse_population requires positive populations")
        weights = [1.0 / populations[i] for i in ids]
    elif rule == "income_based":
        if income_index is None:
            raise EconomyError("income_based rule needs an income index")
        weights = [income_index[i] for i in ids]
    elif rule == "equity":
        if income_index is None:
            raise EconomyError("equity rule needs an income index")
        if any(income_index[i] <= 0 for i in ids):
            raise EconomyError("equity rule requires positive income indices")
        weights = [1.0 / income_index[i] for i in ids]
    elif rule == "custom":
        if custom_weights is None:
            raise EconomyError("custom rule needs a weight vector")
        weights = [custom_weights[i] for i in ids]
        if abs(sum(weights) - 1.0) > 1e-9:
            raise EconomyError("custom weights must sum to 1")
    else:
        raise EconomyError(f"unknown allocation rule {rule!r}")

    total_w = sum(weights)
    if total_w <= 0:
        raise EconomyError("allocation weights sum to zero")

    total_cents = round(national_total * 100)
    raw = [total_cents * w / total_w for w in weights]
    floors = [int(x) for x in raw]
    shortfall = total_cents - sum(floors)
    # Largest remainder, deterministic tie-break on id.
    order = sorted(range(len(ids)), key=lambda k: (-(raw[k] - floors[k]), ids[k]))
    for k in order[:shortfall]:
        floors[k] += 1
    return {i: floors[k] / 100.0 for k, i in enumerate(ids)}


@dataclass(frozen=True)
class BondTerms:
    principal: float
    coupon: float
    issue_year: int
    maturity_years: int

    @property
    def issue_price(self) -> float:
        # Par issuance: no pricing curve is modelled.
        return self.principal


def coupon_rate(risk_free: float, credit_spread: float, demand_sensitivity: float, investor_demand: float) -> float:
    """Coupon of an issued bond from market conditions and investor demand."""
    if not 0.8 <= investor_demand <= 1.2:
        raise EconomyError("investor demand factor must lie in [0.8, 1.2]")
    return risk_free + credit_spread + demand_sensitivity * (1.0 - investor_demand)


def issue_bond_if_needed(
    shortfall: float,
    risk_free: float,
    credit_spread: float,
    demand_sensitivity: float,
    investor_demand: float,
    issue_year: int,
    maturity_years: int = 20,
) -> BondTerms | None:
    """Automatically issue a bond covering a budget shortfall, or nothing."""
    if shortfall < 0:
        raise EconomyError("shortfall must be >= 0")
    if shortfall == 0:
        return None
    rate = coupon_rate(risk_free, credit_spread, demand_sensitivity, investor_demand)
    return BondTerms(
        principal=shortfall,
        coupon=rate,
        issue_year=issue_year,
        maturity_years=maturity_years,
    )


def tariff_revenue(
    delivered_m3: float,
    households: float,
    fixed_monthly: float,
    volumetric: float,
) -> float:
    """Annual revenue: fixed service charges plus billing of delivered water."""
    if delivered_m3 < 0 or households < 0:
        raise EconomyError("volumes and household counts must be >= 0")
    return households * fixed_monthly * 12.0 + delivered_m3 * volumetric


def escalate(value: float, inflation_path: np.ndarray, from_year: int, to_year: int, base_year: int) -> float:
    """Compound a nominal value across years of the inflation path.

    ``inflation_path[k]`` is the rate applied during ``base_year + k``.
    """
    if to_year < from_year:
        raise EconomyError("to_year must be >= from_year")
    i0, i1 = from_year - base_year, to_year - base_year
    if i0 < 0 or i1 > len(inflation_path):
        raise EconomyError("inflation path does not cover the interval")
    factor = float(np.prod(1.0 + np.asarray(inflation_path[i0:i1], dtype=float)))
    return value * factor


def hourly_electricity_price(yearly_level: float, daily_shape: np.ndarray, hour: int) -> float:
    """Price for one hour: yearly level times the mean-1 daily shape."""
    daily_shape = np.asarray(daily_shape, dtype=float)
    if daily_shape.shape != (24,):
        raise EconomyError("daily shape must have 24 values")
    if abs(daily_shape.mean() - 1.0) > 1e-6:
        raise EconomyError("daily shape must have mean 1")
    return yearly_level * float(daily_shape[hour])


@dataclass
class YearLedger:
    """One utility-year of the economic ledger."""

    allocated: float = 0.0
    capex: float = 0.0
    opex: float = 0.0
    revenue: float = 0.0
    fines: float = 0.0
    interest_paid: float = 0.0
    bond_issued: float = 0.0
    remaining: float = 0.0

    def settle(self) -> float:
        """Balance before bond coverage; negative means a shortfall."""
        return (
            self.allocated
            + self.revenue
            - self.capex
            - self.opex
            - self.fines
            - self.interest_paid
        )


@dataclass
class EconomicLedger:
    """Per-utility ledgers plus outstanding bonds."""

    utility_id: str
    years: dict[int, YearLedger] = field(default_factory=dict)
    bonds: list[BondTerms] = field(default_factory=list)

    def year(self, y: int) -> YearLedger:
        return self.years.setdefault(y, YearLedger())

    def interest_due(self, y: int) -> float:
        due = 0.0
        for b in self.bonds:
            if b.issue_year < y <= b.issue_year + b.maturity_years:
                due += b.coupon * b.principal
        return due

    def close_year(
        self,
        y: int,
        market: tuple[float, float, float, float],
        maturity_years: int = 20,
    ) -> BondTerms | None:
        """Settle a year: pay interest, cover any shortfall with a new bond."""
        ledger = self.year(y)
        ledger.interest_paid = self.interest_due(y)
        balance = ledger.settle()
        bond = None
        if balance < 0:
            rf, cs, a, d = market
            bond = issue_bond_if_needed(-balance, rf, cs, a, d, y, maturity_years)
            self.bonds.append(bond)
            ledger.bond_issued = bond.principal
            ledger.remaining = 0.0
        else:
            ledger.remaining = balance
        return bond
