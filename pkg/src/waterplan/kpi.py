"""Evaluation metrics: annualized cost, GHG emissions, service reliability
and affordability fairness, sliceable over utility, municipality and time."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KG_PER_TONNE = 1000.0


class KpiError(ValueError):
    """Invalid KPI input."""


@dataclass(frozen=True)
class AssetCharge:
    """A capitalized intervention annualized straight-line over its life."""

    capex: float  # €
    lifetime_years: float
    start_year: int

    def __post_init__(self) -> None:
        if self.lifetime_years <= 0:
            raise KpiError("asset lifetime must be > 0")

    def annual_charge(self, year: int) -> float:
        """Charged for exactly ``lifetime_years`` years from commissioning."""
        if self.start_year <= year < self.start_year + self.lifetime_years:
            return self.capex / self.lifetime_years
        return 0.0


@dataclass(frozen=True)
class BondCharge:
    principal: float  # €
    coupon: float  # rate, e.g. 0.04
    issue_year: int
    maturity_years: int

    def annual_interest(self, year: int) -> float:
        if self.issue_year < year <= self.issue_year + self.maturity_years:
            return self.coupon * self.principal
        return 0.0


def tac_year(assets: list[AssetCharge], opex: float, bonds: list[BondCharge], year: int) -> float:
    """Total annualized cost for one year: annualized capex + opex + coupons."""
    capex_part = sum(a.annual_charge(year) for a in assets)
    interest = sum(b.annual_interest(year) for b in bonds)
    return capex_part + opex + interest


def tac(
    assets: list[AssetCharge],
    opex_by_year: dict[int, float],
    bonds: list[BondCharge],
) -> dict[int, float]:
    """Per-year TAC over every year with recorded opex."""
    return {
        year: tac_year(assets, opex, bonds, year)
        for year, opex in sorted(opex_by_year.items())
    }


@dataclass(frozen=True)
class EmbeddedEmission:
    """Embedded emissions of an intervention, annualized over its life."""

    emissions_t: float  # tCO2eq total
    lifetime_years: float
    start_year: int

    def annual_emissions(self, year: int) -> float:
        if self.start_year <= year < self.start_year + self.lifetime_years:
            return self.emissions_t / self.lifetime_years
        return 0.0


def ghg_operational(energy_kwh: np.ndarray, ef_kg_per_kwh: np.ndarray | float) -> float:
    """Operational emissions in tCO2eq from pumping energy."""
    energy_kwh = np.asarray(energy_kwh, dtype=float)
    ef = np.broadcast_to(np.asarray(ef_kg_per_kwh, dtype=float), energy_kwh.shape)
    if np.any(ef < 0):
        raise KpiError("emission factors must be >= 0")
    return float(np.sum(energy_kwh * ef) / KG_PER_TONNE)


def ghg(
    embedded: list[EmbeddedEmission],
    energy_kwh: np.ndarray,
    ef_kg_per_kwh: np.ndarray | float,
    year: int | None = None,
) -> float:
    """Embedded (annualized) + operational emissions, tCO2eq.

    With ``year`` given, the embedded term covers that year only; otherwise
    it sums each asset's full annualized schedule implied by the energy span.
    """
    op = ghg_operational(energy_kwh, ef_kg_per_kwh)
    if year is not None:
        emb = sum(e.annual_emissions(year) for e in embedded)
    else:
        emb = sum(e.emissions_t for e in embedded)
    return emb + op


def reliability(demand: np.ndarray, delivered: np.ndarray) -> float | None:
    """1 - sum(undelivered) / sum(demand) over the slice; None if no demand.

    Undelivered is clamped at 0, so over-delivery never pushes the value
    above 1.
    """
    demand = np.asarray(demand, dtype=float)
    delivered = np.asarray(delivered, dtype=float)
    total_d = float(np.sum(demand))
    if total_d <= 0:
        return None
    undelivered = np.maximum(demand - delivered, 0.0)
    return 1.0 - float(np.sum(undelivered)) / total_d


def percentile_income_p20(incomes: list[float]) -> float:
    """20th-percentile monthly income, nearest-rank method."""
    if not incomes:
        raise KpiError("need at least one income value")
    ordered = sorted(incomes)
    rank = max(1, math.ceil(0.20 * len(ordered)))
    return ordered[rank - 1]


def affordability(
    volumetric_tariff: float,
    fixed_monthly: float,
    lifeline_m3_month: float,
    income_p20_month: float,
) -> float:
    """Water bill for a lifeline volume as a % of low-quintile income."""
    if income_p20_month <= 0:
        raise KpiError("20th-percentile income must be > 0")
    bill = volumetric_tariff * lifeline_m3_month + fixed_monthly
    return bill / income_p20_month * 100.0


@dataclass
class KpiReport:
    """The four metrics for one slice of a run."""

    slice_id: str
    tac_eur: float
    ghg_t: float
    reliability: float | None
    affordability_pct: float | None
    extras: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "slice": self.slice_id,
            "tac_eur": self.tac_eur,
            "ghg_t": self.ghg_t,
            "reliability": self.reliability,
            "affordability_pct": self.affordability_pct,
            **({"extras": self.extras} if self.extras else {}),
        }
