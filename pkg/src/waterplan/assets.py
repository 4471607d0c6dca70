"""Physical asset catalogs and lifecycle: source cost models, pump options
with randomized lifetimes and automatic replacement, pipe options with
friction decay, randomized construction times, PV installations."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

from .scenario import ScenarioTrace

PV_LIFESPAN_YEARS = 25

#: Source size classes (annual volume, Mm3/year) used for cost lookups.
SIZE_CLASS_THRESHOLDS_MM3 = (30.0, 60.0)


class AssetError(ValueError):
    """Invalid asset data or operation."""


def source_size_class(nominal_capacity_m3_day: float) -> str:
    annual_mm3 = nominal_capacity_m3_day * 365.0 / 1e6
    if annual_mm3 < SIZE_CLASS_THRESHOLDS_MM3[0]:
        return "small"
    if annual_mm3 < SIZE_CLASS_THRESHOLDS_MM3[1]:
        return "medium"
    return "large"


@dataclass(frozen=True)
class SourceCostModel:
    """Yearly cost parameters for one source size class."""

    fixed_per_year: float  # €
    energy_intensity: float  # kWh/m3
    non_energy_rate: float  # €/m3
    over_target_multiplier: float  # >= 1, applied above the planned point
    unit_construction_cost: float  # €/(m3/day)

    def __post_init__(self) -> None:
        if min(self.fixed_per_year, self.energy_intensity, self.non_energy_rate,
               self.unit_construction_cost) < 0:
            raise AssetError("source cost components must be >= 0")
        if self.over_target_multiplier < 1.0:
            raise AssetError("over-target multiplier must be >= 1")


@dataclass(frozen=True)
class CostBreakdown:
    fixed: float
    energy: float
    non_energy: float
    extra: float

    @property
    def total(self) -> float:
        return self.fixed + self.energy + self.non_energy + self.extra


def production_cost(
    volume_day: float,
    nominal_capacity: float,
    target_factor: float,
    elec_price_per_kwh: float,
    model: SourceCostModel,
) -> CostBreakdown:
    """Daily production cost of one source.

    Fixed cost is prorated per day for reporting; the extra non-energy
    component applies only to volume above the planned operating point
    (nominal capacity x target factor).
    """
    if volume_day < 0:
        raise AssetError("volume must be >= 0")
    if volume_day > nominal_capacity + 1e-6:
        raise AssetError(
            f"daily volume {volume_day:.3f} exceeds nominal capacity {nominal_capacity:.3f}"
        )
    energy = volume_day * model.energy_intensity * elec_price_per_kwh
    non_energy = volume_day * model.non_energy_rate
    planned = nominal_capacity * target_factor
    extra = max(0.0, volume_day - planned) * model.non_energy_rate * (
        model.over_target_multiplier - 1.0
    )
    return CostBreakdown(
        fixed=model.fixed_per_year / 365.0,
        energy=energy,
        non_energy=non_energy,
        extra=extra,
    )


def check_groundwater_permit(
    annual_volume: float,
    permit: float,
    fine_schedule: list[tuple[float, float]],
) -> float:
    """End-of-year permit fine.

    ``fine_schedule`` holds (exceedance threshold m3, rate €/m3) severity
    bands sorted ascending; the band whose threshold the exceedance
    reaches sets the rate applied to the whole exceedance.
    """
    if permit <= 0:
        raise AssetError("permit must be > 0")
    exceedance = max(0.0, annual_volume - permit)
    if exceedance == 0:
        return 0.0
    rate = 0.0
    for threshold, band_rate in sorted(fine_schedule):
        if exceedance >= threshold:
            rate = band_rate
    return exceedance * rate


@dataclass(frozen=True)
class PumpOption:
    id: str
    head_curve: tuple[tuple[float, float], ...]  # (m3/h per unit, m)
    efficiency_curve: tuple[tuple[float, float], ...]
    lifetime_bounds: tuple[float, float]  # years
    unit_cost: float  # €

    def __post_init__(self) -> None:
        if len(self.head_curve) < 2 or len(self.efficiency_curve) < 2:
            raise AssetError(f"pump option {self.id!r}: curves need >= 2 points")
        if self.head_curve[0][0] != self.efficiency_curve[0][0] or (
            self.head_curve[-1][0] != self.efficiency_curve[-1][0]
        ):
            raise AssetError(f"pump option {self.id!r}: curve domains must match")
        if self.lifetime_bounds[0] <= 0 or self.lifetime_bounds[1] < self.lifetime_bounds[0]:
            raise AssetError(f"pump option {self.id!r}: bad lifetime bounds")
        if any(not 0 < e <= 1 for _, e in self.efficiency_curve):
            raise AssetError(f"pump option {self.id!r}: efficiencies must be in (0, 1]")


@dataclass(frozen=True)
class PipeOption:
    id: str
    diameter: float  # m
    material: str
    f_new: float
    decay_bounds: tuple[float, float]  # additive Darcy-f per year
    cost_per_m: float  # €, base-year
    emissions_t_per_m: float  # tCO2eq/m
    lifetime_years: float = 50.0

    def __post_init__(self) -> None:
        if self.f_new <= 0 or self.diameter <= 0:
            raise AssetError(f"pipe option {self.id!r}: diameter and friction must be > 0")
        if self.decay_bounds[0] < 0 or self.decay_bounds[1] < self.decay_bounds[0]:
            raise AssetError(f"pipe option {self.id!r}: bad decay bounds")
        if self.cost_per_m < 0 or self.emissions_t_per_m < 0:
            raise AssetError(f"pipe option {self.id!r}: cost/emissions must be >= 0")


def decay_pipe_friction(f_new: float, decay_rate: float, years_elapsed: float) -> float:
    """Linear additive aging of the Darcy factor; never decreasing."""
    if years_elapsed < 0 or decay_rate < 0:
        raise AssetError("years and decay rate must be >= 0")
    return f_new + decay_rate * years_elapsed


@dataclass(frozen=True)
class ConstructionSchedule:
    start_year: int
    activation_year: int
    capital_cost: float  # booked at start


def schedule_construction(
    entity_id: str,
    start_year: int,
    size_m3_day: float,
    time_bounds: tuple[int, int],
    unit_cost: float,
    trace: ScenarioTrace,
) -> ConstructionSchedule:
    """Randomized activation: start year plus a uniform integer-year draw
    inside the construction-time bounds; capex booked at the start."""
    lo, hi = time_bounds
    if lo < 0 or hi < lo:
        raise AssetError(f"bad construction-time bounds {time_bounds}")
    years = trace.realized_int(entity_id, "construction_time", lo, hi)
    return ConstructionSchedule(
        start_year=start_year,
        activation_year=start_year + years,
        capital_cost=unit_cost * size_m3_day,
    )


@dataclass(frozen=True)
class PumpReplacement:
    station_id: str
    unit_index: int
    year: int
    cost: float


def pump_unit_lifetime(trace: ScenarioTrace, station_id: str, unit_index: int,
                       install_year: int, option: PumpOption) -> float:
    """Realized lifetime of one unit, drawn once at install."""
    return trace.realized(
        f"{station_id}#{unit_index}@{install_year}",
        "pump_lifetime",
        option.lifetime_bounds[0],
        option.lifetime_bounds[1],
    )


@dataclass
class PumpFleetState:
    """Install years of each unit at one station, updated on replacement."""

    station_id: str
    option: PumpOption
    install_years: list[int] = field(default_factory=list)

    def age_to(self, year: int, trace: ScenarioTrace, unit_cost: float) -> list[PumpReplacement]:
        """Replace every unit past its realized end-of-life in ``year``.

        Replacements are identical units at the given current cost and
        keep the curves bit-exact; the cost is unplanned capex.
        """
        replacements: list[PumpReplacement] = []
        for k, installed in enumerate(self.install_years):
            life = pump_unit_lifetime(trace, self.station_id, k, installed, self.option)
            if year - installed >= life:
                replacements.append(
                    PumpReplacement(self.station_id, k, year, unit_cost)
                )
                self.install_years[k] = year
        return replacements


def pv_active(install_date: dt.date, on: dt.date) -> bool:
    """PV panels retire exactly 25 years after installation."""
    retire = dt.date(install_date.year + PV_LIFESPAN_YEARS, install_date.month, install_date.day)
    return install_date <= on < retire
