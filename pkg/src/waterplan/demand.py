"""Hourly billable demand generation.

Three phases per municipality-year: annual volumes calibrated to a
national total, profile assignment from a normalized year-long library,
and Fourier-modulated hourly series scaled back to the annual volumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

HOURS_PER_YEAR = 8760
DAYS_PER_YEAR = 365

POP_CLASS_THRESHOLDS = (20_000, 100_000)
POP_CLASSES = ("small", "medium", "large")

#: Summer window (day-of-year, inclusive) for the climate adjustment.
SUMMER_DAYS = (151, 242)


class DemandError(ValueError):
    """Invalid demand-model input."""


def population_class(population: float) -> str:
    if population < POP_CLASS_THRESHOLDS[0]:
        return "small"
    if population < POP_CLASS_THRESHOLDS[1]:
        return "medium"
    return "large"


def _normalize(profile: np.ndarray) -> np.ndarray:
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (HOURS_PER_YEAR,):
        raise DemandError(f"profiles need {HOURS_PER_YEAR} samples")
    if np.any(profile < 0):
        raise DemandError("profiles must be non-negative")
    mean = profile.mean()
    if mean <= 0:
        raise DemandError("profile mean must be positive")
    return profile / mean


@dataclass
class ProfileLibrary:
    """Normalized (mean 1) year-long hourly profiles.

    Residential profiles are bucketed by population class; non-residential
    profiles form a single dedicated set.
    """

    residential: dict[str, list[np.ndarray]] = field(default_factory=dict)
    non_residential: list[np.ndarray] = field(default_factory=list)

    def add_residential(self, pop_class: str, profile: np.ndarray) -> None:
        self.residential.setdefault(pop_class, []).append(_normalize(profile))

    def add_non_residential(self, profile: np.ndarray) -> None:
        self.non_residential.append(_normalize(profile))


def synthetic_library(profiles_per_class: int = 4) -> ProfileLibrary:
    """Parametric stand-in library: double-peak residential days and a
    working-hours plateau for non-residential use."""
    lib = ProfileLibrary()
    hours = np.arange(24)
    for cls_idx, cls in enumerate(POP_CLASSES):
        for k in range(profiles_per_class):
            am_peak = 7.0 + 0.5 * k + 0.2 * cls_idx
            pm_peak = 19.0 - 0.3 * k
            day = (
                0.55
                + 0.85 * np.exp(-0.5 * ((hours - am_peak) / 1.8) ** 2)
                + 1.05 * np.exp(-0.5 * ((hours - pm_peak) / 2.4) ** 2)
            )
            year = np.tile(day, DAYS_PER_YEAR)
            # Mild weekend lift, fixed pattern per profile.
            dow = np.repeat(np.arange(DAYS_PER_YEAR) % 7, 24)
            year = year * np.where(dow >= 5, 1.08 + 0.01 * k, 1.0)
            lib.add_residential(cls, year)
    for k in range(profiles_per_class):
        day = np.where((hours >= 7 + k % 2) & (hours < 18), 1.6, 0.35)
        lib.add_non_residential(np.tile(day, DAYS_PER_YEAR).astype(float))
    return lib


def write_library(lib: ProfileLibrary, path: str) -> None:
    """Columnar text: one header line of profile names, 8760 value rows."""
    names: list[str] = []
    cols: list[np.ndarray] = []
    for cls in sorted(lib.residential):
        for i, prof in enumerate(lib.residential[cls]):
            names.append(f"res:{cls}:{i}")
            cols.append(prof)
    for i, prof in enumerate(lib.non_residential):
        names.append(f"nonres::{i}")
        cols.append(prof)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(" ".join(names) + "\n")
        data = np.column_stack(cols)
        for row in data:
            fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")


def read_library(path: str) -> ProfileLibrary:
    with open(path, encoding="utf-8") as fh:
        names = fh.readline().split()
        data = np.loadtxt(fh)
    if data.shape != (HOURS_PER_YEAR, len(names)):
        raise DemandError(
            f"library file must have {HOURS_PER_YEAR} rows x {len(names)} columns"
        )
    lib = ProfileLibrary()
    for k, name in enumerate(names):
        kind, cls, _ = name.split(":")
        if kind == "res":
            lib.add_residential(cls, data[:, k])
        elif kind == "nonres":
            lib.add_non_residential(data[:, k])
        else:
            raise DemandError(f"unknown profile kind {kind!r} in {name!r}")
    return lib


@dataclass(frozen=True)
class MuniDemandDrivers:
    muni_id: str
    houses: float
    businesses: float
    per_house_m3_day: float
    per_business_m3_day: float
    population: float


@dataclass
class AnnualVolumePlan:
    """Calibrated + perturbed annual volumes (m3) per municipality."""

    household: dict[str, float]
    business: dict[str, float]
    calibration_factor: float

    def total(self, muni_id: str) -> float:
        return self.household[muni_id] + self.business[muni_id]


def phase1_annual_volumes(
    drivers: list[MuniDemandDrivers],
    national_target: float,
    rng,
    sigma: float = 0.05,
) -> AnnualVolumePlan:
    """Annual volumes: raw from unit demands, calibrated nationally, then
    lognormally perturbed per municipality with the national total preserved.

    ``rng`` is either a Generator shared across municipalities or a callable
    mapping a municipality id to its own Generator; the callable form keeps
    municipalities statistically isolated from each other.
    """
    if national_target <= 0:
        raise DemandError("national target must be > 0")
    raw_h = {d.muni_id: d.houses * d.per_house_m3_day * DAYS_PER_YEAR for d in drivers}
    raw_b = {d.muni_id: d.businesses * d.per_business_m3_day * DAYS_PER_YEAR for d in drivers}
    raw_total = sum(raw_h.values()) + sum(raw_b.values())
    if raw_total <= 0:
        raise DemandError("national raw volume is zero; nothing to calibrate")
    factor = national_target / raw_total
    household = {m: v * factor for m, v in raw_h.items()}
    business = {m: v * factor for m, v in raw_b.items()}
    if sigma > 0:
        # One multiplicative draw per municipality, order fixed by input list.
        perturb = {
            d.muni_id: float(
                np.exp((rng(d.muni_id) if callable(rng) else rng).normal(0.0, sigma))
            )
            for d in drivers
        }
        household = {m: v * perturb[m] for m, v in household.items()}
        business = {m: v * perturb[m] for m, v in business.items()}
        scale = national_target / (sum(household.values()) + sum(business.values()))
        household = {m: v * scale for m, v in household.items()}
        business = {m: v * scale for m, v in business.items()}
    return AnnualVolumePlan(household=household, business=business, calibration_factor=factor)


def phase2_assign_profiles(
    population: float,
    library: ProfileLibrary,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pick two distinct residential profiles for the municipality's
    population class and one non-residential profile."""
    cls = population_class(population)
    bucket = library.residential.get(cls, [])
    if len(bucket) < 2:
        raise DemandError(f"profile library has < 2 residential profiles for class {cls!r}")
    if not library.non_residential:
        raise DemandError("profile library has no non-residential profiles")
    ia, ib = rng.choice(len(bucket), size=2, replace=False)
    inr = int(rng.integers(len(library.non_residential)))
    return bucket[int(ia)], bucket[int(ib)], library.non_residential[inr]


@dataclass(frozen=True)
class ModulationParams:
    fourier_coefficients: tuple[float, ...] = (0.10, 0.02)
    peak_day: int = 200  # mid-July
    climate_coefficient: float = 0.01  # per °C above reference
    reference_tmax: float = 25.0
    noise_sigma: float = 0.03
    noise_phi: float = 0.8


@dataclass
class DemandSeries:
    muni_id: str
    year: int
    samples: np.ndarray  # m3/h, 8760
    residential: np.ndarray
    non_residential: np.ndarray


def _seasonal_factors(params: ModulationParams, tmax: float) -> np.ndarray:
    days = np.arange(DAYS_PER_YEAR)
    amp = np.zeros(DAYS_PER_YEAR)
    for k, a_k in enumerate(params.fourier_coefficients, start=1):
        amp += a_k * np.cos(2.0 * np.pi * k * (days - params.peak_day) / DAYS_PER_YEAR)
    boost = 1.0 + params.climate_coefficient * (tmax - params.reference_tmax)
    summer = (days >= SUMMER_DAYS[0]) & (days <= SUMMER_DAYS[1])
    amp = np.where(summer, amp * boost, amp)
    return np.repeat(1.0 + amp, 24)


def _scale_to_volume(series: np.ndarray, target: float) -> np.ndarray:
    """Clamp negatives and rescale until the annual sum matches exactly."""
    series = np.asarray(series, dtype=float)
    for _ in range(10):
        series = np.clip(series, 0.0, None)
        total = series.sum()
        if total <= 0:
            if target == 0:
                return np.zeros_like(series)
            raise DemandError("cannot scale an all-zero series to a positive volume")
        series = series * (target / total)
        if np.all(series >= 0):
            return series
    raise DemandError("volume rescaling did not converge in 10 passes")


def phase3_hourly_series(
    muni_id: str,
    year: int,
    volumes: AnnualVolumePlan,
    profiles: tuple[np.ndarray, np.ndarray, np.ndarray],
    weight: float,
    tmax: float,
    rng: np.random.Generator,
    params: ModulationParams = ModulationParams(),
) -> DemandSeries:
    """Final 8760-sample series: mixed residential base, truncated-Fourier
    seasonal modulation with a summer climate boost, AR(1)-lognormal noise,
    then exact scaling of each component to its annual volume."""
    if not 0.0 <= weight <= 1.0:
        raise DemandError("residential mixing weight must lie in [0, 1]")
    prof_a, prof_b, prof_nr = profiles
    base_res = weight * prof_a + (1.0 - weight) * prof_b
    seasonal = _seasonal_factors(params, tmax)

    def ar1_noise() -> np.ndarray:
        if params.noise_sigma == 0:
            return np.ones(HOURS_PER_YEAR)
        eps = rng.normal(0.0, 1.0, HOURS_PER_YEAR)
        phi = params.noise_phi
        shocks = np.sqrt(1.0 - phi**2) * eps
        shocks[0] = eps[0]
        z = lfilter([1.0], [1.0, -phi], shocks)
        return np.exp(params.noise_sigma * z)

    res = _scale_to_volume(base_res * seasonal * ar1_noise(), volumes.household[muni_id])
    nonres = _scale_to_volume(prof_nr * seasonal * ar1_noise(), volumes.business[muni_id])
    return DemandSeries(
        muni_id=muni_id,
        year=year,
        samples=res + nonres,
        residential=res,
        non_residential=nonres,
    )
