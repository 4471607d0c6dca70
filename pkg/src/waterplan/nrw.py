"""Non-revenue water model.

NRW demand is driven by the average age of a municipality's inner
distribution network. The age maps to a leak class (A best .. E worst),
each class carries per-km-of-pipe NRW demand bounds, and interventions
buy the age down under one of two budget policies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: m of inner distribution network per 10k inhabitants, national ratio.
KM_PIPES_PER_10K = 57.7

#: Upper age (exclusive) of classes A..D; E is open-ended.
AGE_BREAKPOINTS = (25.0, 43.0, 54.0, 60.0)

CLASSES = ("A", "B", "C", "D", "E")

#: Sampling cap for the open-ended E class (m3/day/km), configurable.
DEFAULT_E_CAP = 80.0


class NrwError(ValueError):
    """Invalid NRW input or configuration."""


@dataclass(frozen=True)
class NrwClassTable:
    """Leak classes with age breakpoints and per-km NRW demand bounds."""

    breakpoints: tuple[float, ...] = AGE_BREAKPOINTS
    bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "A": (0.0, 12.0),
            "B": (12.0, 20.0),
            "C": (20.0, 35.0),
            "D": (35.0, 55.0),
            "E": (55.0, DEFAULT_E_CAP),
        }
    )

    def __post_init__(self) -> None:
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise NrwError("age breakpoints must be strictly increasing")
        lows = [self.bounds[c][0] for c in CLASSES]
        highs = [self.bounds[c][1] for c in CLASSES]
        for lo, hi in zip(lows, highs):
            if hi <= lo:
                raise NrwError("class bounds must have lo < hi")
        if highs[:-1] != lows[1:]:
            raise NrwError("class bounds must be contiguous")

    def age_band(self, cls: str) -> tuple[float, float]:
        """Age interval [lo, hi) covered by a class; E is capped at 100."""
        idx = CLASSES.index(cls)
        lo = 0.0 if idx == 0 else self.breakpoints[idx - 1]
        hi = self.breakpoints[idx] if idx < len(self.breakpoints) else 100.0
        return lo, hi

    def age_midpoint(self, cls: str) -> float:
        lo, hi = self.age_band(cls)
        return 0.5 * (lo + hi)


DEFAULT_TABLE = NrwClassTable()


def km_pipes(population: float) -> float:
    """Inner distribution network length (km) from population."""
    if population < 0:
        raise NrwError(f"population must be >= 0, got {population}")
    return KM_PIPES_PER_10K * population / 10_000.0


def classify(age: float, table: NrwClassTable = DEFAULT_TABLE) -> str:
    """Leak class for a network average age; boundaries are lower-inclusive."""
    if age < 0:
        raise NrwError(f"age must be >= 0, got {age}")
    for cls, brk in zip(CLASSES, table.breakpoints):
        if age < brk:
            return cls
    return CLASSES[-1]


def sample_nrw_demand(
    cls: str,
    km: float,
    rng: np.random.Generator,
    table: NrwClassTable = DEFAULT_TABLE,
) -> float:
    """Draw the NRW demand (m3/day) for a municipality.

    The per-km rate is triangular on the class bounds with the mode at the
    lower third; multiplied by the network length. One draw per
    municipality-year.
    """
    if cls not in table.bounds:
        raise NrwError(f"unknown NRW class {cls!r}")
    lo, hi = table.bounds[cls]
    if km == 0:
        return 0.0
    mode = lo + (hi - lo) / 3.0
    rate = rng.triangular(lo, mode, hi)
    return rate * km


@dataclass
class MuniNrwRecord:
    """Per-municipality view the intervention policies operate on."""

    muni_id: str
    age: float
    km: float
    population: float


@dataclass
class NrwInterventionResult:
    new_ages: dict[str, float]
    spend: dict[str, float]
    total_spent: float
    returned: float


def _size_class(population: float) -> str:
    if population < 20_000:
        return "small"
    if population < 100_000:
        return "medium"
    return "large"


def apply_nrw_intervention(
    records: list[MuniNrwRecord],
    budget: float,
    policy: str,
    unit_costs: dict[tuple[str, str], float],
    effectiveness: dict[tuple[str, str], float] | float = 1.0,
    table: NrwClassTable = DEFAULT_TABLE,
) -> NrwInterventionResult:
    """Spend an NRW budget on reducing distribution-network age.

    ``by_leak_class``: improve the worst-class municipalities first (ties
    broken by larger network), one class step per payment of
    ``unit_cost x km``; the improved age is the midpoint of the better
    class's age band. ``by_population``: allocate funds proportionally to
    population; each municipality's age drops by
    ``funds x effectiveness / km`` years, floored at 0. Unspent funds are
    returned.
    """
    if budget < 0:
        raise NrwError("budget must be >= 0")
    new_ages = {r.muni_id: r.age for r in records}
    spend: dict[str, float] = {r.muni_id: 0.0 for r in records}
    remaining = budget

    def cost_of(rec: MuniNrwRecord, cls: str) -> float:
        key = (cls, _size_class(rec.population))
        return unit_costs[key] * rec.km

    def eff_of(rec: MuniNrwRecord, cls: str) -> float:
        if isinstance(effectiveness, dict):
            return effectiveness[(cls, _size_class(rec.population))]
        return effectiveness

    if policy == "by_leak_class":
        # Worst class first; within a class, larger networks first.
        while remaining > 0:
            candidates = [
                r
                for r in records
                if classify(new_ages[r.muni_id], table) != "A" and r.km > 0
            ]
            if not candidates:
                break
            candidates.sort(
                key=lambda r: (
                    -CLASSES.index(classify(new_ages[r.muni_id], table)),
                    -r.km,
                    r.muni_id,
                )
            )
            progressed = False
            for rec in candidates:
                cls = classify(new_ages[rec.muni_id], table)
                cost = cost_of(rec, cls)
                if cost <= remaining:
                    better = CLASSES[CLASSES.index(cls) - 1]
                    new_ages[rec.muni_id] = table.age_midpoint(better)
                    spend[rec.muni_id] += cost
                    remaining -= cost
                    progressed = True
                    break
            if not progressed:
                break
    elif policy == "by_population":
        total_pop = sum(r.population for r in records)
        if total_pop > 0:
            for rec in records:
                funds = budget * rec.population / total_pop
                if rec.km <= 0 or new_ages[rec.muni_id] <= 0:
                    continue
                cls = classify(new_ages[rec.muni_id], table)
                reduction = funds * eff_of(rec, cls) / rec.km
                applied = min(reduction, new_ages[rec.muni_id])
                if reduction > 0:
                    # Pay only for the reduction actually achievable.
                    used = funds * (applied / reduction)
                else:
                    used = 0.0
                new_ages[rec.muni_id] -= applied
                spend[rec.muni_id] += used
                remaining -= used
    else:
        raise NrwError(f"unknown NRW policy {policy!r}")

    total_spent = sum(spend.values())
    return NrwInterventionResult(
        new_ages=new_ages,
        spend=spend,
        total_spent=total_spent,
        returned=budget - total_spent,
    )
