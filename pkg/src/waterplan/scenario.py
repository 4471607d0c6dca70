"""Seeded scenario traces.

Every exogenous or uncertain quantity the simulator consumes is realized
here, once, from a master seed: yearly driver paths, daily surface-source
availability, lifecycle events, and per-entity realized uncertainties
(pump lifetimes, friction decay rates, construction times, investor
demand). No other module draws randomness of its own.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np

DAYS_PER_YEAR = 365


class ScenarioError(ValueError):
    """Invalid scenario specification."""


def derive_seed(master_seed: int, *scope: Any) -> int:
    """Stable sub-seed from the master seed and a scope path.

    SHA-256 over ``master/part/part/...``; the first 8 bytes (big-endian)
    become the seed. Pinned so traces can be reproduced externally.
    """
    key = "/".join([str(master_seed), *map(str, scope)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def sub_rng(master_seed: int, *scope: Any) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *scope))


GENERATOR_KINDS = ("bounded_random_walk", "mean_reverting", "ar1_lognormal", "constant")


@dataclass(frozen=True)
class DriverSpec:
    """How one driver's path is generated.

    ``mean``/``lower``/``upper`` are expert paths, one value per year (or
    a scalar broadcast over the horizon). Bounds, when declared, are hard:
    generated paths are reflected or clipped back inside.
    """

    name: str
    scope: str  # "" for national
    kind: str
    mean: Any  # scalar or per-year sequence
    lower: Any = None
    upper: Any = None
    volatility: float = 0.0
    reversion: float = 0.3  # mean_reverting only
    observable: bool = True

    def __post_init__(self) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise ScenarioError(f"unknown generator kind {self.kind!r} for {self.name!r}")


def _per_year(value: Any, horizon: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(horizon, float(arr))
    if arr.shape[0] < horizon:
        raise ScenarioError(f"driver {name!r} path shorter than horizon")
    return arr[:horizon].astype(float)


def _reflect(x: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    width = hi - lo
    y = (x - lo) % (2.0 * width)
    return lo + (y if y <= width else 2.0 * width - y)


def generate_driver(spec: DriverSpec, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """One driver path over the horizon, honoring declared bounds."""
    mean = _per_year(spec.mean, horizon, spec.name)
    lower = _per_year(spec.lower, horizon, spec.name) if spec.lower is not None else None
    upper = _per_year(spec.upper, horizon, spec.name) if spec.upper is not None else None

    if spec.kind == "constant" or spec.volatility == 0.0:
        path = mean.copy()
    elif spec.kind == "bounded_random_walk":
        path = np.empty(horizon)
        x = mean[0]
        for t in range(horizon):
            drift = 0.0 if t == 0 else mean[t] - mean[t - 1]
            x = x + drift + rng.normal(0.0, spec.volatility * max(abs(mean[t]), 1e-12))
            if lower is not None and upper is not None:
                x = _reflect(x, lower[t], upper[t])
            path[t] = x
    elif spec.kind == "mean_reverting":
        path = np.empty(horizon)
        x = mean[0]
        for t in range(horizon):
            x = x + spec.reversion * (mean[t] - x) + rng.normal(
                0.0, spec.volatility * max(abs(mean[t]), 1e-12)
            )
            if lower is not None and upper is not None:
                x = _reflect(x, lower[t], upper[t])
            path[t] = x
    elif spec.kind == "ar1_lognormal":
        phi = 0.7
        eps = rng.normal(0.0, 1.0, horizon)
        z = np.empty(horizon)
        z[0] = eps[0]
        for t in range(1, horizon):
            z[t] = phi * z[t - 1] + np.sqrt(1 - phi**2) * eps[t]
        path = mean * np.exp(spec.volatility * z - 0.5 * spec.volatility**2)
        if lower is not None and upper is not None:
            path = np.clip(path, lower, upper)
    else:  # pragma: no cover - guarded in DriverSpec
        raise ScenarioError(spec.kind)

    if lower is not None:
        path = np.maximum(path, lower)
    if upper is not None:
        path = np.minimum(path, upper)
    return path


@dataclass(frozen=True)
class LifecycleCandidate:
    """A possible administrative restructuring event."""

    kind: str  # "absorb" | "cluster"
    sources: tuple[str, ...]  # absorbed/clustered municipality ids
    destination: str  # absorbing muni id, or the new muni id
    window: tuple[int, int]  # candidate years (offsets into the horizon)
    probability: float = 1.0


@dataclass(frozen=True)
class LifecycleEvent:
    kind: str
    sources: tuple[str, ...]
    destination: str
    year: int  # offset into the horizon, applied on Jan 1


@dataclass
class ScenarioTrace:
    """Deterministic realization of every exogenous/uncertain quantity."""

    master_seed: int
    horizon_years: int
    series: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    observable: dict[tuple[str, str], bool] = field(default_factory=dict)
    availability: dict[str, np.ndarray] = field(default_factory=dict)  # source -> (years, 365)
    events: list[LifecycleEvent] = field(default_factory=list)
    _realized: dict[tuple[str, str], float] = field(default_factory=dict)

    def get(self, name: str, scope: str = "") -> np.ndarray:
        key = (name, scope)
        if key not in self.series:
            raise ScenarioError(f"trace has no series {name!r} scope {scope!r}")
        return self.series[key]

    def rng(self, *scope: Any) -> np.random.Generator:
        """Derived generator for a named consumer (e.g. demand noise)."""
        return sub_rng(self.master_seed, *scope)

    def realized(self, entity: str, param: str, low: float, high: float) -> float:
        """Uniform draw for an uncertain per-entity parameter.

        Drawn once per (entity, param) from its own sub-seed; every later
        call returns the same value, so replays are exact regardless of
        call order.
        """
        key = (entity, param)
        if key not in self._realized:
            if high < low:
                raise ScenarioError(f"bad bounds for {key}: [{low}, {high}]")
            rng = sub_rng(self.master_seed, "realized", entity, param)
            self._realized[key] = float(rng.uniform(low, high))
        return self._realized[key]

    def realized_int(self, entity: str, param: str, low: int, high: int) -> int:
        """Uniform integer draw on [low, high], cached like :meth:`realized`."""
        key = (entity, f"{param}:int")
        if key not in self._realized:
            rng = sub_rng(self.master_seed, "realized", entity, param)
            self._realized[key] = int(rng.integers(low, high + 1))
        return int(self._realized[key])


def _availability_series(
    horizon: int, rng: np.random.Generator, base_outage_p: float = 0.02, persistence: float = 0.75
) -> np.ndarray:
    """Daily 0/1 availability with summer-clustered low-flow outages."""
    days = np.arange(DAYS_PER_YEAR)
    seasonal = 1.0 + 2.5 * np.exp(-0.5 * ((days - 200) / 30.0) ** 2)
    out = np.ones((horizon, DAYS_PER_YEAR), dtype=float)
    for y in range(horizon):
        in_outage = False
        u = rng.uniform(size=DAYS_PER_YEAR)
        for d in range(DAYS_PER_YEAR):
            p = persistence if in_outage else min(base_outage_p * seasonal[d], 1.0)
            in_outage = u[d] < p
            if in_outage:
                out[y, d] = 0.0
    return out


def generate_trace(
    specs: list[DriverSpec],
    master_seed: int,
    horizon_years: int,
    surface_sources: list[str] | None = None,
    lifecycle_candidates: list[LifecycleCandidate] | None = None,
    outage_probability: float = 0.02,
) -> ScenarioTrace:
    """Build the full trace. Each driver uses a sub-seed derived from the
    master seed plus its name and scope, so specs stay isolated."""
    if horizon_years < 1:
        raise ScenarioError("horizon must be >= 1 year")
    seen = set()
    for spec in specs:
        key = (spec.name, spec.scope)
        if key in seen:
            raise ScenarioError(f"duplicate driver spec {key}")
        seen.add(key)

    trace = ScenarioTrace(master_seed=master_seed, horizon_years=horizon_years)
    for spec in specs:
        rng = sub_rng(master_seed, "driver", spec.name, spec.scope)
        trace.series[(spec.name, spec.scope)] = generate_driver(spec, horizon_years, rng)
        trace.observable[(spec.name, spec.scope)] = spec.observable

    for source_id in surface_sources or []:
        rng = sub_rng(master_seed, "availability", source_id)
        trace.availability[source_id] = _availability_series(
            horizon_years, rng, base_outage_p=outage_probability
        )

    for cand in lifecycle_candidates or []:
        rng = sub_rng(master_seed, "lifecycle", cand.kind, *cand.sources, cand.destination)
        if rng.uniform() <= cand.probability:
            year = int(rng.integers(cand.window[0], cand.window[1] + 1))
            trace.events.append(
                LifecycleEvent(
                    kind=cand.kind,
                    sources=cand.sources,
                    destination=cand.destination,
                    year=year,
                )
            )
    trace.events.sort(key=lambda e: (e.year, e.destination))
    return trace


def trace_to_doc(trace: ScenarioTrace) -> dict:
    """Full trace in document form, for export and exact replay checks."""
    return {
        "format_version": 1,
        "master_seed": trace.master_seed,
        "horizon_years": trace.horizon_years,
        "series": {
            f"{name}|{scope}": [float(v) for v in values]
            for (name, scope), values in sorted(trace.series.items())
        },
        "observable": {
            f"{name}|{scope}": bool(flag)
            for (name, scope), flag in sorted(trace.observable.items())
        },
        "availability": {
            source: [[int(v) for v in year] for year in grid]
            for source, grid in sorted(trace.availability.items())
        },
        "events": [
            {
                "kind": e.kind,
                "sources": list(e.sources),
                "destination": e.destination,
                "year": e.year,
            }
            for e in trace.events
        ],
    }


def reveal_history(trace: ScenarioTrace, up_to_year: int) -> dict[str, dict[str, list[float]]]:
    """Observable driver series truncated at the year boundary.

    Hidden series (realized lifetimes, decay rates, availability draws,
    investor demand) never appear; their effects surface only through run
    outputs.
    """
    if up_to_year < 0 or up_to_year > trace.horizon_years:
        raise ScenarioError("up_to_year outside the horizon")
    out: dict[str, dict[str, list[float]]] = {}
    for (name, scope), series in sorted(trace.series.items()):
        if not trace.observable.get((name, scope), False):
            continue
        out.setdefault(name, {})[scope] = [float(v) for v in series[:up_to_year]]
    return out
