"""Steady-state pressure-driven hydraulic solver.

Solves nodal heads with a damped Newton iteration once per simulated hour.
Junction outflow follows the Wagner pressure-demand relationship (full
demand above the minimum service pressure, square-root reduction below,
nothing at or below zero pressure). Pipes follow Darcy-Weisbach with a
constant friction factor; pump groups follow tabulated head/efficiency
curves that must not be extrapolated.

`CompiledNetwork` preprocesses a network once and solves many demand
vectors (with warm starts); `solve_step` is the one-shot convenience API
on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

G = 9.81  # m/s^2
RHO = 1000.0  # kg/m^3
S_PER_H = 3600.0

#: Head-difference regularization below which pipe flow is linearized.
_DH_EPS = 1e-10
#: Pressure regularization for the PDA relationship near zero pressure.
_P_EPS = 1e-7
#: Relative slope of the flat continuation beyond a pump's shutoff head.
_SHUTOFF_SLOPE = 1e-6


class HydraulicsError(ValueError):
    """Invalid network or solver input."""


class PumpRangeError(HydraulicsError):
    """A pump's operating point left its tabulated curve range."""

    def __init__(self, station_id: str, flow_m3h: float) -> None:
        self.station_id = station_id
        self.flow_m3h = flow_m3h
        super().__init__(
            f"pump group {station_id!r} operating point {flow_m3h:.3f} m3/h "
            "is outside the tabulated curve range"
        )


@dataclass(frozen=True)
class Junction:
    id: str
    elevation: float  # m
    demand: float = 0.0  # m3/h


@dataclass(frozen=True)
class FixedHead:
    id: str
    head: float  # m


@dataclass(frozen=True)
class PipeLink:
    id: str
    node_a: str
    node_b: str
    length: float  # m
    diameter: float  # m
    darcy_f: float

    def __post_init__(self) -> None:
        if self.diameter <= 0 or self.length <= 0 or self.darcy_f <= 0:
            raise HydraulicsError(f"pipe {self.id!r} needs positive length/diameter/friction")

    @property
    def resistance(self) -> float:
        """h = r * Q|Q| with Q in m3/s (Darcy-Weisbach)."""
        return 8.0 * self.darcy_f * self.length / (G * np.pi**2 * self.diameter**5)


@dataclass(frozen=True)
class PumpGroupLink:
    """One or more identical pumps in parallel between two nodes.

    Positive flow runs node_a -> node_b and gains head. Curves are per
    unit; flow divides equally among the identical units. Above the
    shutoff head the group closes (check-valve behavior); beyond the high
    end of the tabulated range the operating point is an error.
    """

    id: str
    node_a: str
    node_b: str
    head_curve: tuple[tuple[float, float], ...]  # (flow m3/h, head m), head decreasing
    efficiency_curve: tuple[tuple[float, float], ...]  # (flow m3/h, eta)
    units: int = 1

    def __post_init__(self) -> None:
        if self.units < 1:
            raise HydraulicsError(f"pump group {self.id!r} needs >= 1 unit")
        if len(self.head_curve) < 2 or len(self.efficiency_curve) < 2:
            raise HydraulicsError(f"pump group {self.id!r} curves need >= 2 points")
        flows = [q for q, _ in self.head_curve]
        heads = [h for _, h in self.head_curve]
        if any(b <= a for a, b in zip(flows, flows[1:])):
            raise HydraulicsError(f"pump group {self.id!r} flows must be strictly increasing")
        if any(b >= a for a, b in zip(heads, heads[1:])):
            raise HydraulicsError(f"pump group {self.id!r} head curve must be strictly decreasing")

    @property
    def flow_domain(self) -> tuple[float, float]:
        return self.head_curve[0][0], self.head_curve[-1][0]

    def efficiency_at(self, flow_per_unit: float) -> float:
        q = np.array([p[0] for p in self.efficiency_curve])
        e = np.array([p[1] for p in self.efficiency_curve])
        if flow_per_unit < q[0] - 1e-6 or flow_per_unit > q[-1] + 1e-6:
            raise PumpRangeError(self.id, flow_per_unit)
        return float(np.interp(flow_per_unit, q, e))


@dataclass
class HydraulicNetwork:
    junctions: list[Junction] = field(default_factory=list)
    fixed_heads: list[FixedHead] = field(default_factory=list)
    pipes: list[PipeLink] = field(default_factory=list)
    pumps: list[PumpGroupLink] = field(default_factory=list)

    def validate(self) -> None:
        ids = [j.id for j in self.junctions] + [f.id for f in self.fixed_heads]
        if len(set(ids)) != len(ids):
            raise HydraulicsError("duplicate node ids")
        known = set(ids)
        for link in [*self.pipes, *self.pumps]:
            for node in (link.node_a, link.node_b):
                if node not in known:
                    raise HydraulicsError(f"link {link.id!r} references unknown node {node!r}")


@dataclass(frozen=True)
class SolverOptions:
    p_min: float = 30.0  # m, minimum service pressure
    pda_exponent: float = 0.5
    max_iterations: int = 200
    head_tol: float = 1e-8  # m, max |dH| convergence
    residual_tol: float = 5e-7  # m3/h nodal imbalance target
    check_pump_range: bool = True


@dataclass
class HydraulicSolution:
    heads: dict[str, float]
    pressures: dict[str, float]
    delivered: dict[str, float]  # m3/h
    undelivered: dict[str, float]  # m3/h
    link_flows: dict[str, float]  # m3/h, signed a->b
    link_headloss: dict[str, float]  # m (pipes: loss a->b; pumps: gain)
    pump_flows: dict[str, float]  # m3/h, group total
    pump_head_gain: dict[str, float]
    pump_hydraulic_kw: dict[str, float]
    pump_electric_kw: dict[str, float]
    converged: bool
    iterations: int

    @property
    def total_delivered(self) -> float:
        return sum(self.delivered.values())

    @property
    def total_undelivered(self) -> float:
        return sum(self.undelivered.values())

    @property
    def total_electric_kw(self) -> float:
        return sum(self.pump_electric_kw.values())


def pump_electric_power(pump: PumpGroupLink, flow_per_unit: float, head: float) -> float:
    """Electric power (kW) of one pump unit at a flow/head operating point."""
    eta = pump.efficiency_at(flow_per_unit)
    q_si = flow_per_unit / S_PER_H
    return RHO * G * q_si * head / eta / 1000.0


def _union_components(nodes: list[str], edges: list[tuple[str, str]]) -> dict[str, str]:
    parent = {n: n for n in nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return {n: find(n) for n in nodes}


@dataclass
class CompiledSolution:
    """Array-level result of one compiled solve."""

    heads: np.ndarray  # per supplied junction
    delivered: np.ndarray  # m3/h per supplied junction
    pump_flow: np.ndarray  # m3/h per pump group
    pump_gain: np.ndarray  # m per pump group
    pump_electric_kw: np.ndarray
    converged: bool
    iterations: int


class CompiledNetwork:
    """A network preprocessed for repeated solves.

    Junctions in components without a fixed-head node are excluded from
    the solve and always report zero delivery.
    """

    def __init__(self, net: HydraulicNetwork, options: SolverOptions | None = None) -> None:
        net.validate()
        self.net = net
        self.opts = options or SolverOptions()
        fixed_head = {f.id: f.head for f in net.fixed_heads}
        all_nodes = [j.id for j in net.junctions] + list(fixed_head)
        edges = [(l.node_a, l.node_b) for l in [*net.pipes, *net.pumps]]
        roots = _union_components(all_nodes, edges)
        supplied_roots = {roots[f] for f in fixed_head}
        self.supplied = {n for n in all_nodes if roots[n] in supplied_roots}

        self.junctions = [j for j in net.junctions if j.id in self.supplied]
        self.dry = [j for j in net.junctions if j.id not in self.supplied]
        self.var_index = {j.id: k for k, j in enumerate(self.junctions)}
        self.n = len(self.junctions)
        self.elev = np.array([j.elevation for j in self.junctions], dtype=float)
        self.base_demand = np.array([j.demand for j in self.junctions], dtype=float)
        self.fixed_head = fixed_head
        self.max_fixed = max(fixed_head.values(), default=0.0)

        pipes = [p for p in net.pipes if p.node_a in self.supplied and p.node_b in self.supplied]
        self.pipes = pipes
        self.pipe_r = np.array([p.resistance for p in pipes], dtype=float)
        self.pipe_ia = np.array([self.var_index.get(p.node_a, -1) for p in pipes], dtype=int)
        self.pipe_ib = np.array([self.var_index.get(p.node_b, -1) for p in pipes], dtype=int)
        self.pipe_fa = np.array([fixed_head.get(p.node_a, 0.0) for p in pipes], dtype=float)
        self.pipe_fb = np.array([fixed_head.get(p.node_b, 0.0) for p in pipes], dtype=float)

        self.pumps = [
            p for p in net.pumps if p.node_a in self.supplied and p.node_b in self.supplied
        ]
        self.pump_q = [np.array([pt[0] for pt in p.head_curve]) for p in self.pumps]
        self.pump_h = [np.array([pt[1] for pt in p.head_curve]) for p in self.pumps]

        self._warm: np.ndarray | None = None

    # -- pump characteristic ------------------------------------------------

    def _pump_flow_at_gain(self, k: int, gain: float) -> tuple[float, float]:
        """Per-unit flow and dQ/dGain, with continuations outside the range."""
        q, h = self.pump_q[k], self.pump_h[k]
        if gain >= h[0]:
            # Above shutoff: closed, nearly flat characteristic.
            slope = (q[1] - q[0]) / (h[1] - h[0]) * _SHUTOFF_SLOPE
            return float(q[0] + slope * (gain - h[0])), float(slope)
        if gain <= h[-1]:
            slope = (q[-1] - q[-2]) / (h[-1] - h[-2])
            return float(q[-1] + slope * (gain - h[-1])), float(slope)
        idx = int(np.searchsorted(-h, -gain) - 1)
        idx = min(max(idx, 0), len(q) - 2)
        slope = (q[idx + 1] - q[idx]) / (h[idx + 1] - h[idx])
        return float(q[idx] + slope * (gain - h[idx])), float(slope)

    # -- residual/Jacobian assembly ----------------------------------------

    def _assemble(self, heads: np.ndarray, demand_si: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        opts = self.opts
        resid = np.zeros(n)
        jac_flat = np.zeros(n * n)

        # PDA outflow.
        pressure = heads - self.elev
        frac = np.empty(n)
        dfrac = np.empty(n)
        full = pressure >= opts.p_min
        zero = pressure <= 0.0
        tiny = (~zero) & (pressure < _P_EPS)
        mid = ~(full | zero | tiny)
        frac[full], dfrac[full] = 1.0, 0.0
        frac[zero], dfrac[zero] = 0.0, 0.0
        if tiny.any():
            f_eps = (_P_EPS / opts.p_min) ** opts.pda_exponent
            frac[tiny] = f_eps * pressure[tiny] / _P_EPS
            dfrac[tiny] = f_eps / _P_EPS
        if mid.any():
            fr = (pressure[mid] / opts.p_min) ** opts.pda_exponent
            frac[mid] = fr
            dfrac[mid] = opts.pda_exponent * fr / pressure[mid]
        resid -= demand_si * frac
        diag = -demand_si * dfrac

        # Pipes, vectorized.
        if len(self.pipes):
            ha = np.where(self.pipe_ia >= 0, heads[np.maximum(self.pipe_ia, 0)], self.pipe_fa)
            hb = np.where(self.pipe_ib >= 0, heads[np.maximum(self.pipe_ib, 0)], self.pipe_fb)
            dh = ha - hb
            small = np.abs(dh) < _DH_EPS
            absdh = np.where(small, _DH_EPS, np.abs(dh))
            dq = 1.0 / (2.0 * np.sqrt(self.pipe_r * absdh))
            q = np.where(
                small,
                dh / np.sqrt(self.pipe_r * _DH_EPS),
                np.sign(dh) * np.sqrt(absdh / self.pipe_r),
            )
            dq = np.where(small, 1.0 / np.sqrt(self.pipe_r * _DH_EPS), dq)
            ia, ib = self.pipe_ia, self.pipe_ib
            mask_a, mask_b = ia >= 0, ib >= 0
            np.add.at(resid, ia[mask_a], -q[mask_a])
            np.add.at(resid, ib[mask_b], q[mask_b])
            np.add.at(jac_flat, ia[mask_a] * n + ia[mask_a], -dq[mask_a])
            np.add.at(jac_flat, ib[mask_b] * n + ib[mask_b], -dq[mask_b])
            both = mask_a & mask_b
            np.add.at(jac_flat, ia[both] * n + ib[both], dq[both])
            np.add.at(jac_flat, ib[both] * n + ia[both], dq[both])

        # Pump groups, per group (few of them).
        for k, pump in enumerate(self.pumps):
            ia = self.var_index.get(pump.node_a, -1)
            ib = self.var_index.get(pump.node_b, -1)
            ha = heads[ia] if ia >= 0 else self.fixed_head[pump.node_a]
            hb = heads[ib] if ib >= 0 else self.fixed_head[pump.node_b]
            q_unit, slope = self._pump_flow_at_gain(k, hb - ha)
            q = pump.units * q_unit / S_PER_H  # a -> b
            dgain = pump.units * slope / S_PER_H  # dq/d(hb - ha)
            # dq/dha = -dgain, dq/dhb = +dgain
            if ia >= 0:
                resid[ia] -= q
                jac_flat[ia * n + ia] += dgain
                if ib >= 0:
                    jac_flat[ia * n + ib] -= dgain
            if ib >= 0:
                resid[ib] += q
                jac_flat[ib * n + ib] += dgain
                if ia >= 0:
                    jac_flat[ib * n + ia] -= dgain

        jac = jac_flat.reshape(n, n)
        jac[np.diag_indices(n)] += diag
        return resid, jac

    def solve(
        self,
        demands_m3h: np.ndarray | None = None,
        x0: np.ndarray | None = None,
        warm: bool = True,
    ) -> CompiledSolution:
        opts = self.opts
        n = self.n
        demand = self.base_demand if demands_m3h is None else np.asarray(demands_m3h, float)
        if demand.shape != (n,):
            raise HydraulicsError(f"demand vector must have {n} entries")
        demand_si = demand / S_PER_H

        if x0 is not None:
            heads = np.asarray(x0, float).copy()
        elif warm and self._warm is not None:
            heads = self._warm.copy()
        else:
            # Slightly below the highest source so initial pipe gradients
            # are non-degenerate.
            heads = np.full(n, self.max_fixed - 1.0, dtype=float)

        converged = n == 0
        iterations = 0
        if n:
            resid, jac = self._assemble(heads, demand_si)
            res_norm = float(np.abs(resid).max())
            for iterations in range(1, opts.max_iterations + 1):
                try:
                    step = np.linalg.solve(jac, -resid)
                except np.linalg.LinAlgError:
                    step = np.linalg.lstsq(jac, -resid, rcond=None)[0]
                damping = 1.0
                while True:
                    trial = heads + damping * step
                    t_resid, t_jac = self._assemble(trial, demand_si)
                    t_norm = float(np.abs(t_resid).max())
                    # Strict decrease; accepting equal norms admits 2-cycles
                    # on the square-root characteristic.
                    if (
                        t_norm < res_norm
                        or t_norm * S_PER_H < opts.residual_tol
                        or damping < 1e-7
                    ):
                        break
                    damping *= 0.5
                max_dh = float(np.abs(trial - heads).max())
                heads, resid, jac, res_norm = trial, t_resid, t_jac, t_norm
                if max_dh < opts.head_tol and res_norm * S_PER_H < opts.residual_tol:
                    converged = True
                    break
            if warm and converged:
                self._warm = heads.copy()

        pressure = heads - self.elev
        frac = np.clip(
            np.where(pressure > 0, (np.maximum(pressure, 0.0) / opts.p_min), 0.0)
            ** opts.pda_exponent,
            0.0,
            1.0,
        )
        delivered = demand * frac

        pump_flow = np.zeros(len(self.pumps))
        pump_gain = np.zeros(len(self.pumps))
        pump_kw = np.zeros(len(self.pumps))
        for k, pump in enumerate(self.pumps):
            ia = self.var_index.get(pump.node_a, -1)
            ib = self.var_index.get(pump.node_b, -1)
            ha = heads[ia] if ia >= 0 else self.fixed_head[pump.node_a]
            hb = heads[ib] if ib >= 0 else self.fixed_head[pump.node_b]
            gain = hb - ha
            q_unit, _ = self._pump_flow_at_gain(k, gain)
            lo, hi = pump.flow_domain
            if q_unit > hi + 1e-7:
                if opts.check_pump_range:
                    raise PumpRangeError(pump.id, q_unit)
                q_unit = hi
            if q_unit < lo - 1e-7:
                if lo <= 0:
                    q_unit = 0.0  # closed at shutoff
                elif opts.check_pump_range:
                    raise PumpRangeError(pump.id, q_unit)
                else:
                    q_unit = lo
            q_unit = max(q_unit, 0.0)
            pump_flow[k] = q_unit * pump.units
            pump_gain[k] = gain
            if q_unit > 0 and gain > 0:
                pump_kw[k] = pump.units * pump_electric_power(pump, q_unit, gain)
        return CompiledSolution(
            heads=heads,
            delivered=delivered,
            pump_flow=pump_flow,
            pump_gain=pump_gain,
            pump_electric_kw=pump_kw,
            converged=converged,
            iterations=iterations,
        )


def solve_step(net: HydraulicNetwork, options: SolverOptions | None = None) -> HydraulicSolution:
    """Solve one steady-state hour of the network.

    Junctions in components without a fixed-head node receive nothing and
    report their full demand as undelivered. Non-convergence is flagged on
    the returned solution, never silent.
    """
    compiled = CompiledNetwork(net, options)
    sol = compiled.solve(warm=False)
    opts = compiled.opts

    heads_out = {j.id: float(sol.heads[compiled.var_index[j.id]]) for j in compiled.junctions}
    heads_out.update({f.id: f.head for f in net.fixed_heads})
    for j in compiled.dry:
        heads_out[j.id] = j.elevation

    pressures: dict[str, float] = {}
    delivered: dict[str, float] = {}
    undelivered: dict[str, float] = {}
    for j in net.junctions:
        p = heads_out[j.id] - j.elevation
        pressures[j.id] = p
        if j.id in compiled.supplied:
            q = float(sol.delivered[compiled.var_index[j.id]])
        else:
            q = 0.0
        delivered[j.id] = q
        undelivered[j.id] = max(j.demand - q, 0.0)
    for f in net.fixed_heads:
        pressures[f.id] = 0.0

    link_flows: dict[str, float] = {}
    link_headloss: dict[str, float] = {}
    pump_flows: dict[str, float] = {}
    pump_gain_d: dict[str, float] = {}
    pump_hyd: dict[str, float] = {}
    pump_el: dict[str, float] = {}
    for p in net.pipes:
        if p.node_a in compiled.supplied and p.node_b in compiled.supplied:
            ha, hb = heads_out[p.node_a], heads_out[p.node_b]
            dh = ha - hb
            if abs(dh) < _DH_EPS:
                q_si = dh / np.sqrt(p.resistance * _DH_EPS)
            else:
                q_si = np.sign(dh) * np.sqrt(abs(dh) / p.resistance)
            link_flows[p.id] = float(q_si * S_PER_H)
            link_headloss[p.id] = dh
        else:
            link_flows[p.id] = 0.0
            link_headloss[p.id] = 0.0
    for k, pump in enumerate(compiled.pumps):
        link_flows[pump.id] = float(sol.pump_flow[k])
        link_headloss[pump.id] = float(sol.pump_gain[k])
        pump_flows[pump.id] = float(sol.pump_flow[k])
        pump_gain_d[pump.id] = float(sol.pump_gain[k])
        pump_hyd[pump.id] = float(
            RHO * G * (sol.pump_flow[k] / S_PER_H) * max(sol.pump_gain[k], 0.0) / 1000.0
        )
        pump_el[pump.id] = float(sol.pump_electric_kw[k])
    for pump in net.pumps:
        if pump.id not in pump_flows:
            link_flows[pump.id] = 0.0
            link_headloss[pump.id] = 0.0
            pump_flows[pump.id] = 0.0
            pump_gain_d[pump.id] = 0.0
            pump_hyd[pump.id] = 0.0
            pump_el[pump.id] = 0.0

    return HydraulicSolution(
        heads=heads_out,
        pressures=pressures,
        delivered=delivered,
        undelivered=undelivered,
        link_flows=link_flows,
        link_headloss=link_headloss,
        pump_flows=pump_flows,
        pump_head_gain=pump_gain_d,
        pump_hydraulic_kw=pump_hyd,
        pump_electric_kw=pump_el,
        converged=sol.converged,
        iterations=sol.iterations,
    )


def network_snapshot(net: HydraulicNetwork, sol: HydraulicSolution) -> str:
    """Plain-text dump of a solved step, stable ordering, for diffing."""
    lines = ["# waterplan network snapshot v1"]
    lines.append("[nodes] id head pressure delivered undelivered")
    for j in sorted(net.junctions, key=lambda x: x.id):
        lines.append(
            f"{j.id} {sol.heads[j.id]:.6f} {sol.pressures[j.id]:.6f} "
            f"{sol.delivered[j.id]:.6f} {sol.undelivered[j.id]:.6f}"
        )
    for f in sorted(net.fixed_heads, key=lambda x: x.id):
        lines.append(f"{f.id} {f.head:.6f} 0.000000 0.000000 0.000000")
    lines.append("[links] id flow headloss")
    for link in sorted([*net.pipes, *net.pumps], key=lambda x: x.id):
        lines.append(
            f"{link.id} {sol.link_flows[link.id]:.6f} {sol.link_headloss[link.id]:.6f}"
        )
    return "\n".join(lines) + "\n"


def to_epanet_inp(net: HydraulicNetwork, title: str = "waterplan export") -> str:
    """Render the network in EPANET INP text form for cross-validation.

    Export only; the solver itself has no EPANET dependency. The constant
    Darcy factor is recorded in the roughness column with a comment, since
    INP normally expects a roughness height there.
    """
    out = [f"[TITLE]\n{title}\n"]
    out.append("[JUNCTIONS]\n;ID Elev Demand")
    for j in net.junctions:
        # EPANET demands in L/s.
        out.append(f" {j.id} {j.elevation:.3f} {j.demand / 3.6:.6f}")
    out.append("\n[RESERVOIRS]\n;ID Head")
    for f in net.fixed_heads:
        out.append(f" {f.id} {f.head:.3f}")
    out.append("\n[PIPES]\n;ID Node1 Node2 Length Diameter Roughness MinorLoss Status")
    for p in net.pipes:
        out.append(
            f" {p.id} {p.node_a} {p.node_b} {p.length:.3f} {p.diameter * 1000:.1f} "
            f"{p.darcy_f:.5f} 0 Open ; darcy_f"
        )
    out.append("\n[PUMPS]\n;ID Node1 Node2 Parameters")
    for pu in net.pumps:
        pts = " ".join(f"{q:.3f}:{h:.3f}" for q, h in pu.head_curve)
        out.append(f" {pu.id} {pu.node_a} {pu.node_b} ; units={pu.units} curve {pts}")
    out.append("\n[OPTIONS]\n Units CMH\n Headloss D-W\n Demand Model PDA\n")
    out.append("[END]\n")
    return "\n".join(out)
