"""Least-cost coordinated dispatch at a fixed hourly price vector.

The nonlinear Weymouth rows are handled by successive linear programming:
each iteration linearizes them in squared pressure around the incumbent,
boxes the squared pressures in a trust region and solves the resulting LP.
Linearized rows carry elastic slacks priced at a penalty ``mu`` so every LP
is feasible whenever the linear part is; steps are accepted on the exact
l1 merit ``cost + mu * sum(|Weymouth residual|)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import gasflow
from .lp import LpProblem, solve_lp
from .model import CoupledSystem


class DispatchError(RuntimeError):
    pass


class DispatchInfeasible(DispatchError):
    def __init__(self, hours, rows, message=None):
        self.hours = list(hours)
        self.rows = list(rows)
        text = message or (f"dispatch infeasible in hour(s) {', '.join(str(h) for h in self.hours)}"
                           if self.hours else "dispatch infeasible")
        if self.rows:
            text += f"; tightest rows: {', '.join(self.rows[:8])}"
        super().__init__(text)


class DispatchNotConverged(DispatchError):
    def __init__(self, solution, trace, message):
        self.solution = solution
        self.trace = trace
        super().__init__(message)


@dataclass(frozen=True)
class SlpSettings:
    max_iter: int = 50
    trust_region_init: float = 0.25
    tol_flow: float = 1e-4
    tol_obj: float = 1e-7
    penalty: Optional[float] = None

    def __post_init__(self):
        if self.max_iter < 1 or not self.trust_region_init > 0 or not self.tol_flow > 0 or not self.tol_obj > 0:
            raise ValueError("SLP settings must be positive")


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    """Dispatch at fixed prices. ``warm_start`` takes the ``lp_bases`` of an
    earlier solution for the same system; they only speed up the LP solves."""

    system: CoupledSystem
    prices: np.ndarray
    settings: SlpSettings = field(default_factory=SlpSettings)
    warm_start: tuple = ()

    def __post_init__(self):
        p = np.asarray(getattr(self.prices, "lambda_tilde", self.prices), dtype=float).ravel()
        if p.size != self.system.horizon:
            raise ValueError(f"{p.size} prices for a horizon of {self.system.horizon}")
        if not np.all(np.isfinite(p)):
            raise ValueError("prices must be finite")
        object.__setattr__(self, "prices", p)


@dataclass
class SlpTrace:
    objective: list = field(default_factory=list)
    max_residual: list = field(default_factory=list)
    radius: list = field(default_factory=list)
    accepted: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective)

    def rows(self):
        return list(zip(range(1, len(self) + 1), self.objective, self.max_residual,
                        self.radius, self.accepted))


@dataclass(frozen=True, eq=False)
class DispatchSolution:
    """Hourly dispatch; every array is indexed ``[hour, entity]`` in system order."""

    system: CoupledSystem
    prices: np.ndarray
    generation: np.ndarray
    wind: np.ndarray
    branch_flow: np.ndarray
    tie_flow: np.ndarray
    angle: np.ndarray
    external_angle: np.ndarray
    supply: np.ndarray
    gas_flow: np.ndarray
    pressure: np.ndarray
    generation_cost: float
    gas_cost: float
    export_revenue: float
    total_cost: float
    iterations: int = 0
    max_weymouth_residual: float = 0.0
    converged: bool = True
    lp_bases: tuple = field(default=(), repr=False)  # final LP basis per SLP iteration

    def totals(self) -> dict:
        """Horizon aggregates: exports and generation in MW(h), gas in 1e6 Sm3."""
        return {
            "P_iz_MW": math.fsum(self.tie_flow.ravel()),
            "P_g_MW": math.fsum(self.generation.ravel()) + math.fsum(self.wind.ravel()),
            "S_k_1e6Sm3": math.fsum(self.supply.ravel()) / 1000.0,
        }


def cost_terms(system: CoupledSystem, generation, supply, tie_flow, prices):
    """Return ``(generation_cost, gas_cost, export_revenue, total)``."""
    b = np.array([g.cost_coeff for g in system.generators], dtype=float)
    c = np.array([s.cost_coeff for s in system.suppliers], dtype=float)
    lam = np.asarray(prices, dtype=float).reshape(-1, 1)
    gen = math.fsum((np.asarray(generation) * b).ravel())
    gas = math.fsum((np.asarray(supply) * c).ravel())
    rev = math.fsum((np.asarray(tie_flow) * lam).ravel())
    return gen, gas, rev, gen + gas - rev


def evaluate_cost(solution: DispatchSolution, prices) -> float:
    """Zone-one cost of ``solution`` at ``prices``: generation + gas - export revenue."""
    return cost_terms(solution.system, solution.generation, solution.supply,
                      solution.tie_flow, prices)[3]


# --------------------------------------------------------------------------
# LP assembly

_KINDS = ("pg", "pw", "th", "tz", "pl", "pt", "s", "f", "u", "sp", "sn")


class Layout:
    """Column layout of the dispatch LP for a set of hours."""

    def __init__(self, system: CoupledSystem, hours: Sequence[int]):
        self.system = system
        self.hours = list(hours)
        self.zones = system.external_zones()
        sizes = {
            "pg": len(system.generators), "pw": len(system.wind_units), "th": len(system.buses),
            "tz": len(self.zones), "pl": len(system.branches), "pt": len(system.tie_lines),
            "s": len(system.suppliers), "f": len(system.pipelines), "u": len(system.gas_nodes),
            "sp": len(system.pipelines), "sn": len(system.pipelines),
        }
        self.sizes = sizes
        self.offset = {}
        off = 0
        for k in _KINDS:
            self.offset[k] = off
            off += sizes[k]
        self.block = off
        self.n_vars = off * len(self.hours)

    def col(self, kind: str, h: int, j):
        return h * self.block + self.offset[kind] + j

    def cols(self, kind: str) -> np.ndarray:
        """(len(hours), size) matrix of column indices for ``kind``."""
        base = np.arange(len(self.hours))[:, None] * self.block + self.offset[kind]
        return base + np.arange(self.sizes[kind])[None, :]

    def take(self, x: np.ndarray, kind: str) -> np.ndarray:
        return x[self.cols(kind)]


def default_penalty(system: CoupledSystem, prices) -> float:
    """Exact-penalty weight comfortably above any Weymouth-row multiplier."""
    bmax = max([abs(g.cost_coeff) for g in system.generators] + [0.0])
    cmax = max([abs(s.cost_coeff) for s in system.suppliers] + [0.0])
    lmax = float(np.max(np.abs(prices))) if len(prices) else 0.0
    hs = [g.gas_link.conversion for g in system.generators if g.gas_link and g.gas_link.conversion > 0]
    hmin = min(hs) if hs else 1.0
    return 100.0 * (1.0 + cmax + (bmax + lmax) / min(hmin, 1.0))


def squared_pressure_bounds(system: CoupledSystem):
    lo = np.array([n.pressure_min ** 2 for n in system.gas_nodes], dtype=float)
    hi = np.array([n.pressure_max ** 2 for n in system.gas_nodes], dtype=float)
    return lo, hi


def build_lp(system: CoupledSystem, prices, u0: np.ndarray, radius=None, *,
             hours: Optional[Sequence[int]] = None, penalty: Optional[float] = None):
    """Assemble the linearized dispatch LP.

    ``u0`` is the (T, nodes) squared-pressure linearization point and
    ``radius`` the trust-region half-width per node (``None``: whole range).
    Returns ``(LpProblem, Layout)``.
    """
    T = system.horizon
    hours = list(range(T)) if hours is None else list(hours)
    prices = np.asarray(prices, dtype=float)
    lay = Layout(system, hours)
    mu = default_penalty(system, prices) if penalty is None else penalty
    bidx = system.bus_index()
    nidx = system.node_index()
    zidx = {z: k for k, z in enumerate(lay.zones)}
    LE = system.electric_load_matrix()
    LG = system.gas_load_matrix()
    WP = system.wind_profile_matrix()
    ulo, uhi = squared_pressure_bounds(system)
    base = system.base_mva

    n = lay.n_vars
    c = np.zeros(n)
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    names = [""] * n
    R, C, V, senses, rhs, rnames = [], [], [], [], [], []

    def row(entries, sense, value, name):
        i = len(rhs)
        for col, val in entries:
            R.append(i)
            C.append(col)
            V.append(val)
        senses.append(sense)
        rhs.append(value)
        rnames.append(name)

    for h, t in enumerate(hours):
        tag = f"@t{t + 1}"
        for g, gen in enumerate(system.generators):
            j = lay.col("pg", h, g)
            c[j], lb[j], ub[j], names[j] = gen.cost_coeff, gen.p_min, gen.p_max, f"P[{gen.id}]{tag}"
        for w, unit in enumerate(system.wind_units):
            j = lay.col("pw", h, w)
            lb[j], ub[j], names[j] = unit.p_min, WP[t, w], f"Pw[{unit.id}]{tag}"
        for i, bus in enumerate(system.buses):
            j = lay.col("th", h, i)
            names[j] = f"delta[{bus.id}]{tag}"
            if bus.is_reference:
                lb[j] = ub[j] = 0.0
        for z, zone in enumerate(lay.zones):
            names[lay.col("tz", h, z)] = f"delta_ext[{zone}]{tag}"
        for l, br in enumerate(system.branches):
            j = lay.col("pl", h, l)
            lb[j], ub[j], names[j] = -br.flow_limit, br.flow_limit, f"Pl[{br.id}]{tag}"
        for z, tl in enumerate(system.tie_lines):
            j = lay.col("pt", h, z)
            c[j], lb[j], ub[j], names[j] = -prices[t], 0.0, tl.export_limit, f"Piz[{tl.id}]{tag}"
        for k, sup in enumerate(system.suppliers):
            j = lay.col("s", h, k)
            c[j], lb[j], ub[j], names[j] = sup.cost_coeff, sup.s_min, sup.s_max, f"S[{sup.id}]{tag}"
        for a, pipe in enumerate(system.pipelines):
            names[lay.col("f", h, a)] = f"f[{pipe.id}]{tag}"
            jp, jn = lay.col("sp", h, a), lay.col("sn", h, a)
            c[jp] = c[jn] = mu
            lb[jp] = lb[jn] = 0.0
            if pipe.has_compressor:
                ub[jp] = 0.0
            names[jp], names[jn] = f"slack+[{pipe.id}]{tag}", f"slack-[{pipe.id}]{tag}"
        for m, node in enumerate(system.gas_nodes):
            j = lay.col("u", h, m)
            lo_, hi_ = ulo[m], uhi[m]
            if radius is not None:
                r = np.broadcast_to(radius, u0.shape)[t, m]
                lo_, hi_ = max(lo_, u0[t, m] - r), min(hi_, u0[t, m] + r)
            lb[j], ub[j], names[j] = lo_, hi_, f"u[{node.id}]{tag}"

        # power balance per bus
        for i, bus in enumerate(system.buses):
            ent = [(lay.col("pg", h, g), 1.0) for g, gen in enumerate(system.generators) if gen.bus == bus.id]
            ent += [(lay.col("pw", h, w), 1.0) for w, u in enumerate(system.wind_units) if u.bus == bus.id]
            for l, br in enumerate(system.branches):
                if br.from_bus == bus.id:
                    ent.append((lay.col("pl", h, l), -1.0))
                elif br.to_bus == bus.id:
                    ent.append((lay.col("pl", h, l), 1.0))
            ent += [(lay.col("pt", h, z), -1.0) for z, tl in enumerate(system.tie_lines) if tl.from_bus == bus.id]
            row(ent, "==", LE[t, i], f"power_balance[{bus.id}]{tag}")
        for l, br in enumerate(system.branches):
            k = base / br.reactance
            row([(lay.col("pl", h, l), 1.0), (lay.col("th", h, bidx[br.from_bus]), -k),
                 (lay.col("th", h, bidx[br.to_bus]), k)], "==", 0.0, f"branch_flow[{br.id}]{tag}")
        for z, tl in enumerate(system.tie_lines):
            k = base / tl.reactance
            row([(lay.col("pt", h, z), 1.0), (lay.col("th", h, bidx[tl.from_bus]), -k),
                 (lay.col("tz", h, zidx[tl.external_zone]), k)], "==", 0.0, f"tie_flow[{tl.id}]{tag}")

        # gas balance per node: outflow - inflow - supply + gas-fired use = -load
        for m, node in enumerate(system.gas_nodes):
            ent = []
            for a, pipe in enumerate(system.pipelines):
                if pipe.from_node == node.id:
                    ent.append((lay.col("f", h, a), 1.0))
                elif pipe.to_node == node.id:
                    ent.append((lay.col("f", h, a), -1.0))
            ent += [(lay.col("s", h, k), -1.0) for k, s in enumerate(system.suppliers) if s.node == node.id]
            ent += [(lay.col("pg", h, g), gen.gas_link.conversion) for g, gen in enumerate(system.generators)
                    if gen.gas_link is not None and gen.gas_link.node == node.id and gen.gas_link.conversion != 0]
            row(ent, "==", -LG[t, m], f"gas_balance[{node.id}]{tag}")

        # linearized Weymouth
        for a, pipe in enumerate(system.pipelines):
            mi, ni = nidx[pipe.from_node], nidx[pipe.to_node]
            a0, bm, bn = gasflow.linearize_weymouth(pipe, u0[t, mi], u0[t, ni])
            ent = [(lay.col("f", h, a), 1.0), (lay.col("u", h, mi), -bm), (lay.col("u", h, ni), -bn),
                   (lay.col("sn", h, a), 1.0)]
            if pipe.has_compressor:
                row(ent, ">=", a0, f"compressor[{pipe.id}]{tag}")
            else:
                ent.append((lay.col("sp", h, a), -1.0))
                row(ent, "==", a0, f"weymouth[{pipe.id}]{tag}")

    # ramping (omitted altogether for a one-hour horizon)
    if T > 1:
        pos = {t: h for h, t in enumerate(hours)}
        for g, gen in enumerate(system.generators):
            if gen.initial_output is not None and 0 in pos:
                j = lay.col("pg", pos[0], g)
                row([(j, 1.0)], "<=", gen.initial_output + gen.ramp_up, f"ramp_up[{gen.id}]@t1")
                row([(j, -1.0)], "<=", gen.ramp_down - gen.initial_output, f"ramp_down[{gen.id}]@t1")
            for t in range(T - 1):
                if t in pos and t + 1 in pos:
                    j0, j1 = lay.col("pg", pos[t], g), lay.col("pg", pos[t + 1], g)
                    row([(j1, 1.0), (j0, -1.0)], "<=", gen.ramp_up, f"ramp_up[{gen.id}]@t{t + 2}")
                    row([(j0, 1.0), (j1, -1.0)], "<=", gen.ramp_down, f"ramp_down[{gen.id}]@t{t + 2}")

    lp = LpProblem(c, np.array(R, dtype=np.int64), np.array(C, dtype=np.int64), np.array(V, dtype=float),
                   tuple(senses), np.array(rhs, dtype=float), lb, ub, tuple(names), tuple(rnames))
    return lp, lay


# --------------------------------------------------------------------------
# SLP

@dataclass
class _Iterate:
    x: np.ndarray
    u: np.ndarray
    cost: float
    violation: np.ndarray
    merit: float

    @property
    def max_violation(self) -> float:
        return float(self.violation.max()) if self.violation.size else 0.0


def _violations(system: CoupledSystem, u: np.ndarray, f: np.ndarray) -> np.ndarray:
    if not system.pipelines:
        return np.zeros((u.shape[0], 0))
    nidx = system.node_index()
    mi = np.array([nidx[p.from_node] for p in system.pipelines])
    ni = np.array([nidx[p.to_node] for p in system.pipelines])
    C = np.array([p.weymouth_const for p in system.pipelines])
    comp = np.array([p.has_compressor for p in system.pipelines])
    w = gasflow.weymouth_flow_u(u[:, mi], u[:, ni], C)
    return np.where(comp, np.maximum(0.0, w - f), np.abs(f - w))


def _evaluate(system, lay, x, c_lin, mu) -> _Iterate:
    u = lay.take(x, "u")
    f = lay.take(x, "f")
    viol = _violations(system, u, f)
    cost = float(c_lin @ x)
    return _Iterate(x, u, cost, viol, cost + mu * math.fsum(viol.ravel()))


def _settled(system, lay, x, tol):
    # flows and pressures carry no cost, so re-solving the pipe equations
    # at fixed injections can only help the merit
    u, f = gasflow.settle(system, lay.take(x, "u"), lay.take(x, "f"), tol)
    x = x.copy()
    x[lay.cols("u")] = u
    x[lay.cols("f")] = f
    return x


def _true_cost_vector(lp: LpProblem, lay: Layout) -> np.ndarray:
    c = lp.c.copy()
    c[lay.cols("sp").ravel()] = 0.0
    c[lay.cols("sn").ravel()] = 0.0
    return c


def _hour_of(name: str):
    m = re.search(r"@t(\d+)$", name)
    return int(m.group(1)) if m else None


def _diagnose(system, prices, u0, lp, sol):
    rows = [lp.row_name(i) for i in sol.infeasible_rows]
    hours = []
    for t in range(system.horizon):
        sub, _ = build_lp(system, prices, u0, None, hours=[t])
        if solve_lp(sub).status == "infeasible":
            hours.append(t + 1)
    if not hours:
        hours = sorted({h for h in (_hour_of(r) for r in rows) if h is not None})
    return DispatchInfeasible(hours, rows)


def _decode(system, lay, x, prices, iterations, max_res, converged, bases=()) -> DispatchSolution:
    gen = lay.take(x, "pg")
    sup = lay.take(x, "s")
    tie = lay.take(x, "pt")
    gc, sc, rev, total = cost_terms(system, gen, sup, tie, prices)
    return DispatchSolution(
        system=system, prices=np.asarray(prices, dtype=float).copy(), generation=gen, wind=lay.take(x, "pw"),
        branch_flow=lay.take(x, "pl"), tie_flow=tie, angle=lay.take(x, "th"),
        external_angle=lay.take(x, "tz"), supply=sup, gas_flow=lay.take(x, "f"),
        pressure=np.sqrt(np.maximum(lay.take(x, "u"), 0.0)), generation_cost=gc, gas_cost=sc,
        export_revenue=rev, total_cost=total, iterations=iterations,
        max_weymouth_residual=max_res, converged=converged, lp_bases=tuple(bases),
    )


def solve_dispatch(problem: DispatchProblem):
    """Minimize zone-one cost at ``problem.prices``.

    Returns ``(DispatchSolution, SlpTrace)``. Raises :class:`DispatchInfeasible`
    when the linear constraints cannot be met and :class:`DispatchNotConverged`
    (carrying the best iterate) when ``max_iter`` runs out.
    """
    system, prices, st = problem.system, problem.prices, problem.settings
    T = system.horizon
    ulo, uhi = squared_pressure_bounds(system)
    span = uhi - ulo
    u0 = np.tile(0.5 * (ulo + uhi), (T, 1))
    radius = np.tile(st.trust_region_init * span, (T, 1))
    mu = st.penalty if st.penalty is not None else default_penalty(system, prices)
    trace = SlpTrace()
    inc: Optional[_Iterate] = None
    lay = None
    bumps = 0
    bases = []

    for it in range(1, st.max_iter + 1):
        lp, lay = build_lp(system, prices, u0, radius, penalty=mu)
        if it == 1 and problem.warm_start:
            start = problem.warm_start[0]
        else:
            start = bases[-1] if bases else None
        sol = solve_lp(lp, start=start)
        bases.append(sol.basis)
        if sol.status == "infeasible":
            raise _diagnose(system, prices, u0, lp, sol)
        if sol.status != "optimal":
            raise DispatchError(f"linearized dispatch LP is {sol.status}")
        c_true = _true_cost_vector(lp, lay)
        cand = _evaluate(system, lay, _settled(system, lay, sol.x, st.tol_flow), c_true, mu)
        r_now = float(np.max(radius / np.maximum(span, 1e-300))) if span.size else 0.0

        if inc is None:
            inc = cand
            u0 = cand.u.copy()
            trace.objective.append(cand.cost)
            trace.max_residual.append(cand.max_violation)
            trace.radius.append(r_now)
            trace.accepted.append(True)
            continue

        scale = max(1.0, abs(inc.cost))
        pred = inc.merit - sol.objective
        actual = inc.merit - cand.merit
        if pred <= st.tol_obj * scale:
            if inc.max_violation <= st.tol_flow:
                trace.objective.append(inc.cost)
                trace.max_residual.append(inc.max_violation)
                trace.radius.append(r_now)
                trace.accepted.append(False)
                return _decode(system, lay, inc.x, prices, it, inc.max_violation, True, bases), trace
            if bumps < 4:
                # stationary for the penalty function but not physical: stiffen mu
                mu *= 10.0
                bumps += 1
                inc = _evaluate(system, lay, inc.x, c_true, mu)
                trace.objective.append(inc.cost)
                trace.max_residual.append(inc.max_violation)
                trace.radius.append(r_now)
                trace.accepted.append(False)
                continue
        accept = actual > 0.0 and actual >= 0.1 * pred
        trace.objective.append(cand.cost)
        trace.max_residual.append(cand.max_violation)
        trace.radius.append(r_now)
        trace.accepted.append(bool(accept))
        if accept:
            step = np.abs(cand.u - inc.u)
            if actual >= 0.75 * pred and np.any(step >= 0.99 * radius):
                radius = np.minimum(2.0 * radius, np.tile(span, (T, 1)))
            prev = inc
            inc = cand
            u0 = cand.u.copy()
            if (cand.max_violation <= st.tol_flow
                    and abs(prev.merit - cand.merit) <= st.tol_obj * max(1.0, abs(cand.cost))):
                return _decode(system, lay, inc.x, prices, it, inc.max_violation, True, bases), trace
        else:
            radius = 0.5 * radius
            if np.all(radius <= 1e-12 * np.maximum(span, 1.0)):
                break

    best = _decode(system, lay, inc.x, prices, st.max_iter, inc.max_violation, False, bases)
    raise DispatchNotConverged(best, trace,
                               f"SLP did not converge in {st.max_iter} iterations "
                               f"(max Weymouth residual {inc.max_violation:.3g})")


def dispatch(system: CoupledSystem, prices, settings: Optional[SlpSettings] = None,
             warm_start: tuple = ()) -> DispatchSolution:
    """Convenience wrapper returning only the solution."""
    return solve_dispatch(DispatchProblem(system, prices, settings or SlpSettings(), warm_start))[0]


# --------------------------------------------------------------------------
# certification helpers

def power_balance_residual(solution: DispatchSolution) -> np.ndarray:
    """(T, buses) residual of the bus power balance, in MW."""
    s = solution.system
    LE = s.electric_load_matrix()
    res = -LE.copy()
    bidx = s.bus_index()
    for g, gen in enumerate(s.generators):
        res[:, bidx[gen.bus]] += solution.generation[:, g]
    for w, unit in enumerate(s.wind_units):
        res[:, bidx[unit.bus]] += solution.wind[:, w]
    for l, br in enumerate(s.branches):
        res[:, bidx[br.from_bus]] -= solution.branch_flow[:, l]
        res[:, bidx[br.to_bus]] += solution.branch_flow[:, l]
    for z, tl in enumerate(s.tie_lines):
        res[:, bidx[tl.from_bus]] -= solution.tie_flow[:, z]
    return res


def gas_balance_residual(solution: DispatchSolution) -> np.ndarray:
    """(T, nodes) residual of the nodal gas balance, in kSm3/h."""
    s = solution.system
    nidx = s.node_index()
    res = s.gas_load_matrix().copy()
    for a, p in enumerate(s.pipelines):
        res[:, nidx[p.from_node]] += solution.gas_flow[:, a]
        res[:, nidx[p.to_node]] -= solution.gas_flow[:, a]
    for k, sup in enumerate(s.suppliers):
        res[:, nidx[sup.node]] -= solution.supply[:, k]
    for g, gen in enumerate(s.generators):
        if gen.gas_link is not None:
            res[:, nidx[gen.gas_link.node]] += gen.gas_link.conversion * solution.generation[:, g]
    return res


def flow_definition_residual(solution: DispatchSolution) -> np.ndarray:
    """Max |P - base * (delta_i - delta_j) / x| over branches and ties, per hour (MW)."""
    s = solution.system
    bidx = s.bus_index()
    zones = {z: k for k, z in enumerate(s.external_zones())}
    out = np.zeros(s.horizon)
    for l, br in enumerate(s.branches):
        d = solution.angle[:, bidx[br.from_bus]] - solution.angle[:, bidx[br.to_bus]]
        out = np.maximum(out, np.abs(solution.branch_flow[:, l] - s.base_mva * d / br.reactance))
    for z, tl in enumerate(s.tie_lines):
        d = solution.angle[:, bidx[tl.from_bus]] - solution.external_angle[:, zones[tl.external_zone]]
        out = np.maximum(out, np.abs(solution.tie_flow[:, z] - s.base_mva * d / tl.reactance))
    return out


def weymouth_residuals(solution: DispatchSolution) -> np.ndarray:
    """(T, pipes) physics residuals from :func:`gasflow.pipeline_residual`."""
    return gasflow.residuals(solution.system, solution.pressure, solution.gas_flow)
