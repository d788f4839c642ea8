"""Brute-force reference solver for tiny systems.

Shares no assembly code with the LP-based dispatch. Per hour it enumerates
thermal, wind and export levels on a grid (one export, or one wind unit,
or one thermal unit absorbs the power balance), checks DC flows through a
PTDF matrix, and prices gas by enumerating supplier levels on a radial gas
network whose pipe flows follow from nodal balances. Pressure feasibility
for given flows is a system of difference constraints in squared
pressure, decided exactly by Bellman-Ford and certified with
:func:`gasflow.pipeline_residual`. Hours are chained by dynamic
programming over thermal output vectors, which enforces ramp limits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .gasflow import PressureState, pipeline_residual
from .model import CoupledSystem

TOL = 1e-9


class OracleError(RuntimeError):
    pass


class GridTooLarge(OracleError):
    pass


class NoFeasiblePoint(OracleError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Discretization per decision variable (keyed by entity id).

    Variables without an explicit step get ``default_points`` evenly spaced
    levels (``supply_points`` for gas suppliers, whose cost error scales with
    the much wider supply ranges). Axis end points are always included.
    """

    steps: Mapping[str, float] = field(default_factory=dict)
    default_points: int = 50
    supply_points: int = 1000
    max_points: int = 10 ** 7
    max_hours: int = 4

    def __post_init__(self):
        if any(not s > 0 for s in self.steps.values()):
            raise ValueError("grid steps must be positive")
        if min(self.default_points, self.supply_points) < 2 or self.max_points < 1:
            raise ValueError("need at least two points per axis and a positive cap")

    def axis(self, ident: str, lo: float, hi: float, points: Optional[int] = None) -> np.ndarray:
        if hi - lo <= TOL:
            return np.array([lo])
        step = self.steps.get(ident, (hi - lo) / ((points or self.default_points) - 1))
        k = int(math.floor((hi - lo) / step + 1e-9))
        vals = lo + step * np.arange(k + 1)
        if vals[-1] < hi - 1e-9:
            vals = np.append(vals, hi)
        return vals


def _product(axes):
    if not axes:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _radial_flows(system: CoupledSystem):
    """Matrix mapping nodal net injections to pipe flows on a radial gas network."""
    nodes, pipes = system.gas_nodes, system.pipelines
    if not nodes:
        return np.zeros((0, 0))
    if len(pipes) != len(nodes) - 1:
        raise OracleError("oracle needs a radial (tree) gas network")
    idx = system.node_index()
    A = np.zeros((len(nodes), len(pipes)))
    for a, p in enumerate(pipes):
        A[idx[p.from_node], a] = 1.0
        A[idx[p.to_node], a] = -1.0
    A_red = A[:-1]
    if len(pipes) and abs(np.linalg.det(A_red)) < 1e-12:
        raise OracleError("oracle needs a connected radial gas network")
    inv = np.linalg.inv(A_red) if len(pipes) else np.zeros((0, 0))
    # flows = inv @ injection[:-1]
    full = np.zeros((len(pipes), len(nodes)))
    full[:, :-1] = inv
    return full


def _ptdf(system: CoupledSystem) -> np.ndarray:
    """Branch MW flow per MW injected at each bus (withdrawn at the reference)."""
    buses, branches = system.buses, system.branches
    nb = len(buses)
    idx = system.bus_index()
    if not branches:
        return np.zeros((0, nb))
    Bbus = np.zeros((nb, nb))
    for br in branches:
        i, j, y = idx[br.from_bus], idx[br.to_bus], 1.0 / br.reactance
        Bbus[i, i] += y
        Bbus[j, j] += y
        Bbus[i, j] -= y
        Bbus[j, i] -= y
    ref = idx[system.reference_bus]
    keep = [k for k in range(nb) if k != ref]
    try:
        Xred = np.linalg.inv(Bbus[np.ix_(keep, keep)])
    except np.linalg.LinAlgError:
        raise OracleError("oracle needs a connected electric network") from None
    X = np.zeros((nb, nb))
    X[np.ix_(keep, keep)] = Xred
    out = np.zeros((len(branches), nb))
    for l, br in enumerate(branches):
        out[l] = (X[idx[br.from_bus]] - X[idx[br.to_bus]]) / br.reactance
    return out


def _pressure_feasible(system: CoupledSystem, flows: np.ndarray):
    """Vectorized difference-constraint check for (S, pipes) flows.

    Returns ``(ok[S], u[S, nodes])`` where ``u`` is the largest feasible
    squared-pressure vector.
    """
    nodes, pipes = system.gas_nodes, system.pipelines
    n = len(nodes)
    S = flows.shape[0]
    idx = system.node_index()
    lo = np.array([nd.pressure_min ** 2 for nd in nodes])
    hi = np.array([nd.pressure_max ** 2 for nd in nodes])
    # vertex 0 is the zero datum, node m is vertex m + 1; constraint x_a - x_b <= w
    edges = []
    for m in range(n):
        edges.append((m + 1, 0, np.full(S, hi[m])))
        edges.append((0, m + 1, np.full(S, -lo[m])))
    for a, p in enumerate(pipes):
        f = flows[:, a]
        d = np.sign(f) * (f / p.weymouth_const) ** 2
        i, j = idx[p.from_node] + 1, idx[p.to_node] + 1
        edges.append((i, j, d))
        if not p.has_compressor:
            edges.append((j, i, -d))
    dist = np.full((S, n + 1), np.inf)
    dist[:, 0] = 0.0
    for _ in range(n + 1):
        for a, b, w in edges:
            np.minimum(dist[:, a], dist[:, b] + w + TOL, out=dist[:, a])
    ok = np.ones(S, dtype=bool)
    for a, b, w in edges:
        ok &= dist[:, a] <= dist[:, b] + w + TOL + 1e-9
    ok &= dist[:, 0] >= -1e-9
    u = dist[:, 1:] - dist[:, :1]
    return ok, np.clip(u, lo, hi)


class _Enumeration:
    """Price-independent part of the brute force, reusable across price vectors."""

    def __init__(self, system: CoupledSystem, grid: GridSpec):
        T = system.horizon
        if T > grid.max_hours:
            raise OracleError(f"oracle handles at most {grid.max_hours} hours (got {T})")
        self.system = system
        self.grid = grid
        gens, winds, ties, sups = system.generators, system.wind_units, system.tie_lines, system.suppliers
        if not gens and not winds and not ties:
            raise OracleError("nothing to dispatch")
        self.flow_map = _radial_flows(system)
        self.ptdf = _ptdf(system)
        bidx = system.bus_index()
        nidx = system.node_index()
        LE, LG, WP = system.electric_load_matrix(), system.gas_load_matrix(), system.wind_profile_matrix()
        if ties:
            self.slack = ("tie", len(ties) - 1)
        elif winds:
            self.slack = ("wind", len(winds) - 1)
        elif gens:
            self.slack = ("gen", len(gens) - 1)
        gas_fired = [g for g, gen in enumerate(gens) if gen.gas_link is not None]
        self.gas_fired = gas_fired

        projected = 0
        self.hours = []
        for t in range(T):
            axes, kinds = [], []
            for g, gen in enumerate(gens):
                if self.slack != ("gen", g):
                    axes.append(grid.axis(gen.id, gen.p_min, gen.p_max))
                    kinds.append(("gen", g))
            for w, unit in enumerate(winds):
                if self.slack != ("wind", w):
                    axes.append(grid.axis(unit.id, unit.p_min, WP[t, w]))
                    kinds.append(("wind", w))
            for z, tl in enumerate(ties):
                if self.slack != ("tie", z):
                    axes.append(grid.axis(tl.id, 0.0, tl.export_limit))
                    kinds.append(("tie", z))
            size = int(np.prod([len(a) for a in axes])) if axes else 1
            sup_axes = [grid.axis(s.id, s.s_min, s.s_max, grid.supply_points) for s in sups[:-1]]
            sup_size = int(np.prod([len(a) for a in sup_axes])) if sup_axes else 1
            gf_size = int(np.prod([len(grid.axis(gens[g].id, gens[g].p_min, gens[g].p_max)) for g in gas_fired])) \
                if gas_fired else 1
            projected += size + gf_size * sup_size
            if projected > grid.max_points:
                raise GridTooLarge(f"projected grid of {projected} points exceeds cap {grid.max_points}")

            combos = _product(axes)
            Pg = np.zeros((combos.shape[0], len(gens)))
            Pw = np.zeros((combos.shape[0], len(winds)))
            Pt = np.zeros((combos.shape[0], len(ties)))
            target = {"gen": Pg, "wind": Pw, "tie": Pt}
            for col, (kind, k) in enumerate(kinds):
                target[kind][:, k] = combos[:, col]
            net = Pg.sum(1) + Pw.sum(1) - Pt.sum(1) - LE[t].sum()
            kind, k = self.slack
            if kind == "tie":
                target[kind][:, k] = net
                lo_s, hi_s = 0.0, ties[k].export_limit
            else:
                target[kind][:, k] = -net
                lo_s, hi_s = ((winds[k].p_min, WP[t, k]) if kind == "wind" else (gens[k].p_min, gens[k].p_max))
            val = target[kind][:, k]
            ok = (val >= lo_s - 1e-9) & (val <= hi_s + 1e-9)
            target[kind][:, k] = np.clip(val, lo_s, hi_s)

            inj = np.zeros((combos.shape[0], len(system.buses))) - LE[t]
            for g, gen in enumerate(gens):
                inj[:, bidx[gen.bus]] += Pg[:, g]
            for w, unit in enumerate(winds):
                inj[:, bidx[unit.bus]] += Pw[:, w]
            for z, tl in enumerate(ties):
                inj[:, bidx[tl.from_bus]] -= Pt[:, z]
            flows = inj @ self.ptdf.T
            lim = np.array([br.flow_limit for br in system.branches])
            if lim.size:
                ok &= np.all(np.abs(flows) <= lim + 1e-9, axis=1)

            Pg, Pw, Pt, flows = Pg[ok], Pw[ok], Pt[ok], flows[ok]
            gen_cost = Pg @ np.array([g.cost_coeff for g in gens]) if gens else np.zeros(Pg.shape[0])
            gas = self._gas_hour(t, Pg[:, gas_fired] if gas_fired else np.zeros((Pg.shape[0], 0)), LG, nidx)
            fixed = gen_cost + gas["cost"][gas["index"]]
            cidx = np.flatnonzero(np.isfinite(fixed))
            st, inv = np.unique(Pg[cidx], axis=0, return_inverse=True)
            self.hours.append({"Pg": Pg, "Pw": Pw, "Pt": Pt, "flows": flows,
                               "fixed_cost": fixed, "export": Pt.sum(1), "gas": gas,
                               "cidx": cidx, "states": st, "inv": np.asarray(inv).ravel()})
        self.projected = projected
        self._ramp_cache = {}

    def _gas_hour(self, t, gf, LG, nidx):
        system = self.system
        gens, sups, nodes = system.generators, system.suppliers, system.gas_nodes
        uniq, index = (np.unique(gf, axis=0, return_inverse=True) if gf.shape[1]
                       else (np.zeros((1, 0)), np.zeros(gf.shape[0], dtype=np.int64)))
        index = np.asarray(index).ravel()
        nu = uniq.shape[0]
        if not nodes:
            return {"index": index, "cost": np.zeros(nu), "supply": np.zeros((nu, 0)),
                    "flow": np.zeros((nu, 0)), "u": np.zeros((nu, 0))}
        load = np.tile(LG[t], (nu, 1))
        for col, g in enumerate(self.gas_fired):
            load[:, nidx[gens[g].gas_link.node]] += gens[g].gas_link.conversion * uniq[:, col]
        sup_axes = [self.grid.axis(s.id, s.s_min, s.s_max, self.grid.supply_points) for s in sups[:-1]]
        sgrid = _product(sup_axes)
        ns = sgrid.shape[0]
        # scenario = (unique gas-fired vector, supplier combo)
        S = np.zeros((nu, ns, len(sups)))
        if len(sups) > 1:
            S[:, :, :-1] = sgrid[None, :, :]
        ok = np.ones((nu, ns), dtype=bool)
        total_load = load.sum(1)
        if sups:
            last = sups[-1]
            slack = total_load[:, None] - S[:, :, :-1].sum(2)
            ok &= (slack >= last.s_min - 1e-9) & (slack <= last.s_max + 1e-9)
            S[:, :, -1] = np.clip(slack, last.s_min, last.s_max)
        else:
            ok &= np.abs(total_load)[:, None] <= 1e-9
        inj = -np.repeat(load[:, None, :], ns, axis=1)
        for k, s in enumerate(sups):
            inj[:, :, nidx[s.node]] += S[:, :, k]
        flat_inj = inj.reshape(nu * ns, len(nodes))
        flat_ok = ok.ravel()
        flows = flat_inj @ self.flow_map.T
        pf_ok, u = _pressure_feasible(system, flows)
        flat_ok &= pf_ok
        c = np.array([s.cost_coeff for s in sups])
        cost = (S.reshape(nu * ns, len(sups)) @ c) if sups else np.zeros(nu * ns)
        cost = np.where(flat_ok, cost, np.inf).reshape(nu, ns)
        best = np.argmin(cost, axis=1)
        rows = np.arange(nu)
        pick = rows * ns + best
        return {"index": index, "cost": cost[rows, best], "supply": S.reshape(nu * ns, -1)[pick],
                "flow": flows[pick], "u": u[pick]}

    def _ramp_ok(self, t):
        """Boolean (states at t-1, states at t) transition mask, cached."""
        if t not in self._ramp_cache:
            gens = self.system.generators
            up = np.array([g.ramp_up for g in gens])
            dn = np.array([g.ramp_down for g in gens])
            a, b = self.hours[t - 1]["states"], self.hours[t]["states"]
            ok = np.ones((a.shape[0], b.shape[0]), dtype=bool)
            for g in range(len(gens)):
                d = b[None, :, g] - a[:, None, g]
                ok &= (d <= up[g] + 1e-9) & (-d <= dn[g] + 1e-9)
            self._ramp_cache[t] = ok
        return self._ramp_cache[t]

    def solve(self, prices):
        prices = np.asarray(prices, dtype=float)
        gens = self.system.generators
        T = self.system.horizon
        states, choice, values, back = [], [], [], []
        for t, h in enumerate(self.hours):
            if h["cidx"].size == 0:
                raise NoFeasiblePoint(f"no feasible grid point in hour {t + 1}")
            cost = h["fixed_cost"][h["cidx"]] - prices[t] * h["export"][h["cidx"]]
            inv = h["inv"]
            # stable sort by (state, cost, position): first entry per state is its cheapest combo
            order = np.lexsort((np.arange(cost.size), cost, inv))
            first = order[np.r_[True, inv[order][1:] != inv[order][:-1]]]
            states.append(h["states"])
            choice.append(h["cidx"][first])
            values.append(cost[first])

        init_ok = np.ones(states[0].shape[0], dtype=bool)
        if T > 1:
            for g, gen in enumerate(gens):
                if gen.initial_output is not None:
                    d = states[0][:, g] - gen.initial_output
                    init_ok &= (d <= gen.ramp_up + 1e-9) & (-d <= gen.ramp_down + 1e-9)
        V = np.where(init_ok, values[0], np.inf)
        for t in range(1, T):
            total = np.where(self._ramp_ok(t), V[:, None], np.inf)
            prev = np.argmin(total, axis=0)
            V = total[prev, np.arange(states[t].shape[0])] + values[t]
            back.append(prev)
        if not np.any(np.isfinite(V)):
            raise NoFeasiblePoint("no ramp-feasible trajectory on the grid")
        s = int(np.argmin(V))
        path = [s]
        for prev in reversed(back):
            s = int(prev[s])
            path.append(s)
        path.reverse()
        return self._point(path, choice, prices)

    def _point(self, path, choice, prices):
        system = self.system
        T = system.horizon
        out = {k: [] for k in ("generation", "wind", "tie_flow", "branch_flow", "supply", "gas_flow", "pressure")}
        for t in range(T):
            h = self.hours[t]
            c = choice[t][path[t]]
            out["generation"].append(h["Pg"][c])
            out["wind"].append(h["Pw"][c])
            out["tie_flow"].append(h["Pt"][c])
            out["branch_flow"].append(h["flows"][c])
            gi = h["gas"]["index"][c]
            out["supply"].append(h["gas"]["supply"][gi])
            out["gas_flow"].append(h["gas"]["flow"][gi])
            out["pressure"].append(np.sqrt(h["gas"]["u"][gi]))
        point = {k: np.array(v).reshape(T, -1) for k, v in out.items()}
        self._certify(point)
        b = [g.cost_coeff for g in system.generators]
        c = [s.cost_coeff for s in system.suppliers]
        terms = []
        for t in range(T):
            terms += [point["generation"][t, g] * b[g] for g in range(len(b))]
            terms += [point["supply"][t, k] * c[k] for k in range(len(c))]
            terms += [-point["tie_flow"][t, z] * prices[t] for z in range(point["tie_flow"].shape[1])]
        return math.fsum(terms), point

    def _certify(self, point):
        system = self.system
        for t in range(system.horizon):
            state = PressureState({n.id: float(point["pressure"][t, m]) for m, n in enumerate(system.gas_nodes)})
            for a, pipe in enumerate(system.pipelines):
                r = pipeline_residual(pipe, state, float(point["gas_flow"][t, a]))
                if abs(r) > 1e-6 * max(1.0, abs(point["gas_flow"][t, a])):
                    raise OracleError(f"oracle point fails pipe {pipe.id} physics at hour {t + 1} (residual {r:.3g})")


def brute_force_dispatch(system: CoupledSystem, prices, grid: Optional[GridSpec] = None):
    """Exhaustive minimum of zone-one cost over the grid.

    Returns ``(best_cost, best_point)`` where ``best_point`` maps quantity
    names (``generation``, ``wind``, ``tie_flow``, ``branch_flow``,
    ``supply``, ``gas_flow``, ``pressure``) to (T, n) arrays.
    """
    return _Enumeration(system, grid or GridSpec()).solve(prices)


def brute_force_horizon(system: CoupledSystem, forecast, target, alpha_grid_step: float,
                        grid: Optional[GridSpec] = None, alpha_max: float = 2.0) -> float:
    """Scan the uncertainty horizon on a grid and return the boundary value.

    ``target`` needs ``mode`` (``"robust"``/``"opportunity"``) and
    ``cost_target``. Robust: the largest scanned alpha in [0, 1] before the
    first one whose cost exceeds the target. Opportunity: the first scanned
    alpha in [0, alpha_max] whose cost meets the target.
    """
    if not alpha_grid_step > 0:
        raise ValueError("alpha_grid_step must be positive")
    lam = np.asarray(getattr(forecast, "lambda_tilde", forecast), dtype=float)
    enum = _Enumeration(system, grid or GridSpec())
    top = 1.0 if target.mode == "robust" else alpha_max
    n = int(math.floor(top / alpha_grid_step + 1e-9))
    alphas = [k * alpha_grid_step for k in range(n + 1)]
    if target.mode == "robust":
        best = 0.0
        for a in alphas:
            cost, _ = enum.solve((1.0 - a) * lam)
            if cost > target.cost_target:
                return best
            best = a
        return best
    for a in alphas:
        cost, _ = enum.solve((1.0 + a) * lam)
        if cost <= target.cost_target:
            return a
    raise NoFeasiblePoint(f"opportunity target {target.cost_target} not reached up to alpha {alpha_max}")
