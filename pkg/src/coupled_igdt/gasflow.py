"""Steady-state pipeline physics: Weymouth flow, residuals and linearization.

Flows are signed: positive means ``from_node -> to_node``. Linearizations
are taken in squared-pressure space ``u = pi**2`` where the Weymouth
relation reads ``f = sgn(du) * C * sqrt(|du|)`` with ``du = u_m - u_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .model import Pipeline

EPS_SMOOTH = 1e-3  # bar^4, half-width of the band around du = 0


def weymouth_flow(pi_m, pi_n, C):
    """Passive pipeline flow for end pressures ``pi_m``, ``pi_n`` (bar).

    Works elementwise on arrays. Equal pressures give zero flow.
    """
    pi_m = np.asarray(pi_m, dtype=float)
    pi_n = np.asarray(pi_n, dtype=float)
    du = pi_m * pi_m - pi_n * pi_n
    out = np.where(pi_m >= pi_n, 1.0, -1.0) * C * np.sqrt(np.abs(du))
    return float(out) if out.ndim == 0 else out


def weymouth_flow_u(u_m, u_n, C):
    """Same as :func:`weymouth_flow` but for squared pressures."""
    du = np.asarray(u_m, dtype=float) - np.asarray(u_n, dtype=float)
    out = np.where(du >= 0, 1.0, -1.0) * C * np.sqrt(np.abs(du))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PressureState:
    """Nodal pressures (bar) at one hour, keyed by gas node id."""

    pressures: Mapping[str, float]

    def __getitem__(self, node: str) -> float:
        return self.pressures[node]

    def within(self, nodes, tol: float = 0.0) -> bool:
        return all(n.pressure_min - tol <= self.pressures[n.id] <= n.pressure_max + tol for n in nodes)


def pipeline_residual(pipe: Pipeline, state: PressureState, f: float) -> float:
    """Physics residual of flow ``f`` on ``pipe`` at pressures ``state``.

    Passive pipes: ``f - weymouth``; zero iff the Weymouth equation holds.
    Compressor pipes only need ``f >= weymouth``, so the residual is
    ``min(0, f - weymouth)``.
    """
    passive = weymouth_flow(state[pipe.from_node], state[pipe.to_node], pipe.weymouth_const)
    r = f - passive
    if pipe.has_compressor:
        return min(0.0, r)
    return r


def linearize_weymouth(pipe: Pipeline, u_m0: float, u_n0: float, eps: float = EPS_SMOOTH):
    """Affine model ``f ~ a + b_m * u_m + b_n * u_n`` around ``(u_m0, u_n0)``.

    Outside ``|du| < eps`` this is the exact first-order expansion. Inside
    the band the slope is capped at the secant value ``C / sqrt(eps)`` and the
    intercept keeps the model exact at the expansion point (``a = 0`` at
    ``du = 0``), so successive linearizations stay consistent near zero flow.
    """
    C = pipe.weymouth_const
    du = u_m0 - u_n0
    if abs(du) < eps:
        s = C / math.sqrt(eps)
        f0 = math.copysign(C * math.sqrt(abs(du)), du) if du else 0.0
        return f0 - s * du, s, -s
    root = math.sqrt(abs(du))
    s = C / (2.0 * root)
    sign = 1.0 if du >= 0 else -1.0
    a = sign * C * root - s * du
    return a, s, -s


def linearize_many(C, u_m0, u_n0, eps: float = EPS_SMOOTH):
    """Vectorized :func:`linearize_weymouth` over arrays of pipes/hours."""
    C = np.asarray(C, dtype=float)
    du = np.asarray(u_m0, dtype=float) - np.asarray(u_n0, dtype=float)
    band = np.abs(du) < eps
    root = np.sqrt(np.where(band, eps, np.abs(du)))
    slope = np.where(band, C / math.sqrt(eps), C / (2.0 * root))
    f0 = np.where(du >= 0, 1.0, -1.0) * C * np.sqrt(np.abs(du))
    a = f0 - slope * du
    return a, slope, -slope


def residuals(system, pressures: np.ndarray, flows: np.ndarray) -> np.ndarray:
    """Residuals for every (hour, pipeline); arrays are (T, nodes) and (T, pipes)."""
    idx = system.node_index()
    out = np.zeros_like(flows, dtype=float)
    for t in range(flows.shape[0]):
        state = PressureState({n.id: float(pressures[t, idx[n.id]]) for n in system.gas_nodes})
        for a, pipe in enumerate(system.pipelines):
            out[t, a] = pipeline_residual(pipe, state, float(flows[t, a]))
    return out


def _incidence(system):
    idx = system.node_index()
    A = np.zeros((len(system.gas_nodes), len(system.pipelines)))
    for a, p in enumerate(system.pipelines):
        A[idx[p.from_node], a] = 1.0
        A[idx[p.to_node], a] = -1.0
    return A


def _flow_violation(A, C, comp, u, f):
    w = weymouth_flow_u(A.clip(0).T @ u, (-A).clip(0).T @ u, C)
    return np.where(comp, np.maximum(0.0, w - f), np.abs(f - w))


def settle(system, u: np.ndarray, f: np.ndarray, tol: float, max_iter: int = 50):
    """Re-solve the pipeline equations with nodal injections held fixed.

    ``u`` (T, nodes) squared pressures and ``f`` (T, pipes) flows, typically
    from a linearized model. Per hour, Newton steps on the smooth inverse
    relation ``u_m - u_n = f |f| / C**2`` move flows only around loops (net
    injections are unchanged) and pick the minimum-norm pressure correction.
    Compressor arcs with room to spare keep their flow; violated ones are
    solved as equalities. Returns new ``(u, f)``; an hour is left untouched
    when its pressures cannot be kept inside bounds or its violation does
    not drop.
    """
    u = np.array(u, dtype=float)
    f = np.array(f, dtype=float)
    P = len(system.pipelines)
    if P == 0:
        return u, f
    A = _incidence(system)
    C = np.array([p.weymouth_const for p in system.pipelines])
    comp = np.array([p.has_compressor for p in system.pipelines])
    lo = np.array([n.pressure_min ** 2 for n in system.gas_nodes])
    hi = np.array([n.pressure_max ** 2 for n in system.gas_nodes])
    N = A.shape[0]
    target = 1e-3 * tol
    for t in range(u.shape[0]):
        u0, f0 = u[t].copy(), f[t].copy()
        best = _flow_violation(A, C, comp, u0, f0).max()
        if best <= target:
            continue
        ut, ft = u0.copy(), f0.copy()
        active = ~comp | (_flow_violation(A, C, comp, ut, ft) > 0)
        for _ in range(3):
            for _ in range(max_iter):
                du = A.T @ ut
                r = np.where(active, du - ft * np.abs(ft) / C ** 2, 0.0)
                viol = _flow_violation(A, C, comp, ut, ft)
                if viol.max() <= target:
                    break
                # unknowns: flows on equality arcs, then every pressure
                k = int(active.sum())
                J = np.zeros((N + k, k + N))
                J[:N, :k] = A[:, active]
                J[N + np.arange(k), np.arange(k)] = -2.0 * np.abs(ft[active]) / C[active] ** 2
                J[N:, k:] = A.T[active]
                step = np.linalg.lstsq(J, np.concatenate([np.zeros(N), -r[active]]), rcond=None)[0]
                ft[active] += step[:k]
                ut = ut + step[k:]
            grown = ~active & (_flow_violation(A, C, comp, ut, ft) > 0)
            if not grown.any():
                break
            active |= grown
        # a uniform shift keeps every pressure difference
        shift_lo, shift_hi = np.max(lo - ut), np.min(hi - ut)
        if shift_lo > shift_hi:
            continue
        ut = ut + min(max(0.0, shift_lo), shift_hi)
        viol = _flow_violation(A, C, comp, ut, ft).max()
        if viol < best:
            u[t], f[t] = ut, ft
    return u, f
