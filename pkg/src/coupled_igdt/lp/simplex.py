"""Two-phase bounded-variable revised simplex driver.

Rows are turned into equalities ``A x - r = 0`` with a logical variable
``r_i`` per row whose bounds carry the row sense. Rows that the starting
point violates get an artificial column; phase one drives those to zero.
The iteration kernel itself lives in ``_simplex_c`` (compiled) or
``_simplex_py`` (fallback); this module only orchestrates phases,
refactorization and result extraction.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import _backend
from ._sparse import Csc, inverse
from ._simplex_py import AT_LOWER, AT_UPPER, AT_ZERO, BASIC, OPTIMAL, PAUSED, UNBOUNDED
from .problem import LpNumericalError, LpProblem, LpSolution

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIV_TOL = 1e-11
BLAND_AFTER = 50
REFACTOR_EVERY = 100  # minimum; large bases refactor every m // 2 pivots


class _State:
    """Mutable working arrays shared by both phases."""

    def __init__(self, M, lb, ub, x, status, basis, binv):
        self.M, self.lb, self.ub = M, lb, ub
        self.x, self.status, self.basis, self.binv = x, status, basis, binv
        self.iterations = 0
        self.streak = 0

    def refactor(self):
        try:
            self.binv = inverse(self.M, self.basis)
        except np.linalg.LinAlgError as exc:
            raise LpNumericalError("basis became singular") from exc
        xn = np.where(self.status != BASIC, self.x, 0.0)
        self.x[self.basis] = -(self.binv @ self.M.matvec(xn))


def _run_phase(state: _State, cost: np.ndarray, kernel, iter_cap: int) -> int:
    used = 0
    polish = 0
    # a dense refactor costs O(m^3) against O(m^2) per pivot
    every = max(REFACTOR_EVERY, state.basis.size // 2)
    while True:
        budget = min(every, iter_cap - used)
        if budget <= 0:
            raise LpNumericalError(f"simplex iteration limit ({iter_cap}) exhausted")
        M = state.M
        code, its, state.streak = kernel.iterate(
            M.indptr, M.indices, M.data, cost, state.lb, state.ub, state.x, state.status, state.basis,
            state.binv, budget, FEAS_TOL, OPT_TOL, PIV_TOL, BLAND_AFTER, state.streak,
        )
        used += its
        state.iterations += its
        state.refactor()
        if code == PAUSED:
            continue
        if code == UNBOUNDED:
            return UNBOUNDED
        # confirm optimality on the freshly factored basis
        y = cost[state.basis] @ state.binv
        d = cost - state.M.rmatvec(y)
        st = state.status
        movable = state.ub > state.lb
        bad = movable & (((st == AT_LOWER) & (d < -OPT_TOL)) | ((st == AT_UPPER) & (d > OPT_TOL))
                         | ((st == AT_ZERO) & (np.abs(d) > OPT_TOL)))
        if not bad.any() or polish >= 3:
            return OPTIMAL
        polish += 1


def _row_bounds(senses, rhs):
    lo = np.where([s == "<=" for s in senses], -np.inf, rhs) if len(senses) else np.zeros(0)
    hi = np.where([s == ">=" for s in senses], np.inf, rhs) if len(senses) else np.zeros(0)
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def _warm_state(A: Csc, n, m0, rows, lb, ub, lo, hi, scale, start):
    """Working state for a caller-supplied basis, or None if it is unusable.

    ``start`` is the ``basis`` array of an earlier :class:`LpSolution` for a
    problem of the same shape. It is used only when it gives a nonsingular,
    primal feasible basis for the current data; phase one is then skipped.
    """
    m = rows.size
    start = np.asarray(start)
    if start.shape != (n + m0,):
        return None
    st = np.concatenate([start[:n], start[n + rows]]).astype(np.int8)
    if np.count_nonzero(st == BASIC) != m:
        return None
    full_lb, full_ub = np.concatenate([lb, lo]), np.concatenate([ub, hi])
    fin_lo, fin_hi = np.isfinite(full_lb), np.isfinite(full_ub)
    # nonbasic positions must sit on a bound that still exists
    fallback = np.where(fin_lo, AT_LOWER, np.where(fin_hi, AT_UPPER, AT_ZERO)).astype(np.int8)
    wrong = (st != BASIC) & (((st == AT_LOWER) & ~fin_lo) | ((st == AT_UPPER) & ~fin_hi)
                             | ((st == AT_ZERO) & (fin_lo | fin_hi)))
    st[wrong] = fallback[wrong]
    x = np.where(st == AT_LOWER, full_lb, np.where(st == AT_UPPER, full_ub, 0.0))
    M = A.hstack_unit(np.arange(m), -np.ones(m))
    state = _State(M, full_lb, full_ub, x, st, np.flatnonzero(st == BASIC).astype(np.int64), None)
    try:
        state.refactor()
    except LpNumericalError:
        return None
    tol = FEAS_TOL * np.concatenate([1.0 + np.abs(np.where(np.isfinite(lb), lb, 0.0))
                                     + np.abs(np.where(np.isfinite(ub), ub, 0.0)), scale])
    xb, b = state.x[state.basis], state.basis
    if np.any(xb < full_lb[b] - tol[b]) or np.any(xb > full_ub[b] + tol[b]):
        return None
    return state


def solve_lp(problem: LpProblem, *, backend: Optional[str] = None, start=None) -> LpSolution:
    """Solve ``problem`` to optimality, or report infeasible / unbounded.

    ``backend`` selects ``"cython"`` or ``"python"``; default is whichever
    was chosen at import (see ``coupled_igdt.lp.BACKEND``). ``start`` may
    carry the ``basis`` of an earlier solution of a same-shaped problem;
    it is tried first and silently dropped if infeasible for this one.
    """
    kernel = _backend.kernel(backend)
    n, m0 = problem.n_vars, problem.n_rows
    A_full = Csc.from_triplets(problem.rows, problem.cols, problem.vals, (m0, n))
    rlo, rhi = _row_bounds(problem.senses, problem.rhs)

    # drop rows without coefficients after checking 0 satisfies them
    keep = A_full.row_nonempty() if m0 else np.zeros(0, dtype=bool)
    empty_bad = [i for i in np.flatnonzero(~keep) if rlo[i] > FEAS_TOL or rhi[i] < -FEAS_TOL]
    if empty_bad:
        return LpSolution("infeasible", phase1_residual=float(max(rlo[empty_bad].max(initial=0), -rhi[empty_bad].min(initial=0))),
                          infeasible_rows=tuple(int(i) for i in empty_bad))
    rows = np.flatnonzero(keep)
    A = A_full.select_rows(rows)
    lo, hi = rlo[rows], rhi[rows]
    m = rows.size

    lb = problem.lb.copy()
    ub = problem.ub.copy()
    scale = 1.0 + np.maximum(np.abs(np.where(np.isfinite(lo), lo, 0.0)), np.abs(np.where(np.isfinite(hi), hi, 0.0)))
    state = None if start is None else _warm_state(A, n, m0, rows, lb, ub, lo, hi, scale, start)
    if state is None:
        state = _cold_state(A, n, lb, ub, lo, hi, scale)
    N = state.x.size
    iter_cap = 50 * (m + N) + 1000

    if N > n + m:
        art_rows = state.art_rows
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        _run_phase(state, cost1, kernel, iter_cap)
        art = state.x[n + m:]
        tol = FEAS_TOL * scale[art_rows]
        if np.any(art > tol):
            bad = rows[art_rows[art > tol]]
            return LpSolution("infeasible", phase1_residual=float(math.fsum(np.maximum(art, 0.0))),
                              iterations=state.iterations,
                              infeasible_rows=tuple(int(i) for i in bad))
        state.ub[n + m:] = 0.0
        state.x[n + m:] = 0.0
        state.status[n + m:] = np.where(state.status[n + m:] == BASIC, BASIC, AT_LOWER)
        _drive_out_artificials(state, n + m)

    cost2 = np.zeros(N)
    cost2[:n] = problem.c
    code = _run_phase(state, cost2, kernel, iter_cap)
    if code == UNBOUNDED:
        return LpSolution("unbounded", iterations=state.iterations)

    xs = state.x[:n].copy()
    y = cost2[state.basis] @ state.binv
    d = problem.c - A.rmatvec(y)
    duals = np.zeros(m0)
    duals[rows] = y
    obj = math.fsum(problem.c * xs)
    basis = None
    if not np.any(state.status[n + m:] == BASIC):
        basis = np.full(n + m0, AT_LOWER, dtype=np.int8)
        basis[:n] = state.status[:n]
        basis[n + rows] = state.status[n:n + m]
    return LpSolution("optimal", x=xs, objective=obj, duals=duals, reduced_costs=d,
                      iterations=state.iterations, basis=basis)


def _cold_state(A: Csc, n, lb, ub, lo, hi, scale) -> _State:
    """Slack basis at the bound-nearest point, with artificials on violated rows."""
    m = A.shape[0]
    x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    status = np.where(np.isfinite(lb), AT_LOWER, np.where(np.isfinite(ub), AT_UPPER, AT_ZERO)).astype(np.int8)
    act = A.matvec(x)
    below = act < lo - FEAS_TOL * scale
    above = act > hi + FEAS_TOL * scale
    art_rows = np.flatnonzero(below | above)
    k = art_rows.size

    r_val = np.clip(act, lo, hi)
    target = np.where(below, lo, np.where(above, hi, act))
    r_val[art_rows] = target[art_rows]
    sign = -np.sign(act[art_rows] - target[art_rows])
    M = A.hstack_unit(np.arange(m), -np.ones(m)).hstack_unit(art_rows, sign)
    full_lb = np.concatenate([lb, lo, np.zeros(k)])
    full_ub = np.concatenate([ub, hi, np.full(k, np.inf)])
    full_x = np.concatenate([x, r_val, np.abs(act[art_rows] - target[art_rows])])
    full_status = np.concatenate([status, np.full(m, BASIC, dtype=np.int8), np.full(k, BASIC, dtype=np.int8)])

    basis = n + np.arange(m, dtype=np.int64)
    basis[art_rows] = n + m + np.arange(k)
    full_status[n + art_rows] = np.where(below[art_rows], AT_LOWER, AT_UPPER).astype(np.int8)
    state = _State(M, full_lb, full_ub, full_x, full_status, basis, None)
    state.art_rows = art_rows
    state.refactor()
    return state


def _drive_out_artificials(state: _State, first_art: int) -> None:
    """Pivot zero-level artificials out of the basis where a pivot exists."""
    for p in range(state.basis.size):
        if state.basis[p] < first_art:
            continue
        row = state.M.rmatvec(state.binv[p])[:first_art]
        row[state.status[:first_art] == BASIC] = 0.0
        j = int(np.argmax(np.abs(row))) if row.size else 0
        if row.size == 0 or abs(row[j]) < 1e-7:
            continue
        idx, vals = state.M.column(j)
        alpha = state.binv[:, idx] @ vals
        leave = state.basis[p]
        piv_row = state.binv[p] / alpha[p]
        state.binv -= np.outer(alpha, piv_row)
        state.binv[p] = piv_row
        state.basis[p] = j
        state.status[j] = BASIC
        state.status[leave] = AT_LOWER
        state.x[leave] = 0.0
    state.refactor()
