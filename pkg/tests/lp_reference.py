"""Reference LP answers by vertex enumeration (tiny problems only)."""
import itertools

import numpy as np

from coupled_igdt.lp import LpProblem

SENSES = ("<=", ">=", "==")


def vertex_optimum(c, A, senses, b, lb, ub, tol=1e-7):
    """Best objective over all basic feasible points, or None if infeasible."""
    n = len(c)
    cons = [(A[i], b[i]) for i in range(len(b))]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cons += [(e, lb[j]), (e, ub[j])]
    best = None
    for combo in itertools.combinations(range(len(cons)), n):
        M = np.array([cons[k][0] for k in combo])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, np.array([cons[k][1] for k in combo]))
        if np.any(x < lb - tol) or np.any(x > ub + tol):
            continue
        act = A @ x if len(b) else np.zeros(0)
        ok = all((s != "<=" or act[i] <= b[i] + tol) and (s != ">=" or act[i] >= b[i] - tol)
                 and (s != "==" or abs(act[i] - b[i]) <= tol) for i, s in enumerate(senses))
        if ok:
            val = float(c @ x)
            best = val if best is None else min(best, val)
    return best


def random_lp(rng, max_vars=4, max_rows=4):
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(0, max_rows + 1))
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) * 2
    senses = [SENSES[k] for k in rng.choice(3, size=m, p=[0.45, 0.45, 0.1])]
    lb = -rng.uniform(0, 5, n)
    ub = rng.uniform(0, 5, n)
    return (c, A, senses, b, lb, ub), LpProblem.from_dense(c, A, senses, b, lb, ub)


def dual_objective(problem, sol):
    """Lagrangian dual value built from row prices and reduced costs.

    Equals the primal optimum for an optimal basis with consistent duals.
    """
    val = float(np.dot(sol.duals, problem.rhs))
    for j, d in enumerate(sol.reduced_costs):
        if d > 1e-12:
            val += d * problem.lb[j]
        elif d < -1e-12:
            val += d * problem.ub[j]
    return val


def dual_sign_ok(problem, sol, tol=1e-9):
    for s, y in zip(problem.senses, sol.duals):
        if s == "<=" and y > tol:
            return False
        if s == ">=" and y < -tol:
            return False
    return True
