"""Linear program container types and a plain-text dump for triage."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SENSES = ("<=", "==", ">=")


class LpError(ValueError):
    """Malformed linear program."""


class LpNumericalError(RuntimeError):
    """The simplex could not finish (iteration limit or singular basis)."""


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Minimize ``c @ x`` s.t. ``sum_k vals[k] * x[cols[k]]  (sense) rhs[rows[k]]``.

    The constraint matrix is given in triplet form; duplicate entries are
    summed. Bounds may be infinite.
    """

    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    var_names: Optional[tuple] = None
    row_names: Optional[tuple] = None

    def __post_init__(self):
        for name, dtype in (("c", float), ("vals", float), ("rhs", float),
                            ("lb", float), ("ub", float),
                            ("rows", np.int64), ("cols", np.int64)):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=dtype).ravel())
        object.__setattr__(self, "senses", tuple(self.senses))
        n, m = self.c.size, self.rhs.size
        problems = []
        if not (self.rows.size == self.cols.size == self.vals.size):
            problems.append("triplet arrays differ in length")
        if len(self.senses) != m:
            problems.append(f"{len(self.senses)} senses for {m} rows")
        if self.lb.size != n or self.ub.size != n:
            problems.append("bound vectors do not match the number of variables")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= m):
            problems.append("row index out of range")
        if self.cols.size and (self.cols.min() < 0 or self.cols.max() >= n):
            problems.append("column index out of range")
        if not np.all(np.isfinite(self.c)):
            problems.append("objective has non-finite coefficients")
        if not np.all(np.isfinite(self.vals)) or not np.all(np.isfinite(self.rhs)):
            problems.append("constraint data has non-finite entries")
        bad = [s for s in self.senses if s not in SENSES]
        if bad:
            problems.append(f"unknown row sense {bad[0]!r}")
        if self.lb.size == n and self.ub.size == n and np.any(self.lb > self.ub):
            j = int(np.flatnonzero(self.lb > self.ub)[0])
            problems.append(f"variable {self.var_name(j)} has lower bound above upper bound")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            problems.append("bounds must not be +inf below or -inf above")
        if self.var_names is not None and len(self.var_names) != n:
            problems.append("var_names length mismatch")
        if self.row_names is not None and len(self.row_names) != m:
            problems.append("row_names length mismatch")
        if problems:
            raise LpError("; ".join(problems))

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def var_name(self, j: int) -> str:
        return self.var_names[j] if self.var_names is not None else f"x{j}"

    def row_name(self, i: int) -> str:
        return self.row_names[i] if self.row_names is not None else f"r{i}"

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n_rows, self.n_vars))
        np.add.at(a, (self.rows, self.cols), self.vals)
        return a

    @classmethod
    def from_dense(cls, c, a, senses: Sequence[str], rhs, lb, ub, **names) -> "LpProblem":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.size == 0:
            a = np.zeros((len(senses), len(c)))
        r, k = np.nonzero(a)
        return cls(c, r, k, a[r, k], tuple(senses), rhs, lb, ub, **names)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    iterations: int = 0
    phase1_residual: float = 0.0
    infeasible_rows: tuple = field(default_factory=tuple)
    basis: Optional[np.ndarray] = None  # variable then row statuses; reusable as ``start``

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _num(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def dump_lp(problem: LpProblem) -> str:
    """Render ``problem`` in a small LP-like text format (rows sorted by index)."""
    a = problem.dense()
    lines = ["minimize"]
    terms = [f"{_num(cj)} {problem.var_name(j)}" for j, cj in enumerate(problem.c) if cj != 0.0]
    lines.append("  obj: " + (" + ".join(terms) if terms else "0"))
    lines.append("subject to")
    for i in range(problem.n_rows):
        nz = np.flatnonzero(a[i])
        lhs = " + ".join(f"{_num(a[i, j])} {problem.var_name(j)}" for j in nz) or "0"
        lines.append(f"  {problem.row_name(i)}: {lhs} {problem.senses[i]} {_num(problem.rhs[i])}")
    lines.append("bounds")
    for j in range(problem.n_vars):
        lines.append(f"  {_num(problem.lb[j])} <= {problem.var_name(j)} <= {_num(problem.ub[j])}")
    lines.append("end")
    return "\n".join(lines) + "\n"
