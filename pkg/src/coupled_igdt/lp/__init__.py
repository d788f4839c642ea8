"""Self-contained bounded-variable linear programming."""
from ._backend import BACKEND, available as available_backends
from .problem import LpError, LpNumericalError, LpProblem, LpSolution, dump_lp
from .simplex import FEAS_TOL, OPT_TOL, solve_lp

__all__ = [
    "BACKEND", "available_backends", "LpError", "LpNumericalError", "LpProblem",
    "LpSolution", "dump_lp", "solve_lp", "FEAS_TOL", "OPT_TOL",
]
