"""Information-gap robustness and opportunity analysis of market-price risk.

Prices are uncertain inside the fractional envelope
``|lambda_t - forecast_t| <= alpha * forecast_t``. The worst case for an
exporting zone is the lower edge of the envelope and the best case is the
upper edge. The minimum dispatch cost is therefore monotone in ``alpha``
along each edge, so both horizons are found by bisection with one dispatch
solve per step.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispatch import DispatchError, DispatchSolution, SlpSettings, dispatch
from .model import CoupledSystem, PriceForecast

MODES = ("robust", "opportunity")
TOL_ALPHA = 1e-4
ALPHA_MAX = 2.0
# slack on "cost meets target" so a target equal to B_0 is met at alpha = 0
_MEET_RTOL = 1e-9


@dataclass(frozen=True)
class UncertaintyEnvelope:
    alpha: float
    forecast: PriceForecast

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0 (got {self.alpha})")

    def bounds(self):
        """Per-hour ``(lower, upper)`` price arrays."""
        lam = self.forecast.as_array()
        return (1.0 - self.alpha) * lam, (1.0 + self.alpha) * lam

    def contains(self, prices, tol: float = 1e-12) -> bool:
        lo, hi = self.bounds()
        p = np.asarray(prices, dtype=float)
        return bool(np.all(p >= lo - tol) and np.all(p <= hi + tol))


@dataclass(frozen=True)
class IgdtTarget:
    mode: str
    deviation_factor: float
    base_cost: float

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES} (got {self.mode!r})")
        if not self.deviation_factor >= 0:
            raise ValueError(f"deviation factor must be >= 0 (got {self.deviation_factor})")
        if self.mode == "opportunity" and not self.deviation_factor < 1:
            raise ValueError(f"rho must be < 1 (got {self.deviation_factor})")
        if not math.isfinite(self.base_cost):
            raise ValueError("base cost must be finite")

    @property
    def cost_target(self) -> float:
        if self.mode == "robust":
            return (1.0 + self.deviation_factor) * self.base_cost
        return (1.0 - self.deviation_factor) * self.base_cost


@dataclass
class IgdtResult:
    target: IgdtTarget
    horizon_opt: float
    certificate_solution: Optional[DispatchSolution]
    trace: list = field(default_factory=list)  # (lo, hi, alpha, cost) per evaluation
    saturated: bool = False
    unreachable: bool = False
    violated_at_zero: bool = False
    monotone: bool = True
    error: Optional[str] = None

    @property
    def factor(self) -> float:
        return self.target.deviation_factor

    @property
    def certificate_cost(self) -> float:
        return math.nan if self.certificate_solution is None else self.certificate_solution.total_cost

    def aggregates(self) -> dict:
        if self.certificate_solution is None:
            return {"P_iz_MW": math.nan, "P_g_MW": math.nan, "S_k_1e6Sm3": math.nan}
        return self.certificate_solution.totals()


def critical_prices(forecast: PriceForecast, alpha: float, mode: str) -> np.ndarray:
    """Worst-case (robust) or best-case (opportunity) prices at horizon ``alpha``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES} (got {mode!r})")
    if not alpha >= 0:
        raise ValueError(f"alpha must be >= 0 (got {alpha})")
    if mode == "robust" and alpha > 1:
        raise ValueError(f"robust horizon alpha = {alpha} > 1 would give negative prices")
    lam = forecast.as_array()
    return (1.0 - alpha) * lam if mode == "robust" else (1.0 + alpha) * lam


def base_cost(system: CoupledSystem, forecast: PriceForecast, settings: Optional[SlpSettings] = None):
    """Optimal cost at the forecast prices; returns ``(B_0, solution)``."""
    sol = dispatch(system, forecast.as_array(), settings)
    return sol.total_cost, sol


def _meets(cost: float, target: float) -> bool:
    return cost <= target + _MEET_RTOL * max(1.0, abs(target))


class _Evaluator:
    """Dispatch at the critical prices of each horizon, memoized.

    The first LP of every solve has the same constraints, so its basis from
    the first evaluation warm-starts all later ones.
    """

    def __init__(self, system, forecast, mode, settings):
        self.system, self.forecast, self.mode, self.settings = system, forecast, mode, settings
        self.cache = {}
        self.warm = ()

    def __call__(self, alpha: float) -> DispatchSolution:
        if alpha not in self.cache:
            prices = critical_prices(self.forecast, alpha, self.mode)
            sol = dispatch(self.system, prices, self.settings, self.warm)
            if not self.warm and sol.lp_bases and sol.lp_bases[0] is not None:
                self.warm = sol.lp_bases[:1]
            self.cache[alpha] = sol
        return self.cache[alpha]


def _check_monotone(trace, mode) -> bool:
    pts = sorted((a, c) for _, _, a, c in trace)
    costs = [c for _, c in pts]
    scale = 1e-7 * max([1.0] + [abs(c) for c in costs])
    if mode == "robust":
        return all(b >= a - scale for a, b in zip(costs, costs[1:]))
    return all(b <= a + scale for a, b in zip(costs, costs[1:]))


def _bisect(target: IgdtTarget, ev: _Evaluator, lo: float, hi: float, tol: float, trace: list):
    """Shrink ``[lo, hi]`` where ``lo`` is on the robust-feasible side for robust
    mode and ``hi`` on the target-meeting side for opportunity mode."""
    robust = target.mode == "robust"
    goal = target.cost_target
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        cost = ev(mid).total_cost
        trace.append((lo, hi, mid, cost))
        ok = _meets(cost, goal)
        if robust == ok:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _validate_common(sigma_or_rho, tol_alpha):
    if not sigma_or_rho >= 0:
        raise ValueError(f"deviation factor must be >= 0 (got {sigma_or_rho})")
    if not tol_alpha > 0:
        raise ValueError(f"tol_alpha must be > 0 (got {tol_alpha})")


def solve_robustness(system: CoupledSystem, forecast: PriceForecast, sigma: float,
                     tol_alpha: float = TOL_ALPHA, base: Optional[float] = None,
                     settings: Optional[SlpSettings] = None) -> IgdtResult:
    """Largest alpha in [0, 1] whose worst-case cost stays within ``(1 + sigma) B_0``."""
    _validate_common(sigma, tol_alpha)
    if base is None:
        base, _ = base_cost(system, forecast, settings)
    target = IgdtTarget("robust", sigma, base)
    goal = target.cost_target
    ev = _Evaluator(system, forecast, "robust", settings)
    trace = []
    c0 = ev(0.0).total_cost
    trace.append((0.0, 1.0, 0.0, c0))
    if not _meets(c0, goal):
        return IgdtResult(target, 0.0, ev(0.0), trace, violated_at_zero=True)
    c1 = ev(1.0).total_cost
    trace.append((0.0, 1.0, 1.0, c1))
    if _meets(c1, goal):
        return IgdtResult(target, 1.0, ev(1.0), trace, saturated=True,
                          monotone=_check_monotone(trace, "robust"))
    lo, _ = _bisect(target, ev, 0.0, 1.0, tol_alpha, trace)
    return IgdtResult(target, lo, ev(lo), trace, monotone=_check_monotone(trace, "robust"))


def solve_opportunity(system: CoupledSystem, forecast: PriceForecast, rho: float,
                      tol_alpha: float = TOL_ALPHA, alpha_max: float = ALPHA_MAX,
                      base: Optional[float] = None, settings: Optional[SlpSettings] = None) -> IgdtResult:
    """Smallest alpha in [0, alpha_max] whose best-case cost reaches ``(1 - rho) B_0``."""
    _validate_common(rho, tol_alpha)
    if not rho < 1:
        raise ValueError(f"rho must be < 1 (got {rho})")
    if not alpha_max > 0:
        raise ValueError("alpha_max must be > 0")
    if base is None:
        base, _ = base_cost(system, forecast, settings)
    target = IgdtTarget("opportunity", rho, base)
    goal = target.cost_target
    ev = _Evaluator(system, forecast, "opportunity", settings)
    trace = []
    c0 = ev(0.0).total_cost
    trace.append((0.0, alpha_max, 0.0, c0))
    if _meets(c0, goal):
        return IgdtResult(target, 0.0, ev(0.0), trace)
    cmax = ev(alpha_max).total_cost
    trace.append((0.0, alpha_max, alpha_max, cmax))
    if not _meets(cmax, goal):
        return IgdtResult(target, alpha_max, ev(alpha_max), trace, unreachable=True,
                          monotone=_check_monotone(trace, "opportunity"))
    _, hi = _bisect(target, ev, 0.0, alpha_max, tol_alpha, trace)
    return IgdtResult(target, hi, ev(hi), trace, monotone=_check_monotone(trace, "opportunity"))


def _one(args):
    system, forecast, mode, factor, tol_alpha, base, alpha_max, settings = args
    try:
        if mode == "robust":
            return solve_robustness(system, forecast, factor, tol_alpha, base, settings)
        return solve_opportunity(system, forecast, factor, tol_alpha, alpha_max, base, settings)
    except (DispatchError, ValueError) as exc:
        target = None
        try:
            target = IgdtTarget(mode, factor, base)
        except ValueError:
            target = IgdtTarget(mode, 0.0, base)
        return IgdtResult(target, math.nan, None, error=f"{type(exc).__name__}: {exc}")


def sweep(system: CoupledSystem, forecast: PriceForecast, mode: str, factors: Sequence[float],
          tol_alpha: float = TOL_ALPHA, jobs: int = 1, base: Optional[float] = None,
          alpha_max: float = ALPHA_MAX, settings: Optional[SlpSettings] = None) -> list:
    """One result per factor, in input order.

    Factors must be ascending and nonnegative. A failure for one factor is
    recorded in that result's ``error`` and the sweep continues. With
    ``jobs > 1`` factors are solved in worker processes; results are the
    same as with ``jobs = 1``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES} (got {mode!r})")
    factors = [float(f) for f in factors]
    if any(not f >= 0 for f in factors) or any(b < a for a, b in zip(factors, factors[1:])):
        raise ValueError("factors must be nonnegative and sorted ascending")
    if not factors:
        return []
    if base is None:
        base, _ = base_cost(system, forecast, settings)
    tasks = [(system, forecast, mode, f, tol_alpha, base, alpha_max, settings) for f in factors]
    if jobs <= 1 or len(tasks) == 1:
        return [_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_one, tasks))
