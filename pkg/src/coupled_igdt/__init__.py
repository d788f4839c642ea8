"""Coordinated gas-electricity dispatch with info-gap price-risk analysis."""
from importlib import resources

from .model import (CoupledSystem, ModelError, ParseError, PriceForecast, SystemWarning,
                    ValidationError, load_prices, load_system, validate_system)
from .dispatch import (DispatchError, DispatchInfeasible, DispatchNotConverged, DispatchProblem,
                       DispatchSolution, SlpSettings, dispatch, solve_dispatch)
from .igdt import (IgdtResult, IgdtTarget, UncertaintyEnvelope, base_cost, critical_prices,
                   solve_opportunity, solve_robustness, sweep)
from .export import export_results

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Filesystem path of a bundled fixture, e.g. ``data_path("tiny3.json")``."""
    return str(resources.files(__name__).joinpath("data", name))


__all__ = [
    "CoupledSystem", "ModelError", "ParseError", "PriceForecast", "SystemWarning", "ValidationError",
    "load_prices", "load_system", "validate_system", "DispatchError", "DispatchInfeasible",
    "DispatchNotConverged", "DispatchProblem", "DispatchSolution", "SlpSettings", "dispatch",
    "solve_dispatch", "IgdtResult", "IgdtTarget", "UncertaintyEnvelope", "base_cost",
    "critical_prices", "solve_opportunity", "solve_robustness", "sweep", "export_results", "data_path",
]
