import ast
import inspect

import numpy as np
import pytest

from coupled_igdt import oracle
from coupled_igdt.dispatch import dispatch
from coupled_igdt.igdt import IgdtTarget, base_cost, solve_opportunity, solve_robustness
from coupled_igdt.model import system_from_dict, validate_system
from coupled_igdt.oracle import (GridSpec, GridTooLarge, OracleError, brute_force_dispatch,
                                 brute_force_horizon)

# the tiny fixtures use 5 MW granularity, so this grid contains their optima
ALIGNED = GridSpec(steps={"G1": 5.0, "G2": 5.0, "W1": 5.0})
ALPHA_STEP = 1e-3


def test_independent_of_solver_stack():
    tree = ast.parse(inspect.getsource(oracle))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert not any("lp" in m.split(".") or "dispatch" in m.split(".") for m in imported)


def test_axis():
    g = GridSpec(steps={"x": 3.0})
    assert g.axis("x", 0.0, 7.0).tolist() == [0.0, 3.0, 6.0, 7.0]
    assert g.axis("y", 5.0, 5.0).tolist() == [5.0]
    assert len(g.axis("y", 0.0, 1.0)) == 50
    with pytest.raises(ValueError):
        GridSpec(steps={"x": 0.0})


def test_matches_dispatch_on_tiny3(tiny3, tiny3_prices):
    ref, point = brute_force_dispatch(tiny3, tiny3_prices.as_array())
    sol = dispatch(tiny3, tiny3_prices)
    assert abs(sol.total_cost - ref) <= 0.005 * abs(ref)
    assert point["generation"].shape == (4, 2) and point["pressure"].shape == (4, 3)


def test_oracle_point_is_consistent(tiny3, tiny3_prices):
    ref, p = brute_force_dispatch(tiny3, tiny3_prices.as_array(), ALIGNED)
    lam = tiny3_prices.as_array()
    cost = (p["generation"] @ [g.cost_coeff for g in tiny3.generators]).sum() \
        + (p["supply"] @ [s.cost_coeff for s in tiny3.suppliers]).sum() - lam @ p["tie_flow"].sum(1)
    assert cost == pytest.approx(ref)
    load = tiny3.electric_load_matrix().sum(1)
    assert p["generation"].sum(1) + p["wind"].sum(1) - p["tie_flow"].sum(1) == pytest.approx(load)


def test_deterministic(tiny3, tiny3_prices):
    a = brute_force_dispatch(tiny3, tiny3_prices.as_array(), ALIGNED)
    b = brute_force_dispatch(tiny3, tiny3_prices.as_array(), ALIGNED)
    assert a[0] == b[0]
    assert all(np.array_equal(a[1][k], b[1][k]) for k in a[1])


def test_grid_cap(tiny3, tiny3_prices):
    with pytest.raises(GridTooLarge):
        brute_force_dispatch(tiny3, tiny3_prices.as_array(), GridSpec(max_points=1000))


def test_rejects_long_horizon_and_meshed_gas(tiny3_dict):
    meshed = dict(tiny3_dict)
    meshed["pipelines"] = tiny3_dict["pipelines"] + [
        {"id": "P13", "from_node": "N1", "to_node": "N3", "weymouth_const": 3.0, "has_compressor": False}]
    with pytest.raises(OracleError, match="radial"):
        brute_force_dispatch(validate_system(system_from_dict(meshed)), np.full(4, 20.0))
    with pytest.raises(OracleError, match="hours"):
        brute_force_dispatch(validate_system(system_from_dict(tiny3_dict)), np.full(4, 20.0),
                             GridSpec(max_hours=3))


def test_closed_form_horizon(analytic, tiny3_prices):
    b0, sol = base_cost(analytic, tiny3_prices)
    revenue = float(tiny3_prices.as_array() @ sol.tie_flow.sum(axis=1))
    target = IgdtTarget("robust", 0.2, b0)
    alpha = brute_force_horizon(analytic, tiny3_prices, target, ALPHA_STEP)
    assert abs(alpha - 0.2 * b0 / revenue) <= ALPHA_STEP


def test_horizons_match_solver(tiny3, tiny3_prices, tiny3_base):
    b0 = tiny3_base[0]
    opp = solve_opportunity(tiny3, tiny3_prices, 0.1, base=b0)
    ref = brute_force_horizon(tiny3, tiny3_prices, IgdtTarget("opportunity", 0.1, b0), ALPHA_STEP, ALIGNED)
    assert abs(opp.horizon_opt - ref) <= max(1e-4, ALPHA_STEP)
    rob = solve_robustness(tiny3, tiny3_prices, 0.2, base=b0)
    ref = brute_force_horizon(tiny3, tiny3_prices, IgdtTarget("robust", 0.2, b0), ALPHA_STEP, ALIGNED)
    assert abs(rob.horizon_opt - ref) <= max(1e-4, ALPHA_STEP)
