import copy

import numpy as np
import pytest

from coupled_igdt.dispatch import (DispatchInfeasible, DispatchNotConverged, DispatchProblem, SlpSettings,
                                   build_lp, cost_terms, dispatch, evaluate_cost, flow_definition_residual,
                                   gas_balance_residual, power_balance_residual, solve_dispatch,
                                   squared_pressure_bounds, weymouth_residuals)
from coupled_igdt.model import system_from_dict, validate_system
from coupled_igdt.oracle import brute_force_dispatch


def _sys(doc):
    return validate_system(system_from_dict(doc))


def _certify(sol):
    s = sol.system
    assert np.abs(power_balance_residual(sol)).max() / s.base_mva <= 1e-6
    assert np.abs(gas_balance_residual(sol)).max() <= 1e-6
    assert np.abs(weymouth_residuals(sol)).max() <= 1e-4
    assert flow_definition_residual(sol).max() <= 1e-6
    for g, gen in enumerate(s.generators):
        assert np.all(sol.generation[:, g] >= gen.p_min - 1e-7) and np.all(sol.generation[:, g] <= gen.p_max + 1e-7)
    for n, node in enumerate(s.gas_nodes):
        assert np.all(sol.pressure[:, n] >= node.pressure_min - 1e-7)
        assert np.all(sol.pressure[:, n] <= node.pressure_max + 1e-7)


def test_tiny3_feasible_and_exact_cost(tiny3, tiny3_prices):
    sol, trace = solve_dispatch(DispatchProblem(tiny3, tiny3_prices.as_array()))
    assert sol.converged and len(trace) == sol.iterations
    _certify(sol)
    assert evaluate_cost(sol, tiny3_prices.as_array()) == sol.total_cost
    gen, gas, rev, total = cost_terms(tiny3, sol.generation, sol.supply, sol.tie_flow, tiny3_prices.as_array())
    assert total == sol.total_cost
    assert (gen, gas, rev) == (sol.generation_cost, sol.gas_cost, sol.export_revenue)


def test_ramps_respected(tiny3, tiny3_prices):
    sol = dispatch(tiny3, tiny3_prices)
    for g, gen in enumerate(tiny3.generators):
        steps = np.diff(sol.generation[:, g])
        assert np.all(steps <= gen.ramp_up + 1e-7) and np.all(-steps <= gen.ramp_down + 1e-7)
        if gen.initial_output is not None:
            d = sol.generation[0, g] - gen.initial_output
            assert -gen.ramp_down - 1e-7 <= d <= gen.ramp_up + 1e-7


def test_flat_prices_match_oracle(tiny3):
    prices = np.full(tiny3.horizon, 26.0)
    sol = dispatch(tiny3, prices)
    ref, _ = brute_force_dispatch(tiny3, prices)
    assert sol.total_cost <= ref + 1e-6
    assert abs(sol.total_cost - ref) <= 0.005 * abs(ref)


def test_cost_nonincreasing_in_price(tiny3, tiny3_prices):
    lam = tiny3_prices.as_array()
    costs = [dispatch(tiny3, k * lam).total_cost for k in (0.5, 1.0, 1.5)]
    assert costs[0] >= costs[1] - 1e-6 >= costs[2] - 2e-6


def test_scaling_property(tiny3, tiny3_prices):
    doc = copy.deepcopy(_dict(tiny3))
    k = 3.0
    for g in doc["generators"]:
        g["cost_coeff"] *= k
    for s in doc["suppliers"]:
        s["cost_coeff"] *= k
    scaled = _sys(doc)
    a = dispatch(tiny3, tiny3_prices).total_cost
    b = dispatch(scaled, k * tiny3_prices.as_array()).total_cost
    assert b == pytest.approx(k * a, rel=1e-7)


def _dict(system):
    from coupled_igdt.model import system_to_dict
    return system_to_dict(system)


def test_single_hour(tiny3_dict):
    doc = tiny3_dict
    doc["horizon"] = 1
    for w in doc["wind_units"]:
        w["p_max_profile"] = w["p_max_profile"][:1]
    for key in ("electric_loads", "gas_loads"):
        doc[key] = {k: v[:1] for k, v in doc[key].items()}
    system = _sys(doc)
    sol = dispatch(system, [22.0])
    _certify(sol)
    # no ramp rows at all when T = 1, so G1 may leave its initial output freely
    lp, _ = build_lp(system, np.array([22.0]), np.tile(np.mean(squared_pressure_bounds(system), axis=0), (1, 1)))
    assert not any(n.startswith("ramp") for n in lp.row_names)


def test_meshed_gas_network(tiny3_dict):
    tiny3_dict["pipelines"].append({"id": "P13", "from_node": "N1", "to_node": "N3",
                                    "weymouth_const": 3.0, "has_compressor": False})
    system = _sys(tiny3_dict)
    sol = dispatch(system, [22.0, 26.0, 30.0, 24.0])
    _certify(sol)


def test_meshed_synthetic_system():
    import sys
    from pathlib import Path
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "benchmarks"))
    from synthetic import make_prices, make_system
    system = make_system(hours=4)
    sol = dispatch(system, make_prices(4))
    assert sol.converged
    _certify(sol)


def test_infeasible_names_hours(tiny3_dict):
    tiny3_dict["electric_loads"]["1"][2] = 900.0
    system = _sys(tiny3_dict)
    with pytest.raises(DispatchInfeasible) as info:
        dispatch(system, [22.0, 26.0, 30.0, 24.0])
    assert 3 in info.value.hours


def test_not_converged_carries_iterate(tiny3, tiny3_prices):
    with pytest.raises(DispatchNotConverged) as info:
        dispatch(tiny3, tiny3_prices, SlpSettings(max_iter=1))
    assert info.value.solution is not None and len(info.value.trace) == 1


def test_price_length_checked(tiny3):
    with pytest.raises(ValueError):
        DispatchProblem(tiny3, np.ones(3))


def test_lp_has_named_rows(tiny3, tiny3_prices):
    u0 = np.tile(np.mean(squared_pressure_bounds(tiny3), axis=0), (tiny3.horizon, 1))
    lp, lay = build_lp(tiny3, tiny3_prices.as_array(), u0)
    names = set(lp.row_names)
    for expected in ("power_balance[1]@t1", "branch_flow[L12]@t2", "tie_flow[T2Z]@t3",
                     "gas_balance[N2]@t4", "weymouth[P12]@t1", "compressor[P23]@t1"):
        assert expected in names
    assert "P[G1]@t1" in lp.var_names


def test_warm_start_same_optimum(tiny3, tiny3_prices):
    base = dispatch(tiny3, tiny3_prices.as_array())
    assert len(base.lp_bases) == base.iterations
    for scale in (0.5, 1.3, 2.0):
        prices = scale * tiny3_prices.as_array()
        cold = dispatch(tiny3, prices)
        warm = dispatch(tiny3, prices, warm_start=base.lp_bases[:1])
        _certify(warm)
        assert warm.total_cost == pytest.approx(cold.total_cost, rel=1e-7)
