import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_igdt.gasflow import (EPS_SMOOTH, PressureState, linearize_many, linearize_weymouth,
                                  pipeline_residual, residuals, settle, weymouth_flow, weymouth_flow_u)
from coupled_igdt.model import Pipeline, system_from_dict

pressure = st.floats(min_value=0.0, max_value=120.0, allow_nan=False)
PASSIVE = Pipeline("P", "a", "b", 3.7, False)
BOOSTED = Pipeline("K", "a", "b", 3.7, True)


def test_known_value():
    assert weymouth_flow(5.0, 4.0, 2.0) == pytest.approx(6.0)
    assert weymouth_flow(4.0, 5.0, 2.0) == pytest.approx(-6.0)
    assert weymouth_flow(7.0, 7.0, 2.0) == 0.0


@given(pressure, pressure)
def test_antisymmetric(a, b):
    assert weymouth_flow(a, b, 3.0) == -weymouth_flow(b, a, 3.0)


@given(pressure, pressure, st.floats(min_value=0.0, max_value=10.0))
def test_monotone(a, b, d):
    assert weymouth_flow(a + d, b, 3.0) >= weymouth_flow(a, b, 3.0)
    assert weymouth_flow(a, b + d, 3.0) <= weymouth_flow(a, b, 3.0)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(1)
    a, b = rng.uniform(0, 80, 50), rng.uniform(0, 80, 50)
    vec = weymouth_flow(a, b, 2.5)
    assert vec == pytest.approx([weymouth_flow(x, y, 2.5) for x, y in zip(a, b)])
    assert weymouth_flow_u(a * a, b * b, 2.5) == pytest.approx(vec)


@settings(max_examples=300)
@given(st.floats(min_value=1.0, max_value=4000.0), st.floats(min_value=1.0, max_value=4000.0))
def test_linearization_matches_finite_differences(um, un):
    du = um - un
    if abs(du) < 10 * EPS_SMOOTH:
        return
    a, bm, bn = linearize_weymouth(PASSIVE, um, un)
    h = 1e-4 * abs(du)
    fd_m = (weymouth_flow_u(um + h, un, 3.7) - weymouth_flow_u(um - h, un, 3.7)) / (2 * h)
    fd_n = (weymouth_flow_u(um, un + h, 3.7) - weymouth_flow_u(um, un - h, 3.7)) / (2 * h)
    assert abs(bm - fd_m) <= 1e-6 * abs(fd_m)
    assert abs(bn - fd_n) <= 1e-6 * abs(fd_n)
    # tangent passes through the expansion point
    assert a + bm * um + bn * un == pytest.approx(weymouth_flow_u(um, un, 3.7), rel=1e-9)


def test_smoothing_band_is_bounded():
    a, bm, bn = linearize_weymouth(PASSIVE, 100.0, 100.0)
    assert a == 0.0 and bm == pytest.approx(3.7 / math.sqrt(EPS_SMOOTH)) and bn == -bm


def test_linearize_many_matches_scalar():
    um = np.array([100.0, 2500.0, 900.0, 400.0])
    un = np.array([100.0, 1600.0, 1600.0, 400.0005])
    a, bm, bn = linearize_many(3.7, um, un)
    for k in range(4):
        ref = linearize_weymouth(PASSIVE, um[k], un[k])
        assert (a[k], bm[k], bn[k]) == pytest.approx(ref)


def test_residuals():
    state = PressureState({"a": 50.0, "b": 40.0})
    f = weymouth_flow(50.0, 40.0, 3.7)
    assert pipeline_residual(PASSIVE, state, f) == pytest.approx(0.0)
    assert pipeline_residual(PASSIVE, state, f + 2.0) == pytest.approx(2.0)
    # compressors may carry more than the passive flow but not less
    assert pipeline_residual(BOOSTED, state, f + 20.0) == 0.0
    assert pipeline_residual(BOOSTED, state, f - 2.0) == pytest.approx(-2.0)
    assert state.within([], 0.0)


def test_residuals_array(tiny3):
    p = np.array([[60.0, 40.0, 30.0]])
    f = np.array([[weymouth_flow(60.0, 40.0, 5.0), 500.0]])
    r = residuals(tiny3, p, f)
    assert r.shape == (1, 2) and np.allclose(r, 0.0)


def _loop(tiny3_dict, compressor=False):
    tiny3_dict["pipelines"][1]["has_compressor"] = compressor
    tiny3_dict["pipelines"].append({"id": "P13", "from_node": "N1", "to_node": "N3",
                                    "weymouth_const": 3.0, "has_compressor": False})
    return system_from_dict(tiny3_dict)


def _net(system, f):
    idx = system.node_index()
    out = np.zeros((f.shape[0], len(system.gas_nodes)))
    for a, p in enumerate(system.pipelines):
        out[:, idx[p.from_node]] += f[:, a]
        out[:, idx[p.to_node]] -= f[:, a]
    return out


def test_settle_near_zero_loop_flow(tiny3_dict):
    system = _loop(tiny3_dict)
    # balanced flows with an idle middle pipe, pressures off the Weymouth curve
    f = np.array([[40.0, 0.0, 60.0]])
    u = np.array([[2500.0, 2436.0, 2436.0 + 1e-4]])
    u2, f2 = settle(system, u, f, 1e-4)
    assert _net(system, f2) == pytest.approx(_net(system, f), abs=1e-9)
    assert np.abs(residuals(system, np.sqrt(u2), f2)).max() <= 1e-7
    lo = np.array([n.pressure_min ** 2 for n in system.gas_nodes])
    hi = np.array([n.pressure_max ** 2 for n in system.gas_nodes])
    assert np.all(u2 >= lo) and np.all(u2 <= hi)


def test_settle_keeps_slack_compressor_flow(tiny3_dict):
    system = _loop(tiny3_dict, compressor=True)
    # the compressor boosts into N3, so its flow has room to spare
    f = np.array([[90.0, 30.0, 10.0]])
    u = np.array([[2500.0, 2200.0, 2480.0]])
    u2, f2 = settle(system, u, f, 1e-4)
    assert f2[0, 1] == 30.0
    assert f2 == pytest.approx(f, abs=1e-9)
    assert np.abs(residuals(system, np.sqrt(u2), f2)).max() <= 1e-7


def test_settle_leaves_consistent_point(tiny3_dict):
    system = _loop(tiny3_dict)
    u = np.array([[2500.0, 2436.0, 2100.0]])
    C = np.array([5.0, 4.0, 3.0])
    f = weymouth_flow_u(u[:, [0, 1, 0]], u[:, [1, 2, 2]], C)
    u2, f2 = settle(system, u, f, 1e-4)
    assert np.array_equal(u2, u) and np.array_equal(f2, f)
