import math

import numpy as np
import pytest

from coupled_igdt import igdt
from coupled_igdt.dispatch import DispatchInfeasible, dispatch
from coupled_igdt.igdt import (IgdtTarget, UncertaintyEnvelope, base_cost, critical_prices,
                               solve_opportunity, solve_robustness, sweep)
from coupled_igdt.model import PriceForecast

TOL = 1e-4


def test_envelope_bounds():
    env = UncertaintyEnvelope(0.2, PriceForecast((50.0, 10.0)))
    lo, hi = env.bounds()
    assert lo == pytest.approx([40.0, 8.0]) and hi == pytest.approx([60.0, 12.0])
    assert env.contains([45.0, 11.9]) and not env.contains([39.0, 10.0])
    with pytest.raises(ValueError):
        UncertaintyEnvelope(-0.1, PriceForecast((1.0,)))


def test_critical_prices():
    f = PriceForecast((50.0,))
    assert critical_prices(f, 0.0, "robust") == pytest.approx([50.0])
    assert critical_prices(f, 0.0, "opportunity") == pytest.approx([50.0])
    assert critical_prices(f, 0.206, "robust") == pytest.approx([39.7])
    assert critical_prices(f, 0.121, "opportunity") == pytest.approx([56.05])
    with pytest.raises(ValueError):
        critical_prices(f, 1.2, "robust")
    # critical prices sit on the envelope boundary
    lam = np.array([30.0, 45.0])
    for mode in ("robust", "opportunity"):
        p = critical_prices(PriceForecast(tuple(lam)), 0.3, mode)
        assert np.abs(np.abs(p - lam) / lam - 0.3).max() < 1e-12


def test_target_arithmetic():
    t = IgdtTarget("robust", 0.1, 423483.0)
    assert t.cost_target == 1.1 * 423483.0
    assert IgdtTarget("opportunity", 0.3, 100.0).cost_target == 0.7 * 100.0
    with pytest.raises(ValueError):
        IgdtTarget("opportunity", 1.0, 100.0)
    with pytest.raises(ValueError):
        IgdtTarget("neutral", 0.1, 100.0)


def test_negative_base_cost_allowed(tiny3, tiny3_prices):
    b0, _ = base_cost(tiny3, PriceForecast(tuple(3.0 * tiny3_prices.as_array())))
    assert b0 < 0


@pytest.mark.parametrize("factor", [0.1, 0.3, 0.5])
def test_closed_form(analytic, tiny3_prices, factor):
    b0, sol = base_cost(analytic, tiny3_prices)
    revenue = float(tiny3_prices.as_array() @ sol.tie_flow.sum(axis=1))
    expected = factor * b0 / revenue
    rob = solve_robustness(analytic, tiny3_prices, factor, TOL, base=b0)
    opp = solve_opportunity(analytic, tiny3_prices, factor, TOL, base=b0)
    assert abs(rob.horizon_opt - expected) <= TOL
    assert abs(opp.horizon_opt - expected) <= TOL


def test_zero_factor(tiny3, tiny3_prices, tiny3_base):
    b0 = tiny3_base[0]
    rob = solve_robustness(tiny3, tiny3_prices, 0.0, base=b0)
    opp = solve_opportunity(tiny3, tiny3_prices, 0.0, base=b0)
    assert rob.horizon_opt <= 1e-3 and opp.horizon_opt <= 1e-3
    assert rob.target.cost_target == b0 == opp.target.cost_target


@pytest.mark.parametrize("sigma", [0.1, 0.2, 0.3])
def test_robust_certificates(tiny3, tiny3_prices, tiny3_base, sigma):
    res = solve_robustness(tiny3, tiny3_prices, sigma, TOL, base=tiny3_base[0])
    bc = res.target.cost_target
    assert not res.saturated and res.monotone
    assert res.certificate_cost <= bc + 1e-6 * abs(bc)
    below = dispatch(tiny3, critical_prices(tiny3_prices, max(res.horizon_opt - TOL, 0), "robust"))
    above = dispatch(tiny3, critical_prices(tiny3_prices, res.horizon_opt + 10 * TOL, "robust"))
    assert below.total_cost <= bc + 1e-6 * abs(bc)
    assert above.total_cost > bc
    lo, hi = res.trace[-1][0], res.trace[-1][1]
    assert hi - lo <= 2 * TOL


@pytest.mark.parametrize("rho", [0.1, 0.3])
def test_opportunity_certificates(tiny3, tiny3_prices, tiny3_base, rho):
    res = solve_opportunity(tiny3, tiny3_prices, rho, TOL, base=tiny3_base[0])
    bw = res.target.cost_target
    assert not res.unreachable and res.monotone
    assert res.certificate_cost <= bw + 1e-6 * abs(bw)
    after = dispatch(tiny3, critical_prices(tiny3_prices, res.horizon_opt + TOL, "opportunity"))
    before = dispatch(tiny3, critical_prices(tiny3_prices, res.horizon_opt - 10 * TOL, "opportunity"))
    assert after.total_cost <= bw + 1e-6 * abs(bw)
    assert before.total_cost > bw


def test_saturation_and_unreachable(tiny3, tiny3_prices, tiny3_base):
    rob = solve_robustness(tiny3, tiny3_prices, 0.9, base=tiny3_base[0])
    assert rob.saturated and rob.horizon_opt == 1.0
    opp = solve_opportunity(tiny3, tiny3_prices, 0.9, alpha_max=0.2, base=tiny3_base[0])
    assert opp.unreachable and opp.horizon_opt == 0.2


def test_sweeps_monotone(tiny3, tiny3_prices, tiny3_base):
    b0 = tiny3_base[0]
    factors = [round(0.05 * k, 2) for k in range(10)]
    rob = sweep(tiny3, tiny3_prices, "robust", factors, base=b0)
    opp = sweep(tiny3, tiny3_prices, "opportunity", factors, base=b0)
    for res in (rob, opp):
        assert [r.factor for r in res] == factors
        h = [r.horizon_opt for r in res]
        assert all(b >= a for a, b in zip(h, h[1:]))
    # exports shrink as the tolerated price drop grows
    piz = [r.aggregates()["P_iz_MW"] for r in rob]
    assert all(b <= a + 1e-6 for a, b in zip(piz, piz[1:]))


def test_sweep_parallel_matches_serial(tiny3, tiny3_prices, tiny3_base):
    args = (tiny3, tiny3_prices, "opportunity", [0.0, 0.2, 0.4])
    a = sweep(*args, jobs=1, base=tiny3_base[0])
    b = sweep(*args, jobs=3, base=tiny3_base[0])
    assert [r.horizon_opt for r in a] == [r.horizon_opt for r in b]
    assert [r.certificate_cost for r in a] == [r.certificate_cost for r in b]


def test_sweep_empty_and_validation(tiny3, tiny3_prices):
    assert sweep(tiny3, tiny3_prices, "robust", []) == []
    with pytest.raises(ValueError):
        sweep(tiny3, tiny3_prices, "robust", [0.2, 0.1])
    with pytest.raises(ValueError):
        sweep(tiny3, tiny3_prices, "robust", [-0.1])


def test_sweep_records_errors(tiny3, tiny3_prices, tiny3_base, monkeypatch):
    real = igdt.dispatch

    def flaky(system, prices, settings=None, warm_start=()):
        if np.all(prices > 2.0 * tiny3_prices.as_array()):
            raise DispatchInfeasible([1], [], "synthetic failure")
        return real(system, prices, settings, warm_start)

    monkeypatch.setattr(igdt, "dispatch", flaky)
    res = sweep(tiny3, tiny3_prices, "opportunity", [0.0, 0.1], base=tiny3_base[0], jobs=1)
    assert res[0].error is None
    assert "synthetic failure" in res[1].error and math.isnan(res[1].horizon_opt)
