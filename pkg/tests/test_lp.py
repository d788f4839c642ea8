import numpy as np
import pytest

from coupled_igdt.lp import LpError, LpProblem, available_backends, dump_lp, solve_lp
from lp_reference import dual_objective, dual_sign_ok, random_lp, vertex_optimum

BACKENDS = available_backends()


def _lp(c, A, senses, b, lb, ub):
    return LpProblem.from_dense(np.array(c, float), np.array(A, float), senses, np.array(b, float),
                                np.array(lb, float), np.array(ub, float))


@pytest.mark.parametrize("backend", BACKENDS)
def test_textbook_max(backend):
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    p = _lp([-3, -5], [[1, 0], [0, 2], [3, 2]], ["<="] * 3, [4, 12, 18], [0, 0], [np.inf, np.inf])
    s = solve_lp(p, backend=backend)
    assert s.status == "optimal"
    assert s.objective == pytest.approx(-36.0, abs=1e-9)
    assert s.x == pytest.approx([2.0, 6.0])
    # row prices of the binding rows
    assert s.duals == pytest.approx([0.0, -1.5, -1.0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_reports_rows(backend):
    p = _lp([1, 1], [[1, 1], [1, 1]], [">=", "<="], [5, 3], [0, 0], [10, 10])
    s = solve_lp(p, backend=backend)
    assert s.status == "infeasible"
    assert s.phase1_residual > 0
    assert s.infeasible_rows


@pytest.mark.parametrize("backend", BACKENDS)
def test_unbounded(backend):
    p = _lp([-1, 0], [[1, -1]], ["<="], [1], [0, 0], [np.inf, np.inf])
    assert solve_lp(p, backend=backend).status == "unbounded"


@pytest.mark.parametrize("backend", BACKENDS)
def test_free_variables_and_equalities(backend):
    p = _lp([1, 2], [[1, 1], [1, -1]], ["==", "=="], [3, 1], [-np.inf, -np.inf], [np.inf, np.inf])
    s = solve_lp(p, backend=backend)
    assert s.optimal and s.x == pytest.approx([2.0, 1.0]) and s.objective == pytest.approx(4.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_degenerate_cycling_example(backend):
    # Beale's example cycles under naive Dantzig pricing
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    p = _lp(c, A, ["<="] * 3, [0, 0, 1], [0] * 4, [np.inf] * 4)
    s = solve_lp(p, backend=backend)
    assert s.optimal and s.objective == pytest.approx(-0.05, abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_random_against_vertex_enumeration(backend):
    rng = np.random.default_rng(123)
    for _ in range(200):
        raw, p = random_lp(rng)
        ref = vertex_optimum(*raw)
        s = solve_lp(p, backend=backend)
        if ref is None:
            assert s.status == "infeasible"
        else:
            assert s.optimal
            assert abs(s.objective - ref) <= 1e-7
            assert abs(dual_objective(p, s) - s.objective) <= 1e-7
            assert dual_sign_ok(p, s)


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(5)
    for _ in range(100):
        _, p = random_lp(rng)
        a, b = solve_lp(p, backend="python"), solve_lp(p, backend="cython")
        assert a.status == b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, abs=1e-9)


def test_empty_rows_and_no_rows():
    p = _lp([1, -1], np.zeros((1, 2)), ["<="], [1.0], [0, 0], [2, 3])
    s = solve_lp(p)
    assert s.optimal and s.objective == pytest.approx(-3.0) and s.duals.shape == (1,)
    bad = _lp([1], np.zeros((1, 1)), [">="], [1.0], [0], [1])
    assert solve_lp(bad).status == "infeasible"


@pytest.mark.parametrize("kwargs, msg", [
    ({"lb": [1.0], "ub": [0.0]}, "lower bound above"),
    ({"senses": ["<"]}, "sense"),
    ({"rhs": [np.nan]}, "finite"),
])
def test_validation(kwargs, msg):
    base = dict(c=[1.0], a=[[1.0]], senses=["<="], rhs=[1.0], lb=[0.0], ub=[1.0])
    base.update(kwargs)
    with pytest.raises(LpError, match=msg):
        LpProblem.from_dense(np.array(base["c"]), np.array(base["a"]), base["senses"],
                             np.array(base["rhs"]), np.array(base["lb"]), np.array(base["ub"]))


def test_unknown_backend():
    p = _lp([1], [[1]], ["<="], [1], [0], [1])
    with pytest.raises(ValueError):
        solve_lp(p, backend="fortran")


def test_dump_lp_names():
    p = LpProblem.from_dense(np.array([1.0, 2.0]), np.array([[1.0, 1.0]]), [">="], np.array([1.0]),
                             np.zeros(2), np.ones(2), var_names=("x", "y"), row_names=("cover",))
    text = dump_lp(p)
    assert "cover" in text and "x" in text and ">=" in text


@pytest.mark.parametrize("backend", BACKENDS)
def test_warm_start_reuses_basis(backend):
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(300):
        (c, A, senses, b, lb, ub), p = random_lp(rng, max_vars=6, max_rows=5)
        cold = solve_lp(p, backend=backend)
        if cold.status != "optimal" or cold.basis is None:
            continue
        again = solve_lp(p, backend=backend, start=cold.basis)
        assert again.iterations == 0
        assert again.objective == pytest.approx(cold.objective, abs=1e-9)
        # new costs keep the old basis primal feasible
        q = LpProblem.from_dense(c + rng.normal(size=c.size), A, senses, b, lb, ub)
        ref = solve_lp(q, backend=backend)
        warm = solve_lp(q, backend=backend, start=cold.basis)
        assert warm.status == ref.status
        if ref.status == "optimal":
            assert warm.objective == pytest.approx(ref.objective, rel=1e-7, abs=1e-7)
        # shifted bounds may make it infeasible: falls back to a cold start
        r = LpProblem.from_dense(c, A, senses, b, lb + 0.5, ub + 0.5)
        ref = solve_lp(r, backend=backend)
        warm = solve_lp(r, backend=backend, start=cold.basis)
        assert warm.status == ref.status
        if ref.status == "optimal":
            assert warm.objective == pytest.approx(ref.objective, rel=1e-7, abs=1e-7)
        checked += 1
    assert checked > 100


def test_warm_start_ignores_mismatched_basis():
    p = _lp([-3, -5], [[1, 0], [0, 2], [3, 2]], ["<="] * 3, [4, 12, 18], [0, 0], [np.inf, np.inf])
    for start in (np.zeros(2, dtype=np.int8), np.full(5, 3, dtype=np.int8)):
        s = solve_lp(p, start=start)
        assert s.objective == pytest.approx(-36.0, abs=1e-9)


def test_block_triangular_inverse(monkeypatch):
    from coupled_igdt.lp import _sparse
    monkeypatch.setattr(_sparse, "DENSE_BELOW", 0)
    rng = np.random.default_rng(3)
    for _ in range(300):
        m = int(rng.integers(1, 30))
        n = m + int(rng.integers(0, 10))
        A = (rng.random((m, n)) < rng.uniform(0.02, 0.3)) * rng.normal(size=(m, n))
        cols = rng.choice(n, m, replace=False)
        A[np.arange(m), cols[rng.permutation(m)]] += 3.0
        r, c = np.nonzero(A)
        X = _sparse.inverse(_sparse.Csc.from_triplets(r, c, A[r, c], (m, n)), cols)
        assert np.allclose(X @ A[:, cols], np.eye(m), atol=1e-8)
    A = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    r, c = np.nonzero(A)
    with pytest.raises(np.linalg.LinAlgError, match="structurally singular"):
        _sparse.inverse(_sparse.Csc.from_triplets(r, c, A[r, c], (3, 3)), [0, 1, 2])


def test_block_triangular_path_solves_lps(monkeypatch):
    from coupled_igdt.lp import _sparse
    rng = np.random.default_rng(11)
    problems = [random_lp(rng, max_vars=8, max_rows=8)[1] for _ in range(200)]
    ref = [solve_lp(p) for p in problems]
    monkeypatch.setattr(_sparse, "DENSE_BELOW", 0)
    for p, r in zip(problems, ref):
        s = solve_lp(p)
        assert s.status == r.status
        if r.status == "optimal":
            assert s.objective == pytest.approx(r.objective, rel=1e-9, abs=1e-9)
