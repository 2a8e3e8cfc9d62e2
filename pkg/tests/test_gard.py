import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gardlab import RankDeficientError
from gardlab.gard import (ENGINES, RegressionProblem, SparseVector, gard_solve,
                          select_outlier_index)

from oracles import argmax_scan, l0_decompositions


def _instance(seed, n, m, s, mag=25.0, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, m))
    theta = rng.normal(0, 5, m)
    u = np.zeros(n)
    idx = rng.choice(n, s, replace=False)
    u[idx] = mag * rng.choice([-1.0, 1.0], s)
    eta = rng.normal(0, noise, n) if noise else np.zeros(n)
    return x, theta, u, eta, x @ theta + u + eta


class TestSparseVector:
    def test_roundtrip(self):
        sv = SparseVector.from_dense([0.0, 2.0, 0.0, -1.0])
        assert sv.indices.tolist() == [1, 3] and sv.values.tolist() == [2.0, -1.0]
        np.testing.assert_array_equal(sv.to_dense(), [0.0, 2.0, 0.0, -1.0])
        assert sv.support == frozenset({1, 3}) and sv.nnz == 2

    def test_drop_below(self):
        assert SparseVector.from_dense([1e-9, 1.0], drop_below=1e-6).indices.tolist() == [1]

    @pytest.mark.parametrize("idx,vals", [([1, 1], [1.0, 2.0]), ([0], [0.0]), ([5], [1.0]),
                                          ([-1], [1.0]), ([1, 2], [1.0])])
    def test_invalid(self, idx, vals):
        with pytest.raises(ValueError):
            SparseVector(5, idx, vals)

    def test_pairs_sorted_by_index(self):
        sv = SparseVector(5, [3, 1], [1.0, 2.0])
        assert sv.indices.tolist() == [1, 3] and sv.values.tolist() == [2.0, 1.0]

    def test_empty(self):
        sv = SparseVector(3)
        assert sv.nnz == 0 and not sv.to_dense().any()


class TestProblem:
    def test_shapes(self):
        with pytest.raises(ValueError):
            RegressionProblem(np.ones((2, 2)), np.ones(2))
        with pytest.raises(ValueError):
            RegressionProblem(np.eye(3)[:, :2], np.ones(4))
        with pytest.raises(ValueError):
            RegressionProblem(np.eye(3)[:, :2], np.ones(3), -1.0)
        with pytest.raises(ValueError):
            RegressionProblem(np.eye(3)[:, :2], [1.0, np.inf, 0.0])

    def test_dims(self):
        p = RegressionProblem(np.eye(4)[:, :2], np.ones(4), 0.5)
        assert (p.n, p.m, p.epsilon0) == (4, 2, 0.5)


class TestSelect:
    def test_max_magnitude(self):
        assert select_outlier_index([0.0, 3.0, -5.0], {0, 1, 2}) == 2

    def test_tie_smallest(self):
        assert select_outlier_index([3.0, -3.0], {0, 1}) == 0

    def test_excluding_max(self, rng):
        r = rng.normal(size=30)
        order = np.argsort(-np.abs(r))
        inactive = set(range(30)) - {int(order[0])}
        assert select_outlier_index(r, inactive) == int(order[1]) == argmax_scan(r, inactive)

    def test_empty(self):
        with pytest.raises(ValueError):
            select_outlier_index([1.0], set())

    @given(st.lists(st.integers(-3, 3), min_size=1, max_size=12), st.data())
    def test_scan_oracle(self, vals, data):
        r = np.array(vals, dtype=float)
        inactive = data.draw(st.sets(st.integers(0, len(vals) - 1), min_size=1))
        assert select_outlier_index(r, inactive) == argmax_scan(r, inactive)


@pytest.mark.parametrize("engine", ENGINES)
class TestGardSolve:
    def test_exact_data_is_least_squares(self, backend, engine):
        x, theta, *_ , y = _instance(1, 20, 3, 0)
        res = gard_solve(RegressionProblem(x, y, 1e-9), engine)
        np.testing.assert_allclose(res.theta_star, theta, atol=1e-10)
        assert res.support == () and res.iterations == 0 and res.u_star.nnz == 0
        assert res.engine == engine and not res.cap_reached

    def test_single_outlier_n8(self, backend, engine):
        rng = np.random.default_rng(8)
        x = rng.uniform(-1, 1, (8, 2))
        theta = np.array([1.5, -2.0])
        u = np.zeros(8)
        u[3] = 25.0                     # fourth observation
        y = x @ theta + u
        size, sols = l0_decompositions(x, y, 2)
        assert size == 1 and [set(s) for s, _ in sols] == [{3}]
        res = gard_solve(RegressionProblem(x, y, 0.0), engine)
        assert set(res.support) == {3}
        np.testing.assert_allclose(res.theta_star, theta, atol=1e-10)
        np.testing.assert_allclose(res.u_star.to_dense(), u, atol=1e-10)

    def test_residual_orthogonal_to_active(self, backend, engine):
        x, theta, u, eta, y = _instance(2, 60, 4, 6, noise=1.0)
        p = RegressionProblem(x, y, float(np.linalg.norm(eta)))
        res = gard_solve(p, engine)
        r = y - x @ res.theta_star - res.u_star.to_dense()
        assert np.max(np.abs(x.T @ r)) <= 1e-8
        assert np.max(np.abs(r[list(res.support)]), initial=0.0) <= 1e-8
        assert res.residual_norm == pytest.approx(np.linalg.norm(r), abs=1e-9)
        assert res.residual_norm <= p.epsilon0
        assert set(res.support) == set(np.flatnonzero(u))

    def test_cap_flag(self, backend, engine):
        x, *_, y = _instance(3, 15, 3, 2, noise=1.0)
        res = gard_solve(RegressionProblem(x, y, 0.0), engine)
        assert res.iterations == 15 - 3 - 1 and res.cap_reached
        assert len(set(res.support)) == res.iterations

    def test_full_cap_reaches_zero(self, backend, engine):
        x, *_, y = _instance(4, 12, 3, 2, noise=1.0)
        res = gard_solve(RegressionProblem(x, y, 0.0), engine, max_outliers=12 - 3)
        assert res.iterations <= 9 and res.residual_norm <= 1e-10
        assert not res.cap_reached

    def test_max_outliers_zero(self, backend, engine):
        x, *_, y = _instance(5, 12, 3, 2)
        res = gard_solve(RegressionProblem(x, y, 0.0), engine, max_outliers=0)
        assert res.iterations == 0 and res.cap_reached

    def test_rank_deficient(self, backend, engine):
        x = np.ones((6, 2))
        with pytest.raises(RankDeficientError):
            gard_solve(RegressionProblem(x, np.arange(6.0), 0.1), engine)


def test_bad_arguments():
    x, *_, y = _instance(6, 10, 2, 1)
    p = RegressionProblem(x, y, 0.0)
    with pytest.raises(ValueError):
        gard_solve(p, "qr")
    with pytest.raises(ValueError):
        gard_solve(p, max_outliers=9)
    with pytest.raises(ValueError):
        gard_solve(p, max_outliers=-1)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(6, 60), data=st.data())
def test_result_invariants(seed, n, data):
    m = data.draw(st.integers(1, min(6, n - 3)))
    s = data.draw(st.integers(0, (n - m) // 3))
    noise = data.draw(st.sampled_from([0.0, 0.5, 2.0]))
    x, theta, u, eta, y = _instance(seed, n, m, s, noise=noise)
    assume(np.linalg.cond(x) < 1e6)
    eps0 = data.draw(st.sampled_from([0.0, float(np.linalg.norm(eta)), 1.0]))
    for engine in ENGINES:
        res = gard_solve(RegressionProblem(x, y, eps0), engine)
        tr = res.residual_trace
        assert all(b < a for a, b in zip(tr, tr[1:]))
        assert len(tr) == res.iterations + 1 == len(res.support) + 1
        assert len(set(res.support)) == len(res.support)
        assert res.u_star.indices.tolist() == sorted(res.support)
        assert tr[-1] <= max(eps0, 1e-10) or res.iterations == n - m - 1


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(8, 80), data=st.data())
def test_engines_agree_property(seed, n, data):
    m = data.draw(st.integers(1, min(8, n - 4)))
    s = data.draw(st.integers(0, (n - m) // 4))
    x, theta, u, eta, y = _instance(seed, n, m, s, noise=1.0)
    assume(np.linalg.cond(x) < 1e6)
    p = RegressionProblem(x, y, float(np.linalg.norm(eta)))
    a, b = gard_solve(p, "naive"), gard_solve(p, "cholesky")
    assert a.support == b.support
    np.testing.assert_allclose(a.theta_star, b.theta_star, atol=1e-8)
    np.testing.assert_allclose(a.u_star.to_dense(), b.u_star.to_dense(), atol=1e-8)


def test_backends_give_same_path():
    from gardlab import _backend
    if "cython" not in _backend.available():
        pytest.skip("compiled backend not built")
    x, *_, y = _instance(7, 80, 6, 10, noise=1.0)
    out = []
    for name in ("cython", "python"):
        k = _backend.get(name)
        out.append(k.gard_cholesky_path(x, y, 5.0, 73, 1e-12))
    np.testing.assert_array_equal(out[0][1], out[1][1])
    np.testing.assert_allclose(out[0][0], out[1][0], atol=1e-10)
    np.testing.assert_allclose(out[0][2], out[1][2], atol=1e-10)
