import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gardlab import baselines as bl
from gardlab.baselines import AdmmConfig, IrlsConfig


def _data(seed, n, m, out_idx=(), out_val=25.0, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, m))
    theta = rng.normal(0, 5, m)
    y = x @ theta + (rng.normal(0, noise, n) if noise else 0.0)
    y = np.array(y, dtype=float)
    y[list(out_idx)] += out_val
    return x, theta, y


class TestMad:
    def test_constant(self):
        assert bl.mad([4.0] * 7) == 0.0

    def test_small(self):
        assert bl.mad([1.0, 2.0, 3.0]) == 1.0

    def test_even_length_midpoint(self):
        # median 2.5, deviations (1.5, .5, .5, 1.5) -> median 1.0
        assert bl.mad([1.0, 2.0, 3.0, 4.0]) == 1.0

    def test_double_sort_oracle(self, rng):
        v = rng.standard_cauchy(101)
        med = sorted(v)[50]
        dev = sorted(abs(a - med) for a in v)
        assert bl.mad(v) == dev[50]

    def test_empty(self):
        with pytest.raises(ValueError):
            bl.mad([])


class TestTukey:
    def test_values(self):
        assert bl.tukey_weight(0.0) == 1.0
        assert bl.tukey_weight(4.685) == 0.0
        assert bl.tukey_weight(-10.0) == 0.0
        assert bl.tukey_weight(1.0, 2.0) == pytest.approx(0.5625)

    def test_bad_c(self):
        with pytest.raises(ValueError):
            bl.tukey_weight(1.0, 0.0)

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 10))
    def test_even_monotone(self, a, b, c):
        assert bl.tukey_weight(a, c) == bl.tukey_weight(-a, c)
        if abs(a) <= abs(b):
            assert bl.tukey_weight(a, c) >= bl.tukey_weight(b, c)
        w = bl.tukey_weight(a, c)
        assert 0.0 <= w <= 1.0
        if abs(a) >= c:
            assert w == 0.0

    def test_psi(self):
        r = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_allclose(bl.tukey_psi(r, 3.0), r * bl.tukey_weight(r, 3.0))


class TestSoftThreshold:
    def test_examples(self):
        assert bl.soft_threshold(3.0, 1.0) == 2.0
        assert bl.soft_threshold(-0.5, 1.0) == 0.0
        assert bl.soft_threshold(-3.0, 1.0) == -2.0


class TestConfigs:
    @pytest.mark.parametrize("kw", [{"tuning_c": 0}, {"max_iters": 0}, {"param_tol": 0},
                                    {"scale_mode": "x"}, {"scale_mode": "fixed"}])
    def test_irls_invalid(self, kw):
        with pytest.raises(ValueError):
            IrlsConfig(**kw)

    @pytest.mark.parametrize("kw", [{"lam": 0}, {"rho0": 0}, {"rho0": 6.0},
                                    {"rho_growth": 0.9}, {"stop_tol": 0}, {"max_iters": 0}])
    def test_admm_invalid(self, kw):
        with pytest.raises(ValueError):
            AdmmConfig(**kw)


class TestMEstimate:
    def test_exact_data_one_iteration(self):
        x, theta, y = _data(1, 30, 3)
        est, w, it = bl.m_estimate(x, y)
        np.testing.assert_allclose(est, theta, atol=1e-10)
        assert it == 1 and np.max(np.abs(w - 1.0)) <= 1e-12

    def test_single_outlier_matches_clean_subset(self):
        x, theta, y = _data(2, 20, 2, out_idx=[7], out_val=100.0)
        est, w, _ = bl.m_estimate(x, y)
        keep = np.arange(20) != 7
        ref = np.linalg.lstsq(x[keep], y[keep], rcond=None)[0]
        np.testing.assert_allclose(est, ref, atol=1e-4)
        assert w[7] == 0.0

    def test_unit_weights_is_least_squares(self):
        x, _, y = _data(3, 40, 4, noise=1.0)
        # a huge tuning constant gives weights equal to 1 to machine precision
        est, w, _ = bl.m_estimate(x, y, IrlsConfig(tuning_c=1e12))
        np.testing.assert_allclose(est, np.linalg.lstsq(x, y, rcond=None)[0], atol=1e-10)

    def test_weighted_normal_equations(self):
        x, _, y = _data(4, 80, 3, out_idx=range(8), noise=1.0)
        cfg = IrlsConfig(param_tol=1e-12, max_iters=500)
        est, w, it = bl.m_estimate(x, y, cfg)
        # the returned weights are those of the last solve
        r = y - x @ est
        assert np.max(np.abs(x.T @ (w * r))) <= 1e-6 * max(1.0, np.max(np.abs(x.T @ (w * y))))

    def test_fixed_scale_mode(self):
        x, theta, y = _data(5, 50, 2, out_idx=[1, 2], noise=0.1)
        est, _, _ = bl.m_estimate(x, y, IrlsConfig(scale_mode="fixed", fixed_scale=0.1))
        assert np.linalg.norm(est - theta) < 0.2

    def test_all_weights_zero(self):
        x, _, y = _data(6, 30, 2, noise=1.0)
        with pytest.raises(ValueError):
            bl.m_estimate(x, y, IrlsConfig(scale_mode="fixed", fixed_scale=1e-9))


class TestRomp:
    def test_exact_data(self):
        x, theta, y = _data(7, 30, 4)
        est, sel, it = bl.romp(x, y, 1e-6)
        np.testing.assert_allclose(est, theta, atol=1e-8)
        assert it <= 4 and len(set(sel)) == len(sel)

    def test_vanishing_pseudo_residuals_stop(self):
        # constant y: MAD is 0, every pseudo-residual is cut off, nothing is selected
        x = np.zeros((10, 2))
        x[:, 0] = 1.0
        x[:5, 1] = 1.0
        est, sel, it = bl.romp(x, np.full(10, 3.0), 0.0)
        assert sel == () and it == 0
        np.testing.assert_array_equal(est, [0.0, 0.0])

    def test_close_to_m_estimate(self):
        x, _, y = _data(8, 60, 3, out_idx=[0, 5, 9], noise=0.5)
        a, _, _ = bl.m_estimate(x, y)
        b, sel, _ = bl.romp(x, y, 0.0)
        assert len(sel) == 3
        np.testing.assert_allclose(b, a, atol=1e-3)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_no_reselection(self, seed, m):
        x, _, y = _data(seed, 40, m, out_idx=[3], noise=1.0)
        _, sel, it = bl.romp(x, y, 0.0)
        assert len(sel) == len(set(sel)) == it <= m


def _kkt_residual(x, y, theta, u, lam):
    """Subgradient optimality defect for 1/2|y - X theta - u|^2 + lam |u|_1."""
    r = y - x @ theta - u
    theta_part = np.max(np.abs(x.T @ r))
    nz = u != 0
    on = np.abs(r[nz] - lam * np.sign(u[nz]))
    off = np.maximum(np.abs(r[~nz]) - lam, 0.0)
    return max(theta_part, np.max(on, initial=0.0), np.max(off, initial=0.0))


class TestAdmm:
    def test_kkt_small(self):
        x, _, y = _data(9, 10, 2, out_idx=[4], noise=0.3)
        res = bl.admm_lasso(x, y, AdmmConfig(lam=1.2))
        assert res.converged
        assert _kkt_residual(x, y, res.theta, res.u.to_dense(), 1.2) <= 1e-3

    def test_huge_lambda_is_least_squares(self):
        x, _, y = _data(10, 30, 3, out_idx=[1], noise=1.0)
        lam = 1e3 * np.max(np.abs(y))
        res = bl.admm_lasso(x, y, AdmmConfig(lam=lam))
        assert res.u.nnz == 0
        np.testing.assert_allclose(res.theta, np.linalg.lstsq(x, y, rcond=None)[0], atol=1e-4)

    def test_objective_near_kkt_point(self):
        x, _, y = _data(11, 40, 3, out_idx=[0, 1, 2], noise=0.5)
        res = bl.admm_lasso(x, y)
        u = res.u.to_dense()
        assert _kkt_residual(x, y, res.theta, u, 1.2) <= 1e-3
        # an independent solve: coordinate descent on u with theta profiled out
        p = np.eye(40) - x @ np.linalg.pinv(x)
        uc = np.zeros(40)
        for _ in range(5000):
            for i in range(40):
                rest = p @ (y - uc) + p[:, i] * uc[i]
                uc[i] = bl.soft_threshold(p[:, i] @ rest, 1.2) / p[i, i]
        tc = np.linalg.lstsq(x, y - uc, rcond=None)[0]
        f_admm = bl.lasso_objective(x, y, res.theta, u, 1.2)
        f_cd = bl.lasso_objective(x, y, tc, uc, 1.2)
        assert abs(f_admm - f_cd) <= 1e-3

    def test_sparsity_monotone_in_lambda(self):
        x, _, y = _data(12, 50, 3, out_idx=range(6), noise=1.0)
        counts = [bl.admm_lasso(x, y, AdmmConfig(lam=lam)).u.nnz
                  for lam in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
        assert all(b <= a for a, b in zip(counts, counts[1:]))

    def test_max_iters_flag(self):
        x, _, y = _data(13, 30, 2, out_idx=[2], noise=1.0)
        res = bl.admm_lasso(x, y, AdmmConfig(max_iters=3))
        assert not res.converged and res.iterations == 3
        theta, u, it = res
        assert it == 3
