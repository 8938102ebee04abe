import numpy as np
import pytest

import hdcox as hx
from hdcox.nodewise import CERT_SLACK

from conftest import literal_factor_matrix, random_instance


def random_psd(seed, p, cond=5.0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    eig = np.linspace(1.0, cond, p)
    return q @ np.diag(eig) @ q.T


def soft(z, t):
    return np.sign(z) * max(abs(z) - t, 0.0)


class TestNodewiseRegression:
    def test_diagonal_gives_zero(self):
        s = np.diag([2.0, 1.0, 0.5])
        for j in range(3):
            assert np.array_equal(hx.nodewise_regression(s, j, 0.05), np.zeros(2))

    @pytest.mark.parametrize("r", [0.5, -0.7, 0.2])
    @pytest.mark.parametrize("lam", [0.1, 0.3, 1.0])
    def test_p2_closed_form(self, r, lam):
        s = np.array([[1.0, r], [r, 1.0]])
        gamma = hx.nodewise_regression(s, 0, lam)
        assert gamma == pytest.approx([soft(r, lam)], abs=1e-8)

    @pytest.mark.parametrize("seed", range(3))
    def test_p3_matches_grid_search(self, seed):
        s = random_psd(seed, 3)
        lam = 0.08
        gamma = hx.nodewise_regression(s, 1, lam)

        def objective(g):
            v = np.array([-g[0], 1.0, -g[1]])
            return v @ s @ v + 2 * lam * np.abs(g).sum()

        grid = np.linspace(-1.5, 1.5, 121)
        best, best_val = None, np.inf
        for a in grid:
            for b in grid:
                val = objective((a, b))
                if val < best_val:
                    best, best_val = np.array([a, b]), val
        width = grid[1] - grid[0]
        for _ in range(40):
            improved = False
            for j in range(2):
                for mult in (-1.0, -0.5, 0.5, 1.0):
                    cand = best.copy()
                    cand[j] += mult * width
                    if abs(cand[j]) < 0.6 * width:
                        cand[j] = 0.0
                    if objective(cand) < best_val - 1e-14:
                        best, best_val = cand, objective(cand)
                        improved = True
            if not improved:
                width *= 0.5
        assert gamma == pytest.approx(best, abs=1e-4)

    def test_kkt_certificate(self):
        s = random_psd(7, 6, cond=8.0)
        for j in range(6):
            gamma = hx.nodewise_regression(s, j, 0.05)
            others = np.delete(np.arange(6), j)
            resid = s[np.ix_(others, others)] @ gamma - s[others, j]
            assert np.abs(resid).max() <= 0.05 + 1e-8

    def test_objective_matches_literal_factor_construction(self):
        # same objective whether written on the huge factor matrix or on its Gram
        for seed in range(3):
            ds = random_instance(seed, n=13, p=4)
            beta = np.random.default_rng(seed).normal(size=4) * 0.3
            c = literal_factor_matrix(ds, beta)
            sigma = hx.hessian(ds, beta)
            rng = np.random.default_rng(seed + 1)
            lam = 0.05
            for _ in range(20):
                gamma = rng.normal(size=3)
                j = int(rng.integers(0, 4))
                others = np.delete(np.arange(4), j)
                lit = (
                    np.sum((c[:, j] - c[:, others] @ gamma) ** 2)
                    + 2 * lam * np.abs(gamma).sum()
                )
                v = np.zeros(4)
                v[j] = 1.0
                v[others] = -gamma
                quad = v @ sigma @ v + 2 * lam * np.abs(gamma).sum()
                assert quad == pytest.approx(lit, rel=1e-10)


class TestTauSquared:
    def test_diagonal(self):
        s = np.diag([2.0, 3.0])
        assert hx.tau_squared(s, 0, np.zeros(1)) == 2.0

    def test_p2_closed_form_value(self):
        s = np.array([[1.0, 0.5], [0.5, 1.0]])
        gamma = hx.nodewise_regression(s, 0, 0.1)
        assert hx.tau_squared(s, 0, gamma) == pytest.approx(0.8, abs=1e-10)

    def test_large_lambda_boundary(self):
        s = np.array([[1.0, 0.5], [0.5, 1.0]])
        gamma = hx.nodewise_regression(s, 0, 10.0)
        assert np.array_equal(gamma, [0.0])
        assert hx.tau_squared(s, 0, gamma) == 1.0

    def test_nonpositive_raises_with_coordinate(self):
        s = np.array([[1.0, 0.5], [0.5, 1.0]])
        with pytest.raises(hx.PrecisionError) as err:
            hx.tau_squared(s, 1, np.array([3.0]))
        assert err.value.coordinate == 1

    def test_never_exceeds_diagonal(self):
        for seed in range(5):
            s = random_psd(seed + 30, 5)
            for j in range(5):
                gamma = hx.nodewise_regression(s, j, 0.05)
                assert hx.tau_squared(s, j, gamma) <= s[j, j] + 1e-8


class TestBuildPrecision:
    def test_identity(self):
        prec = hx.build_precision(np.eye(4), np.full(4, 0.1))
        assert prec.theta == pytest.approx(np.eye(4), abs=1e-12)
        assert prec.tau_sq == pytest.approx(np.ones(4), abs=1e-12)

    def test_p2_closed_form_row(self):
        s = np.array([[1.0, 0.5], [0.5, 1.0]])
        prec = hx.build_precision(s, [0.1, 0.1])
        assert prec.theta[0] == pytest.approx([1.25, -0.5], abs=1e-8)

    def test_relaxed_inverse_certificate(self):
        for seed in range(4):
            s = random_psd(seed + 50, 6, cond=10.0)
            lams = np.full(6, 0.08)
            prec = hx.build_precision(s, lams)
            resid = s @ prec.theta.T - np.eye(6)
            bound = lams / prec.tau_sq + CERT_SLACK
            assert np.all(np.abs(resid).max(axis=0) <= bound)

    def test_theta_converges_to_inverse(self):
        s = random_psd(3, 3, cond=4.0)
        prec = hx.build_precision(s, np.full(3, 1e-6))
        assert prec.theta == pytest.approx(np.linalg.inv(s), abs=1e-3)

    def test_gbar_diagonal_is_ones(self):
        s = random_psd(9, 4)
        prec = hx.build_precision(s, np.full(4, 0.1))
        gbar = prec.theta * prec.tau_sq[:, None]
        assert np.diag(gbar) == pytest.approx(np.ones(4), abs=1e-12)


class TestCvNodewise:
    def test_deterministic(self):
        ds = random_instance(61, n=40, p=4)
        fit = hx.fit_lasso(ds, 0.5 * hx.lambda_max(ds))
        a = hx.cv_nodewise(ds, fit.beta_hat, folds=5, seed=4, grid_size=5)
        b = hx.cv_nodewise(ds, fit.beta_hat, folds=5, seed=4, grid_size=5)
        assert np.array_equal(a, b)

    def test_p1_boundary(self):
        rng = np.random.default_rng(0)
        ds = hx.new_dataset(rng.exponential(size=25) + 0.01, np.ones(25),
                            rng.standard_normal((25, 1)))
        lams = hx.cv_nodewise(ds, np.zeros(1), folds=5, seed=0)
        assert lams.shape == (1,)
        sigma = hx.hessian(ds, np.zeros(1))
        prec = hx.build_precision(sigma, lams)
        assert prec.tau_sq[0] == pytest.approx(sigma[0, 0])

    def test_independent_design_selects_sparse_rows(self):
        # population-diagonal curvature: chosen penalties should mostly zero out gamma
        rng = np.random.default_rng(123)
        n, p = 500, 5
        x = np.clip(rng.standard_normal((n, p)), -3, 3)
        t = rng.exponential(size=n)
        ds = hx.new_dataset(t + 1e-12, np.ones(n), x)
        lams = hx.cv_nodewise(ds, np.zeros(p), folds=5, seed=1, grid_size=8)
        sigma = hx.hessian(ds, np.zeros(p))
        prec = hx.build_precision(sigma, lams)
        support_sizes = [np.count_nonzero(g) for g in prec.gamma]
        assert np.mean(support_sizes) <= 1.0
