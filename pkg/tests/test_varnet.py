"""Elastic-net VAR solver: oracle comparisons, invariants, tuning."""

import numpy as np
import pytest

from sparsevecm.varnet import (
    ConvergenceError,
    ElasticNetConfig,
    cross_validate,
    fit_var,
    lambda_max,
    select_lag,
)
from sparsevecm.varnet import _cd_solve, _lag_design, _standardize
from tests.conftest import simulate_var, stable_var_coefs

TIGHT = ElasticNetConfig(tol=1e-12)


def _ols_theta(values, p):
    """Normal-equations oracle: intercept-augmented least squares."""
    X, Y = _lag_design(values, p)
    Xi = np.hstack([np.ones((X.shape[0], 1)), X])
    beta = np.linalg.solve(Xi.T @ Xi, Xi.T @ Y)
    return beta[0], beta[1:]  # intercept, slopes (d, m)


@pytest.fixture(scope="module")
def var2_values():
    rng = np.random.default_rng(99)
    phis = stable_var_coefs(3, 2, rng)
    return simulate_var(np.full(3, 0.5), phis, 0.09 * np.eye(3), 300, rng)


class TestSolverOracles:
    def test_lambda_zero_matches_ols(self, var2_values):
        fit = fit_var(var2_values, 2, TIGHT, lam=0.0, gamma=1.0)
        intercept, slopes = _ols_theta(var2_values, 2)
        assert np.max(np.abs(fit.theta[:, 1:] - slopes.T)) < 1e-6
        assert np.max(np.abs(fit.intercept - intercept)) < 1e-6

    def test_full_shrinkage(self, var2_values):
        lam = 10.0 * lambda_max(var2_values, 2)
        fit = fit_var(var2_values, 2, TIGHT, lam=lam, gamma=1.0)
        for Phi in fit.lag_coefs:
            assert np.all(Phi == 0.0)
        _, Y = _lag_design(var2_values, 2)
        np.testing.assert_allclose(fit.intercept, Y.mean(axis=0), atol=1e-12)

    def test_univariate_lasso_closed_form(self):
        # Scalar AR(1): one predictor, standardized internally. The fitted
        # slope on the standardized scale must equal the soft-thresholded
        # correlation divided by n.
        rng = np.random.default_rng(4)
        y = simulate_var(np.array([0.2]), [np.array([[0.6]])], np.eye(1) * 0.25, 250, rng)
        lam = 8.0
        fit = fit_var(y, 1, TIGHT, lam=lam, gamma=1.0)
        X, Y = _lag_design(y, 1)
        x = (X[:, 0] - X[:, 0].mean()) / X[:, 0].std()
        yc = Y[:, 0] - Y[:, 0].mean()
        n = x.size
        rho = float(x @ yc)
        b_std = np.sign(rho) * max(abs(rho) - lam / 2.0, 0.0) / n
        slope = b_std / X[:, 0].std()
        assert fit.lag_coefs[0][0, 0] == pytest.approx(slope, abs=1e-8)

    def test_univariate_ridge_closed_form(self):
        rng = np.random.default_rng(5)
        y = simulate_var(np.array([0.0]), [np.array([[0.5]])], np.eye(1) * 0.25, 250, rng)
        lam = 25.0
        fit = fit_var(y, 1, TIGHT, lam=lam, gamma=0.0)
        X, Y = _lag_design(y, 1)
        x = (X[:, 0] - X[:, 0].mean()) / X[:, 0].std()
        yc = Y[:, 0] - Y[:, 0].mean()
        b_std = float(x @ yc) / (x @ x + lam)  # ridge parameter equals lam
        slope = b_std / X[:, 0].std()
        assert fit.lag_coefs[0][0, 0] == pytest.approx(slope, abs=1e-8)

    def test_multivariate_ridge_closed_form(self, var2_values):
        lam = 5.0
        X, Y = _lag_design(var2_values, 2)
        Z, _, _, _ = _standardize(X, True)
        Yc = Y - Y.mean(axis=0)
        B, _, _ = _cd_solve(Z, Yc, lam, 0.0, 1e-12, 10_000)
        closed = np.linalg.solve(Z.T @ Z + lam * np.eye(Z.shape[1]), Z.T @ Yc)
        assert np.max(np.abs(B - closed)) < 1e-6


class TestSolverInvariants:
    def test_monotone_objective(self, var2_values):
        fit = fit_var(var2_values, 2, ElasticNetConfig(tol=1e-9), lam=0.8, gamma=0.5)
        path = np.array(fit.objective_path)
        assert np.all(np.diff(path) <= path[:-1] * 1e-9 + 1e-12)

    def test_row_separability(self, var2_values):
        X, Y = _lag_design(var2_values, 2)
        Z, _, _, _ = _standardize(X, True)
        Yc = Y - Y.mean(axis=0)
        joint, _, _ = _cd_solve(Z, Yc, 1.5, 0.7, 1e-10, 10_000)
        for i in range(Y.shape[1]):
            solo, _, _ = _cd_solve(Z, Yc[:, [i]], 1.5, 0.7, 1e-10, 10_000)
            assert np.max(np.abs(joint[:, i] - solo[:, 0])) < 1e-10

    def test_residual_reconstruction_identity(self, var2_values):
        fit = fit_var(var2_values, 2, lam=0.5, gamma=0.5)
        X, Y = _lag_design(var2_values, 2)
        recon = Y - fit.intercept - X @ fit.theta[:, 1:].T
        assert np.max(np.abs(recon - fit.residuals)) < 1e-10

    def test_sigma_psd_and_symmetric(self, var2_values):
        fit = fit_var(var2_values, 2, lam=0.5, gamma=0.5)
        np.testing.assert_array_equal(fit.sigma, fit.sigma.T)
        assert np.linalg.eigvalsh(fit.sigma).min() >= -1e-10

    def test_constant_predictor_guard(self):
        rng = np.random.default_rng(6)
        values = rng.standard_normal((100, 2))
        values[:, 1] = 4.0  # constant series; its lag is a constant predictor
        with pytest.warns(UserWarning, match="constant predictor"):
            fit = fit_var(values, 1, lam=0.1, gamma=0.5)
        assert np.all(fit.lag_coefs[0][:, 1] == 0.0)
        assert fit.intercept[1] == pytest.approx(4.0, abs=1e-12)

    def test_nonconvergence_reports_equation(self, var2_values):
        with pytest.raises(ConvergenceError, match="worst equation"):
            fit_var(var2_values, 2, ElasticNetConfig(tol=1e-12, max_sweeps=2), lam=0.0, gamma=1.0)

    def test_gap_rejected(self):
        values = np.ones((50, 2))
        values[3, 1] = np.nan
        with pytest.raises(ValueError, match="gaps"):
            fit_var(values, 1, lam=0.1, gamma=0.5)

    def test_bad_penalty_arguments(self, var2_values):
        with pytest.raises(ValueError, match="nonnegative"):
            fit_var(var2_values, 2, lam=-0.5, gamma=0.5)
        with pytest.raises(ValueError, match="gamma"):
            fit_var(var2_values, 2, lam=0.5, gamma=1.5)
        with pytest.raises(ValueError, match="accompany"):
            fit_var(var2_values, 2, lam=0.5)


class TestConfigValidation:
    def test_bad_lambda_grid(self):
        with pytest.raises(ValueError, match="positive"):
            ElasticNetConfig(lambda_grid=[1.0, -0.5]).validate()
        with pytest.raises(ValueError, match="descending"):
            ElasticNetConfig(lambda_grid=[0.1, 1.0]).validate()

    def test_bad_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            ElasticNetConfig(gamma_grid=[1.5]).validate()

    def test_intercept_penalty_refused(self):
        with pytest.raises(ValueError, match="intercept"):
            ElasticNetConfig(penalize_intercept=True).validate()


class TestCrossValidate:
    def test_single_point_grid_returned(self, var2_values):
        config = ElasticNetConfig(lambda_grid=[0.7], gamma_grid=[0.5])
        fit = fit_var(var2_values, 2, config)
        assert (fit.lam, fit.gamma) == (0.7, 0.5)
        assert fit.cv_table is None

    def test_deterministic(self, var2_values):
        config = ElasticNetConfig(n_lambdas=8, gamma_grid=(0.1, 0.9), cv_folds=4)
        a = cross_validate(var2_values, 2, config)
        b = cross_validate(var2_values, 2, config)
        assert (a.lam, a.gamma) == (b.lam, b.gamma)
        for ra, rb in zip(a.table, b.table):
            assert ra == rb

    def test_insufficient_folds(self):
        values = np.random.default_rng(0).standard_normal((40, 2))
        config = ElasticNetConfig(cv_initial_window=38, cv_step=1, cv_folds=2)
        with pytest.raises(ValueError, match="insufficient folds"):
            cross_validate(values, 1, config)

    def test_cv_beats_ols_on_sparse_dgp(self):
        wins = 0
        runs = 30
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            m, T_train, T_tail = 10, 90, 40
            Phi = np.where(rng.random((m, m)) < 0.05, 0.5, 0.0)
            np.fill_diagonal(Phi, 0.35)
            rho = np.abs(np.linalg.eigvals(Phi)).max()
            if rho >= 0.95:
                Phi *= 0.9 / rho
            values = simulate_var(np.zeros(m), [Phi], np.eye(m), T_train + T_tail, rng)
            train, full = values[:T_train], values
            config = ElasticNetConfig(n_lambdas=12, gamma_grid=(0.5, 0.9), cv_folds=4)
            cv = cross_validate(train, 1, config)
            enet = fit_var(train, 1, config, lam=cv.lam, gamma=cv.gamma)
            ols = fit_var(train, 1, TIGHT, lam=0.0, gamma=1.0)
            X_tail = full[T_train - 1 : -1]
            Y_tail = full[T_train:]
            mse = lambda f: float(
                np.mean((Y_tail - f.intercept - X_tail @ f.lag_coefs[0].T) ** 2)
            )
            if mse(enet) < mse(ols):
                wins += 1
        assert wins >= int(0.8 * runs)


class TestSelectLag:
    def test_recovers_var2(self):
        hits = 0
        runs = 50
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            m = 3
            phis = [0.3 * np.eye(m), 0.4 * np.eye(m)]
            values = simulate_var(np.zeros(m), phis, 0.25 * np.eye(m), 240, rng)
            if select_lag(values, max_p=4) == 2:
                hits += 1
        assert hits >= int(0.8 * runs)

    def test_white_noise_prefers_one(self):
        hits = 0
        runs = 30
        for seed in range(runs):
            rng = np.random.default_rng(seed + 100)
            values = rng.standard_normal((200, 3))
            if select_lag(values, max_p=3) == 1:
                hits += 1
        assert hits > runs // 2

    def test_bad_max_p(self):
        with pytest.raises(ValueError, match="max_p"):
            select_lag(np.zeros((100, 2)), max_p=0)
