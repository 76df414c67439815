"""LARS, lasso-LARS and OMP path behavior."""

import numpy as np
import pytest

from riskbench.errors import ValidationError
from riskbench.models import ModelSpec, fit, lars_path, omp_path


@pytest.fixture(scope="module")
def sparse_problem():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 12))
    beta = np.zeros(12)
    beta[[1, 4, 7]] = [3.0, -2.0, 1.5]
    y = X @ beta + 0.02 * rng.normal(size=80)
    return X, y, beta


class TestLars:
    def test_path_lambda_decreasing(self, sparse_problem):
        X, y, _ = sparse_problem
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        path = lars_path(Xc, yc, lasso_mod=True)
        lams = [k.lam for k in path.knots]
        assert all(b <= a + 1e-12 for a, b in zip(lams, lams[1:]))

    def test_first_active_is_most_correlated(self, sparse_problem):
        X, y, _ = sparse_problem
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        path = lars_path(Xc, yc, lasso_mod=False)
        assert path.knots[1].active[0] == int(np.argmax(np.abs(Xc.T @ yc)))

    def test_full_path_reaches_ols(self, sparse_problem):
        X, y, _ = sparse_problem
        model = fit(ModelSpec("lars", {"n_nonzero_coefs": 12}), X, y)
        ols = fit(ModelSpec("ols"), X, y)
        assert np.abs(model.coef - ols.coef).max() < 1e-8

    def test_step_cap_limits_support(self, sparse_problem):
        X, y, _ = sparse_problem
        model = fit(ModelSpec("lars", {"n_nonzero_coefs": 3}), X, y)
        assert np.count_nonzero(model.coef) <= 3


class TestLassoLars:
    def test_matches_coordinate_descent(self, sparse_problem):
        X, y, _ = sparse_problem
        for alpha in (0.005, 0.05, 0.5):
            ll = fit(ModelSpec("lasso_lars", {"alpha": alpha}), X, y)
            cd = fit(ModelSpec("lasso", {"alpha": alpha, "tol": 1e-12}), X, y)
            assert np.abs(ll.coef - cd.coef).max() < 1e-6, alpha

    def test_above_threshold_zero(self, sparse_problem):
        from riskbench.models import lasso_deactivation_alpha

        X, y, _ = sparse_problem
        model = fit(ModelSpec("lasso_lars", {"alpha": lasso_deactivation_alpha(X, y) * 1.01}), X, y)
        assert np.all(model.coef == 0.0)


class TestOMP:
    def test_orthonormal_first_pick(self):
        rng = np.random.default_rng(5)
        Q, _ = np.linalg.qr(rng.normal(size=(40, 6)))
        y = Q @ np.array([0.1, 3.0, -0.2, 0.5, 0.0, -1.0])
        path = omp_path(Q, y, 3)
        projections = np.abs(Q.T @ (y - y.mean()))
        assert path.steps[0].feature == int(np.argmax(projections))

    def test_residual_norm_non_increasing(self, sparse_problem):
        X, y, _ = sparse_problem
        path = omp_path(X, y, 12)
        norms = [s.residual_norm for s in path.steps]
        assert all(b <= a + 1e-9 for a, b in zip(norms, norms[1:]))

    def test_full_rank_final_step_is_ols(self, sparse_problem):
        X, y, _ = sparse_problem
        model = fit(ModelSpec("omp", {"n_nonzero_coefs": 12}), X, y)
        ols = fit(ModelSpec("ols"), X, y)
        assert np.abs(model.coef - ols.coef).max() < 1e-8

    def test_orthogonal_target_selects_nothing(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
        y = np.array([1.0, 1.0, -1.0, -1.0])  # orthogonal to both columns
        path = omp_path(X, y, 2)
        assert path.steps == []
        model = fit(ModelSpec("omp", {"n_nonzero_coefs": 2}), X, y)
        assert np.all(model.coef == 0.0)
        assert model.intercept == pytest.approx(0.0)

    def test_recovers_sparse_support(self, sparse_problem):
        X, y, beta = sparse_problem
        path = omp_path(X, y, 3)
        assert {s.feature for s in path.steps} == set(np.flatnonzero(beta))

    def test_rank_deficient_stops_with_flag(self):
        # a duplicated huge-scale column: rounding noise makes it look
        # correlated with the residual, the active-set refit then loses rank
        rng = np.random.default_rng(0)
        x = rng.normal(size=40) * 1e8
        X = np.column_stack([x, x.copy(), rng.normal(size=40)])
        y = 1e-8 * x + rng.normal(size=40)
        path = omp_path(X, y, 3)
        assert "rank_deficient_stop" in path.flags
        assert len(path.steps) < 3

    def test_k_max_bounds(self, sparse_problem):
        X, y, _ = sparse_problem
        with pytest.raises(ValidationError):
            omp_path(X, y, 0)
        with pytest.raises(ValidationError):
            omp_path(X, y, 13)
