import numpy as np
import pytest

from riskbench.errors import ValidationError
from riskbench.models import ModelSpec, cart_best_split, fit, model_to_json


class TestCartBestSplit:
    def test_constant_target_no_split(self):
        X = np.random.default_rng(0).normal(size=(30, 3))
        assert cart_best_split(X, np.full(30, 2.5)) is None

    def test_step_function_perfect_split(self):
        x = np.arange(10.0)
        y = np.where(x < 5, 0.0, 4.0)
        feature, threshold, gain = cart_best_split(x[:, None], y)
        assert feature == 0
        assert 4.0 < threshold < 5.0
        assert gain == pytest.approx(((y - y.mean()) ** 2).sum())

    def test_min_samples_leaf_infeasible(self):
        x = np.arange(10.0)
        y = np.where(x < 5, 0.0, 4.0)
        assert cart_best_split(x[:, None], y, min_samples_leaf=10) is None

    def test_tie_breaks_to_lowest_feature_then_threshold(self):
        x = np.array([0.0, 0.0, 1.0, 1.0])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        X = np.column_stack([x, x])  # identical gain on both features
        feature, threshold, _ = cart_best_split(X, y)
        assert feature == 0
        assert threshold == pytest.approx(0.5)


class TestDecisionTree:
    def test_learns_axis_aligned_step(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(300, 4))
        y = np.where(X[:, 2] > 0.0, 5.0, 1.0)
        model = fit(ModelSpec("decision_tree", {"max_depth": 2}), X, y)
        pred = model.predict(X)
        assert ((pred > 3) == (y > 3)).mean() > 0.98
        assert int(np.argmax(model.feature_importance())) == 2

    def test_depth_one_is_single_split(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 2))
        y = X[:, 0]
        model = fit(ModelSpec("decision_tree", {"max_depth": 1}), X, y)
        assert len(set(model.predict(X))) <= 2


class TestKNN:
    def test_nearest_is_itself(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 5))
        y = rng.normal(size=40)
        model = fit(ModelSpec("knn", {"k": 1}), X, y)
        assert np.allclose(model.predict(X), y)

    def test_k_exceeds_n(self):
        with pytest.raises(ValidationError):
            fit(ModelSpec("knn", {"k": 10}), np.ones((3, 1)), [1.0, 2.0, 3.0])

    def test_k_mean_of_neighbors(self):
        X = np.array([[0.0], [1.0], [10.0]])
        y = np.array([0.0, 2.0, 100.0])
        model = fit(ModelSpec("knn", {"k": 2}), X, y)
        assert model.predict(np.array([[0.4]]))[0] == pytest.approx(1.0)


class TestForests:
    def test_single_tree_full_features_no_bootstrap_equals_cart(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(150, 5))
        y = X[:, 1] * 2 + np.where(X[:, 3] > 0, 3.0, 0.0)
        forest = fit(
            ModelSpec("random_forest",
                      {"n_trees": 1, "max_features": None, "bootstrap": False,
                       "max_depth": 5, "min_samples_leaf": 2}),
            X, y,
        )
        cart = fit(ModelSpec("decision_tree", {"max_depth": 5, "min_samples_leaf": 2}), X, y)
        probe = rng.normal(size=(60, 5))
        assert np.array_equal(forest.predict(probe), cart.predict(probe))

    def test_forest_beats_single_tree_generalization(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(300, 6))
        f = lambda Z: Z[:, 0] * Z[:, 1] + np.sin(Z[:, 2])  # noqa: E731
        y = f(X) + 0.3 * rng.normal(size=300)
        X_new = rng.normal(size=(300, 6))
        y_new = f(X_new)
        forest = fit(ModelSpec("random_forest", {"n_trees": 30, "max_depth": 6}), X, y)
        tree = fit(ModelSpec("decision_tree", {"max_depth": 6, "min_samples_leaf": 1}), X, y)
        forest_mse = ((forest.predict(X_new) - y_new) ** 2).mean()
        tree_mse = ((tree.predict(X_new) - y_new) ** 2).mean()
        assert forest_mse < tree_mse

    def test_extra_trees_uses_full_data(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(100, 3))
        y = X[:, 0]
        model = fit(ModelSpec("extra_trees", {"n_trees": 10, "max_depth": 4}), X, y)
        assert all(t.n_samples == 100 for t in model.trees)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(80, 4))
        y = rng.normal(size=80)
        for family in ("random_forest", "extra_trees"):
            a = model_to_json(fit(ModelSpec(family, {"n_trees": 5}, seed=3), X, y))
            b = model_to_json(fit(ModelSpec(family, {"n_trees": 5}, seed=3), X, y))
            assert a == b
            c = model_to_json(fit(ModelSpec(family, {"n_trees": 5}, seed=4), X, y))
            assert a != c


class TestAdaBoost:
    def test_sample_weights_stay_probability_simplex(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(120, 4))
        y = X[:, 0] + 0.5 * rng.normal(size=120)
        model = fit(ModelSpec("adaboost", {"n_rounds": 20, "max_depth": 2}), X, y)
        assert len(model.sample_weight_history) >= 1
        for w in model.sample_weight_history:
            assert w.sum() == pytest.approx(1.0, abs=1e-12)
            assert (w >= 0).all()

    def test_weighted_median_prediction_finite(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(60, 3))
        y = rng.normal(size=60)
        model = fit(ModelSpec("adaboost", {"n_rounds": 10}), X, y)
        assert np.isfinite(model.predict(X)).all()

    def test_improves_over_stump(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(200, 2))
        y = X[:, 0] ** 2
        boosted = fit(ModelSpec("adaboost", {"n_rounds": 25, "max_depth": 2}), X, y)
        stump = fit(ModelSpec("decision_tree", {"max_depth": 2}), X, y)
        assert ((boosted.predict(X) - y) ** 2).mean() < ((stump.predict(X) - y) ** 2).mean()
