import numpy as np
import pytest

from riskbench.errors import ValidationError
from riskbench.models import GBMModel, ModelSpec, ObliviousTree, fit, gbm_round, model_to_json

MODES = ("gbm_depthwise", "gbm_leafwise", "gbm_oblivious")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(150, 5))
    y = np.where(X[:, 1] > 0.2, 3.0, -1.0) + 0.5 * X[:, 3] + 0.1 * rng.normal(size=150)
    return X, y


class TestRounds:
    def test_zero_rounds_is_mean(self, data):
        X, y = data
        for family in MODES:
            model = fit(ModelSpec(family, {"n_rounds": 0}), X, y)
            assert np.allclose(model.predict(X), y.mean())

    def test_training_mse_non_increasing(self, data):
        X, y = data
        for family in MODES:
            model = fit(ModelSpec(family, {"n_rounds": 30}), X, y)
            hist = np.array(model.train_mse_history)
            assert len(hist) == 30
            assert np.all(np.diff(hist) <= 1e-12), family

    def test_zero_residuals_round_is_noop(self, data):
        X, _ = data
        y = np.full(len(X), 2.0)
        for family in MODES:
            model = fit(ModelSpec(family, {"n_rounds": 3}), X, y)
            assert np.allclose(model.predict(X), 2.0)

    def test_gbm_round_functional_step(self, data):
        X, y = data
        base = fit(ModelSpec("gbm_leafwise", {"n_rounds": 0}), X, y)
        stepped = gbm_round(base, X, y)
        assert len(base.trees) == 0
        assert len(stepped.trees) == 1
        mse0 = ((base.predict(X) - y) ** 2).mean()
        mse1 = ((stepped.predict(X) - y) ** 2).mean()
        assert mse1 <= mse0

    def test_learning_rate_bounds(self, data):
        X, y = data
        model = fit(ModelSpec("gbm_leafwise", {"n_rounds": 0}), X, y)
        with pytest.raises(ValidationError):
            gbm_round(model, X, y, learning_rate=0.0)
        with pytest.raises(ValidationError):
            gbm_round(model, X, y, learning_rate=1.5)

    def test_full_memorization_single_round(self):
        # learning rate 1 and depth enough to isolate every point
        X = np.arange(8.0)[:, None]
        y = np.array([3.0, -1.0, 2.0, 7.0, 0.5, -2.0, 4.0, 1.0])
        model = fit(
            ModelSpec("gbm_depthwise",
                      {"n_rounds": 1, "learning_rate": 1.0, "max_depth": 8,
                       "min_samples_leaf": 1}),
            X, y,
        )
        assert ((model.predict(X) - y) ** 2).mean() == pytest.approx(0.0, abs=1e-20)


class TestOblivious:
    def test_one_condition_per_level(self, data):
        X, y = data
        model = fit(ModelSpec("gbm_oblivious", {"n_rounds": 10, "max_depth": 2}), X, y)
        for tree in model.trees:
            assert isinstance(tree, ObliviousTree)
            assert 1 <= len(tree.levels) <= 2
            assert len(tree.condition_pairs()) == len(tree.levels)
            assert len(tree.leaf_values) == 2 ** len(tree.levels)

    def test_balanced_prediction_structure(self, data):
        X, y = data
        model = fit(ModelSpec("gbm_oblivious", {"n_rounds": 5, "max_depth": 3}), X, y)
        probe = np.random.default_rng(1).normal(size=(40, 5))
        assert np.isfinite(model.predict(probe)).all()


class TestPersistence:
    def test_serialization_round_trip(self, data):
        X, y = data
        probe = np.random.default_rng(2).normal(size=(30, 5))
        for family in MODES:
            model = fit(ModelSpec(family, {"n_rounds": 8}), X, y)
            doc = model_to_json(model)
            from riskbench.models import model_from_json

            again = model_from_json(doc)
            assert np.array_equal(model.predict(probe), again.predict(probe))
            assert model_to_json(again) == doc

    def test_deterministic(self, data):
        X, y = data
        for family in MODES:
            a = model_to_json(fit(ModelSpec(family, {"n_rounds": 6}), X, y))
            b = model_to_json(fit(ModelSpec(family, {"n_rounds": 6}), X, y))
            assert a == b


class TestImportance:
    def test_split_features_get_credit(self, data):
        X, y = data
        for family in MODES:
            model = fit(ModelSpec(family, {"n_rounds": 20}), X, y)
            imp = model.feature_importance()
            assert imp.shape == (5,)
            assert int(np.argmax(imp)) == 1  # the step feature dominates
