import numpy as np
import pytest

from riskbench.errors import ValidationError
from riskbench.preprocess import (
    ImputeConfig,
    MEstimateEncoder,
    SplitPlan,
    Standardizer,
    fit_mestimate,
    fit_standardize,
    iterative_impute,
    kfold_indices,
    stratified_split_indices,
)
from riskbench.table import Column, DataTable


def cat_column(name, values, mask=None):
    values = np.array(values, dtype=object)
    mask = np.zeros(len(values), bool) if mask is None else np.array(mask, bool)
    return Column(name, "categorical", values, mask)


def num_column(name, values, mask=None):
    values = np.array(values, dtype=np.float64)
    mask = np.zeros(len(values), bool) if mask is None else np.array(mask, bool)
    return Column(name, "numerical", values, mask)


class TestMEstimate:
    def hand_table(self):
        # category "a": 4 rows at mean 2.0; global mean 3.0
        col = cat_column("c", ["a"] * 4 + ["b"] * 8)
        y = np.array([2.0] * 4 + [3.5] * 8)
        return DataTable([col], {"mpl_avg_safe": y})

    def test_hand_case(self):
        enc = fit_mestimate(self.hand_table(), "mpl_avg_safe", 1.0)
        assert enc.mappings["c"]["a"] == pytest.approx(2.2)

    def test_no_smoothing_reduces_to_category_mean(self):
        enc = fit_mestimate(self.hand_table(), "mpl_avg_safe", 0.0)
        assert enc.mappings["c"]["a"] == pytest.approx(2.0)

    def test_unseen_category_maps_to_global_mean(self):
        enc = fit_mestimate(self.hand_table(), "mpl_avg_safe", 1.0)
        new = DataTable([cat_column("c", ["zz"])], {})
        assert enc.encode(new).column("c").values[0] == pytest.approx(3.0)

    def test_negative_m_rejected(self):
        with pytest.raises(ValidationError):
            fit_mestimate(self.hand_table(), "mpl_avg_safe", -0.5)

    def test_missing_category_is_its_own_level(self):
        col = cat_column("c", ["a", "a", None, None], [False, False, True, True])
        y = np.array([1.0, 1.0, 9.0, 9.0])
        enc = fit_mestimate(DataTable([col], {"mpl_avg_safe": y}), "mpl_avg_safe", 0.0)
        assert enc.mappings["c"]["__missing__"] == pytest.approx(9.0)
        encoded = enc.encode(DataTable([col], {"mpl_avg_safe": y}))
        assert encoded.column("c").values[2] == pytest.approx(9.0)
        assert not encoded.column("c").mask.any()

    def test_encoded_value_between_category_and_global_mean(self):
        rng = np.random.default_rng(0)
        for trial in range(25):
            n = rng.integers(5, 60)
            levels = rng.choice(list("abcd"), size=n)
            y = rng.normal(size=n)
            m = float(rng.uniform(0, 20))
            table = DataTable([cat_column("c", levels)], {"mpl_avg_safe": y})
            enc = fit_mestimate(table, "mpl_avg_safe", m)
            global_mean = y.mean()
            for level, encoded in enc.mappings["c"].items():
                level_mean = y[levels == level].mean()
                lo, hi = sorted((level_mean, global_mean))
                assert lo - 1e-12 <= encoded <= hi + 1e-12

    def test_limits_count_and_smoothing(self):
        # count -> infinity approaches the category mean
        big = DataTable(
            [cat_column("c", ["a"] * 5000 + ["b"] * 10)],
            {"mpl_avg_safe": np.array([1.0] * 5000 + [7.0] * 10)},
        )
        enc = fit_mestimate(big, "mpl_avg_safe", 5.0)
        assert enc.mappings["c"]["a"] == pytest.approx(1.0, abs=2e-2)
        # M -> infinity approaches the global mean
        enc_inf = fit_mestimate(self.hand_table(), "mpl_avg_safe", 1e9)
        assert enc_inf.mappings["c"]["a"] == pytest.approx(3.0, abs=1e-6)

    def test_test_target_permutation_invariance(self):
        train = self.hand_table()
        enc = fit_mestimate(train, "mpl_avg_safe", 1.0)
        test_cols = [cat_column("c", ["a", "b", "zz"])]
        t1 = DataTable([c.copy() for c in test_cols], {"mpl_avg_safe": np.array([9.0, 1.0, 2.0])})
        t2 = DataTable([c.copy() for c in test_cols], {"mpl_avg_safe": np.array([2.0, 9.0, 1.0])})
        assert np.array_equal(enc.encode(t1).column("c").values,
                              enc.encode(t2).column("c").values)

    def test_json_round_trip(self):
        enc = fit_mestimate(self.hand_table(), "mpl_avg_safe", 1.0)
        back = MEstimateEncoder.from_json(enc.to_json())
        assert back.mappings == enc.mappings
        assert back.global_mean == enc.global_mean


class TestIterativeImpute:
    def test_no_missing_is_identity(self):
        table = DataTable([num_column("x", [1.0, 2.0, 3.0])], {})
        out = iterative_impute(table, ImputeConfig(), seed=0)
        assert np.array_equal(out.column("x").values, [1.0, 2.0, 3.0])

    def test_perfectly_correlated_pair(self):
        # y = 2x with x on a small grid so the tree learner can isolate it
        rng = np.random.default_rng(3)
        x = np.repeat(np.arange(10.0), 30)
        rng.shuffle(x)
        y = 2.0 * x
        mask = np.zeros(len(x), bool)
        mask[7] = True
        y_masked = y.copy()
        y_masked[7] = np.nan
        table = DataTable(
            [num_column("x", x), num_column("y", y_masked, mask)], {}
        )
        out = iterative_impute(table, ImputeConfig(max_rounds=5, tol=1e-4), seed=0)
        assert out.column("y").values[7] == pytest.approx(2.0 * x[7], abs=0.05)
        assert not out.column("y").mask.any()

    def test_observed_cells_never_altered(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=100)
        y = 3 * x + rng.normal(size=100)
        mask = np.zeros(100, bool)
        mask[[4, 10, 55]] = True
        y_in = np.where(mask, np.nan, y)
        table = DataTable([num_column("x", x), num_column("y", y_in, mask)], {})
        out = iterative_impute(table, ImputeConfig(max_rounds=2), seed=0)
        assert np.array_equal(out.column("y").values[~mask], y[~mask])
        assert np.array_equal(out.column("x").values, x)

    def test_infinite_tol_runs_single_round(self):
        x = np.repeat(np.arange(10.0), 5)
        mask = np.zeros(50, bool)
        mask[0] = True
        table = DataTable(
            [num_column("x", x), num_column("y", np.where(mask, np.nan, 2 * x), mask)], {}
        )
        out = iterative_impute(table, ImputeConfig(max_rounds=7, tol=float("inf")), seed=0)
        assert out.impute_rounds_run == 1

    def test_all_missing_column_rejected(self):
        table = DataTable(
            [num_column("x", [1.0, 2.0]), num_column("y", [np.nan] * 2, [True, True])], {}
        )
        with pytest.raises(ValidationError, match="y"):
            iterative_impute(table, ImputeConfig(), seed=0)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=80)
        mask = rng.random(80) < 0.2
        y = np.where(mask, np.nan, 2 * x)
        table = DataTable([num_column("x", x), num_column("y", y, mask)], {})
        a = iterative_impute(table, ImputeConfig(max_rounds=2), seed=3)
        b = iterative_impute(table, ImputeConfig(max_rounds=2), seed=3)
        assert np.array_equal(a.column("y").values, b.column("y").values)


class TestStratifiedSplit:
    def test_sizes_and_partition(self):
        y = np.random.default_rng(0).normal(size=100)
        train, test, fell_back = stratified_split_indices(y, SplitPlan(0.2, 10, seed=1))
        assert len(test) == 20 and len(train) == 80
        assert not fell_back
        assert np.array_equal(np.union1d(train, test), np.arange(100))
        assert len(np.intersect1d(train, test)) == 0

    def test_partition_many_seeds(self):
        y = np.random.default_rng(1).normal(size=53)
        for seed in range(20):
            train, test, _ = stratified_split_indices(y, SplitPlan(0.25, 5, seed=seed))
            assert np.array_equal(np.union1d(train, test), np.arange(53))

    def test_degenerate_target_falls_back(self):
        _, test, fell_back = stratified_split_indices(np.ones(40), SplitPlan(0.25, 10, seed=2))
        assert fell_back
        assert len(test) == 10

    def test_stratification_balances_target_means(self):
        # Monte-Carlo oracle: mean gap under stratification beats a plain
        # random split on average across seeds.
        rng = np.random.default_rng(7)
        y = rng.lognormal(0, 1.0, size=200)
        strat_gaps = []
        plain_gaps = []
        for seed in range(100):
            tr, te, _ = stratified_split_indices(y, SplitPlan(0.2, 10, seed=seed))
            strat_gaps.append(abs(y[tr].mean() - y[te].mean()))
            r = np.random.default_rng(seed)
            perm = r.permutation(200)
            plain_gaps.append(abs(y[perm[40:]].mean() - y[perm[:40]].mean()))
        assert np.mean(strat_gaps) < np.mean(plain_gaps)

    def test_too_few_rows(self):
        with pytest.raises(ValidationError):
            stratified_split_indices(np.arange(5.0), SplitPlan(0.2, 10, seed=0))


class TestKFold:
    def test_ten_singletons(self):
        folds = kfold_indices(10, 10, seed=0)
        assert [len(f) for f in folds] == [1] * 10

    def test_sizes_103_by_10(self):
        sizes = sorted(len(f) for f in kfold_indices(103, 10, seed=1))
        assert sizes == [10] * 7 + [11] * 3

    def test_identical_seed_identical_folds(self):
        a = kfold_indices(57, 7, seed=9)
        b = kfold_indices(57, 7, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_partition_exhaustive_small(self):
        for n in range(2, 13):
            for k in range(2, min(n, 4) + 1):
                for seed in range(3):
                    folds = kfold_indices(n, k, seed)
                    merged = np.sort(np.concatenate(folds))
                    assert np.array_equal(merged, np.arange(n))
                    assert max(len(f) for f in folds) - min(len(f) for f in folds) <= 1

    def test_k_larger_than_n(self):
        with pytest.raises(ValidationError):
            kfold_indices(3, 5, seed=0)


class TestStandardizer:
    def test_hand_column(self):
        std = fit_standardize(np.array([[1.0], [2.0], [3.0]]))
        out = std.apply(np.array([[1.0], [2.0], [3.0]]))
        assert out.ravel() == pytest.approx([-1.0, 0.0, 1.0])

    def test_train_moments(self):
        X = np.random.default_rng(0).normal(3.0, 5.0, size=(200, 4))
        std = fit_standardize(X)
        Z = std.apply(X)
        assert np.abs(Z.mean(axis=0)).max() < 1e-10
        assert np.abs(Z.std(axis=0, ddof=1) - 1).max() < 1e-10

    def test_constant_column_passes_through(self):
        X = np.column_stack([np.ones(5), np.arange(5.0)])
        std = fit_standardize(X)
        assert std.constant.tolist() == [True, False]
        out = std.apply(X)
        assert np.array_equal(out[:, 0], np.ones(5))

    def test_test_rows_use_train_statistics(self):
        train = np.array([[0.0], [2.0]])
        std = fit_standardize(train)
        # mean 1, sample sd sqrt(2)
        out = std.apply(np.array([[4.0]]))
        assert out[0, 0] == pytest.approx(3.0 / np.sqrt(2.0))

    def test_json_round_trip(self):
        std = fit_standardize(np.random.default_rng(1).normal(size=(20, 3)))
        back = Standardizer.from_json(std.to_json())
        assert np.array_equal(back.mean, std.mean)
        assert np.array_equal(back.sd, std.sd)
