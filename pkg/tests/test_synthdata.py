import numpy as np
import pytest

from riskbench import synthdata as sd
from riskbench.errors import ValidationError
from riskbench.table import write_csv


@pytest.fixture(scope="module")
def schema():
    return sd.register_schema()


class TestSchema:
    def test_counts(self, schema):
        assert len(schema.entries) == 66
        assert schema.count("categorical") == 38
        assert schema.count("numerical") == 28

    def test_known_missing_rates(self, schema):
        assert schema.entry("SMODELRAMINGPENSIOENPREMIEWG2").missing_rate == 0.3627
        sex = schema.entry("GBAGESLACHT")
        assert sex.missing_rate == 0.0
        assert sex.kind == "categorical"

    def test_mean_missing_rate_near_twelve_percent(self, schema):
        rates = [e.missing_rate for e in schema.entries]
        assert abs(np.mean(rates) - 0.12) < 0.02

    def test_names_unique_and_age_square_present(self, schema):
        assert len(set(schema.names)) == 66
        assert schema.entry("Age_squared").dist == ("square_of", "LFTENQ2")

    def test_block_features_share_rates(self, schema):
        for group in sd.MISSING_BLOCKS:
            rates = {schema.entry(name).missing_rate for name in group}
            assert len(rates) == 1


class TestGenerate:
    def test_deterministic(self, schema):
        cfg = sd.GenConfig(n_rows=150, seed=5)
        a, _ = sd.generate(schema, cfg)
        b, _ = sd.generate(schema, cfg)
        assert write_csv(a) == write_csv(b)

    def test_empty_table(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=0, seed=1))
        assert table.n_rows == 0
        assert len(table.feature_names) == 66
        assert write_csv(table).count("\n") == 1

    def test_age_squared_exact(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=400, seed=2))
        age = table.column("LFTENQ2").values
        assert np.array_equal(table.column("Age_squared").values, age * age)
        assert age.min() >= 18 and age.max() <= 67

    def test_targets_in_range_and_grq_integral(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=500, seed=3, noise_sd=4.0))
        for name, values in table.targets.items():
            assert values.min() >= 0.0 and values.max() <= 10.0
        grq = table.targets["risk_grq"]
        assert np.array_equal(grq, np.round(grq))

    def test_noiseless_signal_correlation(self, schema):
        cfg = sd.GenConfig(n_rows=800, seed=7,
                           signal=(("VEHW1111BANH2019", 0.5),), noise_sd=0.0)
        table, truth = sd.generate(schema, cfg)
        col = table.column("VEHW1111BANH2019").values
        corr = np.corrcoef(col, table.targets["mpl_avg_safe"])[0, 1]
        assert corr > 0.99
        assert truth.informative == ("VEHW1111BANH2019",)

    def test_unknown_signal_feature(self, schema):
        with pytest.raises(ValidationError):
            sd.generate(schema, sd.GenConfig(n_rows=5, seed=0, signal=(("NOPE", 1.0),)))

    def test_single_target_request(self, schema):
        table, truth = sd.generate(
            schema, sd.GenConfig(n_rows=10, seed=0, target="risk_grq")
        )
        assert list(table.targets) == ["risk_grq"]
        assert truth.targets == ("risk_grq",)


class TestMissingness:
    def test_zero_rate_features_untouched(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=300, seed=4))
        masked = sd.apply_missingness(table, schema, seed=9)
        for entry in schema.entries:
            if entry.missing_rate == 0.0:
                assert not masked.column(entry.name).mask.any()

    def test_empirical_rates(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=10000, seed=4))
        masked = sd.apply_missingness(table, schema, seed=9)
        wg = masked.column("SMODELRAMINGPENSIOENPREMIEWG2").mask
        assert abs(wg.mean() - 0.3627) < 0.02
        overall = sum(c.mask.sum() for c in masked.columns) / (masked.n_rows * 66)
        assert abs(overall - 0.12) < 0.02

    def test_blocks_masked_jointly(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=2000, seed=6))
        masked = sd.apply_missingness(table, schema, seed=10)
        for group in sd.MISSING_BLOCKS:
            reference = masked.column(group[0]).mask
            assert reference.any()
            for name in group[1:]:
                assert np.array_equal(reference, masked.column(name).mask)

    def test_masked_cells_carry_no_value(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=500, seed=8))
        masked = sd.apply_missingness(table, schema, seed=11)
        wg = masked.column("SMODELRAMINGPENSIOENPREMIEWG2")
        assert np.isnan(wg.values[wg.mask]).all()
        child = masked.column("DEADBORN2019")
        assert all(v is None for v in child.values[child.mask])

    def test_targets_never_masked(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=500, seed=8))
        masked = sd.apply_missingness(table, schema, seed=11)
        for values in masked.targets.values():
            assert np.isfinite(values).all()

    def test_deterministic(self, schema):
        table, _ = sd.generate(schema, sd.GenConfig(n_rows=200, seed=4))
        a = sd.apply_missingness(table, schema, seed=9)
        b = sd.apply_missingness(table, schema, seed=9)
        assert write_csv(a) == write_csv(b)
