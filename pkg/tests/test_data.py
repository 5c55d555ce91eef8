"""Tests for synthetic generation, CSV ingestion, and sampling utilities.

The zero-noise synthetic generator is checked by recovering its linear signal
exactly with an ordinary least squares fit on the stacked design, which only
succeeds if y really is an exact linear function of features and raw
sensitive coordinates.
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from meanparity.data import (
    CsvSchema,
    DataSet,
    SyntheticConfig,
    center_targets,
    derived_rng,
    gen_synthetic,
    load_csv,
    split,
    subsample,
)
from meanparity.errors import (
    DimensionError,
    MissingGroupError,
    SchemaError,
    SplitError,
)
from meanparity.kernels import Samples


def _write(path, text):
    path.write_text(text)
    return path


BASIC_CSV = """income,age,gender,score
1.5,30,0,0.2
2.5,40,1,0.9
0.5,20,0,0.1
3.5,50,1,0.7
"""


class TestGenSynthetic:
    def test_zero_noise_linear_signal_is_exact(self):
        """With e = 1 the raw coordinate survives as s_value, so the full
        design is recoverable and OLS must reproduce y to machine precision."""
        ds = gen_synthetic(SyntheticConfig(n=40, d=3, e=1, noise_sd=0.0), seed=11)
        design = np.column_stack([ds.samples.x, ds.samples.s_value])
        coef, *_ = np.linalg.lstsq(design, ds.y, rcond=None)
        assert np.abs(design @ coef - ds.y).max() <= 1e-10

    def test_zero_noise_sine_link(self):
        ds = gen_synthetic(SyntheticConfig(n=30, d=2, e=1, link="sine"), seed=5)
        assert np.abs(ds.y).max() <= 1.0

    def test_sensitive_values_are_plus_minus_tenth(self):
        ds = gen_synthetic(SyntheticConfig(n=25, d=1, e=1), seed=0)
        assert set(np.unique(ds.samples.s_value)) == {-0.1, 0.1}

    def test_codes_follow_sign_of_raw_value(self):
        ds = gen_synthetic(SyntheticConfig(n=25, d=1, e=1), seed=1)
        assert np.array_equal(ds.samples.s_code, (ds.samples.s_value > 0).astype(int))

    def test_two_sensitive_bits_give_four_groups(self):
        ds = gen_synthetic(SyntheticConfig(n=200, d=2, e=2), seed=2)
        assert ds.k == 4
        assert set(np.unique(ds.samples.s_code)) == {0, 1, 2, 3}
        # with e > 1 the scalar stand-in is the code itself
        assert np.array_equal(ds.samples.s_value, ds.samples.s_code.astype(float))
        assert ds.provenance["s_value_source"] == "code"

    def test_same_seed_reproduces(self):
        a = gen_synthetic(SyntheticConfig(n=30, d=2, e=1, noise_sd=0.3), seed=9)
        b = gen_synthetic(SyntheticConfig(n=30, d=2, e=1, noise_sd=0.3), seed=9)
        assert np.array_equal(a.samples.x, b.samples.x)
        assert np.array_equal(a.y, b.y)

    def test_different_seeds_differ(self):
        a = gen_synthetic(SyntheticConfig(n=30, d=2, e=1), seed=9)
        b = gen_synthetic(SyntheticConfig(n=30, d=2, e=1), seed=10)
        assert not np.array_equal(a.y, b.y)

    def test_provenance_records_generation(self):
        ds = gen_synthetic(SyntheticConfig(n=20, d=2, e=1, noise_sd=0.5), seed=3)
        p = ds.provenance
        assert p["kind"] == "synthetic"
        assert (p["n"], p["d"], p["e"]) == (20, 2, 1)
        assert p["noise_sd"] == 0.5 and p["seed"] == 3
        assert p["s_value_source"] == "raw"

    def test_retries_until_groups_covered(self):
        # e = 3 means 8 groups; n = 10 often misses some on the first draw
        ds = gen_synthetic(SyntheticConfig(n=10, d=1, e=3), seed=4)
        assert set(np.unique(ds.samples.s_code)) == set(range(8))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SyntheticConfig(n=1, d=1)
        with pytest.raises(ValueError):
            SyntheticConfig(n=10, d=0)
        with pytest.raises(ValueError):
            SyntheticConfig(n=10, d=1, noise_sd=-0.1)
        with pytest.raises(ValueError):
            SyntheticConfig(n=10, d=1, link="cubic")


class TestLoadCsv:
    def test_basic_file(self, tmp_path):
        path = _write(tmp_path / "a.csv", BASIC_CSV)
        ds = load_csv(path, CsvSchema("income", ("gender",)))
        assert len(ds) == 4 and ds.k == 2
        assert ds.feature_names == ("age", "score")
        assert_allclose(ds.y, [1.5, 2.5, 0.5, 3.5])
        assert np.array_equal(ds.samples.s_code, [0, 1, 0, 1])
        assert ds.provenance["kind"] == "csv"

    def test_explicit_feature_selection(self, tmp_path):
        path = _write(tmp_path / "a.csv", BASIC_CSV)
        ds = load_csv(path, CsvSchema("income", ("gender",), feature_columns=("age",)))
        assert ds.feature_names == ("age",)
        assert ds.samples.n_features == 1

    def test_missing_column_named_in_error(self, tmp_path):
        path = _write(tmp_path / "a.csv", BASIC_CSV)
        with pytest.raises(SchemaError, match="salary"):
            load_csv(path, CsvSchema("salary", ("gender",)))

    def test_bad_target_rows_named_in_error(self, tmp_path):
        text = "y,s,x\n1.0,0,2.0\noops,1,3.0\n2.0,0,4.0\n"
        path = _write(tmp_path / "b.csv", text)
        with pytest.raises(SchemaError, match=r"\[3\]"):
            load_csv(path, CsvSchema("y", ("s",)))

    def test_nonnumeric_feature_column_skipped_when_auto(self, tmp_path):
        text = "y,s,x,name\n1.0,0,2.0,ann\n2.0,1,3.0,bob\n"
        path = _write(tmp_path / "c.csv", text)
        ds = load_csv(path, CsvSchema("y", ("s",)))
        assert ds.feature_names == ("x",)

    def test_binarize_rule_thresholds(self, tmp_path):
        text = "y,age,x\n1.0,30,0.1\n2.0,50,0.2\n3.0,41,0.3\n4.0,20,0.4\n"
        path = _write(tmp_path / "d.csv", text)
        schema = CsvSchema("y", ("age",), binarize_rules={"age": 40.0})
        ds = load_csv(path, schema)
        assert np.array_equal(ds.samples.s_code, [0, 1, 1, 0])

    def test_unruled_sensitive_must_be_binary(self, tmp_path):
        text = "y,s,x\n1.0,0,1.0\n2.0,2,2.0\n"
        path = _write(tmp_path / "e.csv", text)
        with pytest.raises(SchemaError, match="non-binary"):
            load_csv(path, CsvSchema("y", ("s",)))

    def test_two_sensitive_columns_first_is_high_bit(self, tmp_path):
        text = "y,a,b,x\n1.0,0,0,1.0\n2.0,0,1,1.0\n3.0,1,0,1.0\n4.0,1,1,1.0\n"
        path = _write(tmp_path / "f.csv", text)
        ds = load_csv(path, CsvSchema("y", ("a", "b")))
        assert ds.k == 4
        assert np.array_equal(ds.samples.s_code, [0, 1, 2, 3])

    def test_missing_group_raises(self, tmp_path):
        text = "y,s,x\n1.0,0,1.0\n2.0,0,2.0\n"
        path = _write(tmp_path / "g.csv", text)
        with pytest.raises(MissingGroupError):
            load_csv(path, CsvSchema("y", ("s",)))

    def test_no_features_raises(self, tmp_path):
        text = "y,s\n1.0,0\n2.0,1\n"
        path = _write(tmp_path / "h.csv", text)
        with pytest.raises(SchemaError, match="feature"):
            load_csv(path, CsvSchema("y", ("s",)))

    def test_duplicate_used_column_raises(self, tmp_path):
        text = "y,s,s,x\n1.0,0,1,2.0\n2.0,1,0,3.0\n"
        path = _write(tmp_path / "i.csv", text)
        with pytest.raises(SchemaError, match="more than once"):
            load_csv(path, CsvSchema("y", ("s",)))

    def test_schema_validation(self):
        with pytest.raises(SchemaError):
            CsvSchema("y", ())
        with pytest.raises(SchemaError):
            CsvSchema("y", ("y",))
        with pytest.raises(SchemaError):
            CsvSchema("y", ("s",), feature_columns=("s",))
        with pytest.raises(SchemaError):
            CsvSchema("y", ("s",), binarize_rules={"x": 1.0})


class TestSplit:
    def test_sizes_follow_fraction(self):
        ds = gen_synthetic(SyntheticConfig(n=10, d=1, e=1), seed=0)
        train, test = split(ds, 0.8, seed=1)
        assert len(train) == 8 and len(test) == 2

    def test_partition_is_exact(self):
        ds = gen_synthetic(SyntheticConfig(n=50, d=2, e=1), seed=0)
        train, test = split(ds, 0.7, seed=2)
        joined = np.sort(np.concatenate([train.y, test.y]))
        assert np.array_equal(joined, np.sort(ds.y))

    def test_deterministic_in_seed(self):
        ds = gen_synthetic(SyntheticConfig(n=40, d=2, e=1), seed=0)
        a_train, a_test = split(ds, 0.8, seed=3)
        b_train, b_test = split(ds, 0.8, seed=3)
        assert np.array_equal(a_train.y, b_train.y)
        assert np.array_equal(a_test.y, b_test.y)

    def test_train_covers_all_groups(self):
        ds = gen_synthetic(SyntheticConfig(n=24, d=1, e=2), seed=6)
        for seed in range(5):
            train, _ = split(ds, 0.5, seed=seed)
            assert set(np.unique(train.samples.s_code)) == set(range(4))

    def test_rare_group_forced_into_train_logs_warning(self, caplog):
        # one lone member of group 1 must land in train, so test misses it
        codes = np.array([0] * 9 + [1])
        samples = Samples(np.arange(10, dtype=float).reshape(-1, 1), codes, codes.astype(float))
        ds = DataSet(samples, np.arange(10, dtype=float), 2, ("x1",), {})
        with caplog.at_level(logging.WARNING):
            train, test = split(ds, 0.8, seed=0)
        assert 1 in train.samples.s_code
        assert 1 not in test.samples.s_code
        assert any("missing groups" in r.message for r in caplog.records)

    def test_impossible_coverage_raises(self):
        # both groups cannot fit in a train side of size 1
        codes = np.array([0, 1])
        samples = Samples(np.zeros((2, 1)), codes, codes.astype(float))
        ds = DataSet(samples, np.zeros(2), 2, ("x1",), {})
        with pytest.raises(SplitError):
            split(ds, 0.5, seed=0)

    def test_fraction_validated(self):
        ds = gen_synthetic(SyntheticConfig(n=10, d=1, e=1), seed=0)
        with pytest.raises(ValueError):
            split(ds, 1.0, seed=0)

    def test_provenance_tracks_role(self):
        ds = gen_synthetic(SyntheticConfig(n=10, d=1, e=1), seed=0)
        train, test = split(ds, 0.8, seed=7)
        assert train.provenance["split_role"] == "train"
        assert test.provenance["split_role"] == "test"


class TestCenterTargets:
    def test_two_point_example(self):
        codes = np.array([0, 1])
        samples = Samples(np.zeros((2, 1)), codes, codes.astype(float))
        train = DataSet(samples, np.array([1.0, 3.0]), 2, ("x1",), {})
        test = DataSet(samples.take([0]), np.array([2.0]), 2, ("x1",), {})
        ctrain, ctest, mean = center_targets(train, test)
        assert mean == 2.0
        assert_allclose(ctrain.y, [-1.0, 1.0])
        assert_allclose(ctest.y, [0.0])

    def test_train_mean_is_removed(self):
        ds = gen_synthetic(SyntheticConfig(n=60, d=2, e=1, noise_sd=1.0), seed=8)
        train, test = split(ds, 0.75, seed=0)
        ctrain, _, _ = center_targets(train, test)
        assert abs(ctrain.y.mean()) <= 1e-12 * max(train.y.std(), 1.0)

    def test_test_side_uses_train_mean(self):
        ds = gen_synthetic(SyntheticConfig(n=60, d=2, e=1, noise_sd=1.0), seed=8)
        train, test = split(ds, 0.75, seed=0)
        _, ctest, mean = center_targets(train, test)
        assert_allclose(ctest.y, test.y - mean)


class TestSubsample:
    def test_full_size_is_a_permutation(self):
        ds = gen_synthetic(SyntheticConfig(n=20, d=1, e=1), seed=0)
        sub = subsample(ds, 20, seed=1)
        assert np.array_equal(np.sort(sub.y), np.sort(ds.y))

    def test_deterministic(self):
        ds = gen_synthetic(SyntheticConfig(n=30, d=1, e=1), seed=0)
        a = subsample(ds, 10, seed=2)
        b = subsample(ds, 10, seed=2)
        assert np.array_equal(a.y, b.y)

    def test_keeps_every_group(self):
        ds = gen_synthetic(SyntheticConfig(n=64, d=1, e=2), seed=3)
        for seed in range(5):
            sub = subsample(ds, 8, seed=seed)
            assert set(np.unique(sub.samples.s_code)) == set(range(4))

    def test_oversized_request_rejected(self):
        ds = gen_synthetic(SyntheticConfig(n=10, d=1, e=1), seed=0)
        with pytest.raises(DimensionError):
            subsample(ds, 11, seed=0)

    def test_nonpositive_request_rejected(self):
        ds = gen_synthetic(SyntheticConfig(n=10, d=1, e=1), seed=0)
        with pytest.raises(ValueError):
            subsample(ds, 0, seed=0)

    def test_smaller_than_group_count_raises(self):
        ds = gen_synthetic(SyntheticConfig(n=40, d=1, e=2), seed=0)
        with pytest.raises(SplitError):
            subsample(ds, 2, seed=0)


class TestDerivedRng:
    def test_streams_are_independent(self):
        a = derived_rng(0, 0).standard_normal(5)
        b = derived_rng(0, 1).standard_normal(5)
        assert not np.array_equal(a, b)

    def test_deterministic(self):
        a = derived_rng(7, 2, attempt=3).standard_normal(5)
        b = derived_rng(7, 2, attempt=3).standard_normal(5)
        assert np.array_equal(a, b)
