import math

import numpy as np
import pytest
from scipy import stats

from fmqubo.errors import (
    ConstantInputError,
    DimensionMismatchError,
    ValidationError,
)
from fmqubo.metrics import MetricSummary, mse_loss, pearson, spearman, summarize


class TestPearson:
    def test_self_correlation(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_anti_correlation(self):
        assert pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)

    def test_hand_value(self):
        # closed form 15/sqrt(228), cross-checked against scipy
        assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(
            15 / math.sqrt(228), abs=1e-12
        )
        assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(
            stats.pearsonr([1, 2, 3], [2, 4, 7]).statistic, abs=1e-12
        )

    def test_constant_input_is_error(self):
        with pytest.raises(ConstantInputError):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(ConstantInputError):
            pearson([1, 2, 3], [5, 5, 5])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            pearson([1, 2], [1, 2, 3])

    def test_too_short(self):
        with pytest.raises(ValidationError):
            pearson([1], [2])

    def test_symmetry_and_affine_invariance(self, rng):
        a = rng.normal(size=20)
        b = rng.normal(size=20)
        assert pearson(a, b) == pytest.approx(pearson(b, a), abs=1e-12)
        assert pearson(3.0 * a + 2.0, b) == pytest.approx(
            pearson(a, b), abs=1e-9
        )


class TestSpearman:
    def test_monotone_transform(self, rng):
        a = rng.normal(size=15)
        assert spearman(a, np.exp(a)) == pytest.approx(1.0)

    def test_hand_value(self):
        assert spearman([1, 2, 3], [3, 1, 2]) == pytest.approx(-0.5)

    def test_matches_scipy_with_ties(self, rng):
        a = rng.integers(0, 5, size=30).astype(float)
        b = rng.normal(size=30)
        ours = spearman(a, b)
        ref = stats.spearmanr(a, b).statistic
        assert ours == pytest.approx(ref, abs=1e-9)

    def test_equals_pearson_of_ranks(self, rng):
        a = rng.normal(size=12)
        b = rng.normal(size=12)
        assert spearman(a, b) == pytest.approx(
            pearson(stats.rankdata(a), stats.rankdata(b)), abs=1e-12
        )


class TestMse:
    def test_zero(self):
        assert mse_loss([1, 2, 3], [1, 2, 3]) == 0.0

    def test_unit(self):
        assert mse_loss([0, 0], [1, 1]) == 1.0

    def test_hand_value(self):
        assert mse_loss([1, 2], [2, 4]) == 2.5

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            mse_loss([], [])


class TestSummarize:
    def test_identical_values_zero_std(self):
        s = summarize([(0.8, 0.7), (0.8, 0.7), (0.8, 0.7)], [True, True, True])
        assert s.pearson_mean == pytest.approx(0.8)
        assert s.pearson_std == pytest.approx(0.0, abs=1e-12)
        assert s.spearman_mean == pytest.approx(0.7)
        assert s.n_cases == 3
        assert s.n_failed == 0

    def test_single_case(self):
        s = summarize([(0.5, 0.4)], [True])
        assert s.pearson_mean == 0.5
        assert s.pearson_std == 0.0
        assert s.n_cases == 1

    def test_failed_cases_excluded(self):
        s = summarize([(0.9, 0.9), (0.1, 0.1)], [True, False])
        assert s.pearson_mean == pytest.approx(0.9)
        assert s.n_cases == 1
        assert s.n_failed == 1

    def test_nan_in_converged_case_counts_as_failed(self):
        s = summarize([(0.9, 0.9), (float("nan"), 0.5)], [True, True])
        assert s.n_cases == 1
        assert s.n_failed == 1

    def test_all_failed_is_error(self):
        with pytest.raises(ValidationError):
            summarize([(0.5, 0.5)], [False])

    def test_sample_std(self):
        s = summarize([(0.2, 0.2), (0.4, 0.4)], [True, True])
        assert s.pearson_std == pytest.approx(np.std([0.2, 0.4], ddof=1))

    def test_mismatched_lengths(self):
        with pytest.raises(DimensionMismatchError):
            summarize([(0.5, 0.5)], [True, False])

    def test_summary_is_immutable_record(self):
        s = summarize([(0.5, 0.4)], [True])
        assert isinstance(s, MetricSummary)
        with pytest.raises(AttributeError):
            s.pearson_mean = 0.0
