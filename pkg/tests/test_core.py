"""Domain types: validation, partitioning, ground-truth isolation."""

import numpy as np
import pytest

from optcs.core import (
    DataSplit,
    LabeledSample,
    ScoreConfig,
    TestSample,
    validate_problem,
)


def _labeled(n, d, rng):
    return [LabeledSample(rng.standard_normal(d), rng.standard_normal(), 0.0) for _ in range(n)]


def _test(m, d, rng, with_truth=True):
    return [
        TestSample(rng.standard_normal(d), 0.0,
                   rng.standard_normal() if with_truth else None)
        for _ in range(m)
    ]


class TestValidateProblem:
    def test_partitions_blocks(self):
        rng = np.random.default_rng(0)
        prob = validate_problem(_labeled(10, 2, rng), _test(3, 2, rng), DataSplit(4, 6, 3))
        assert (prob.n1, prob.n2, prob.m, prob.d) == (4, 6, 3, 2)
        assert prob.x_prep.shape == (4, 2)
        assert prob.x_calib.shape == (6, 2)
        assert prob.x_test.shape == (3, 2)

    def test_order_preserved(self):
        rng = np.random.default_rng(1)
        labeled = _labeled(5, 1, rng)
        prob = validate_problem(labeled, _test(1, 1, rng), DataSplit(2, 3, 1))
        assert prob.y_prep == pytest.approx([s.y for s in labeled[:2]])
        assert prob.y_calib == pytest.approx([s.y for s in labeled[2:]])

    def test_empty_calibration(self):
        with pytest.raises(ValueError, match="empty calibration"):
            DataSplit(4, 0, 3)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(2)
        labeled = _labeled(3, 2, rng) + [LabeledSample(np.zeros(3), 0.0, 0.0)]
        with pytest.raises(ValueError, match="dimension mismatch"):
            validate_problem(labeled, _test(1, 2, rng), DataSplit(0, 4, 1))

    def test_length_mismatch(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError, match="count"):
            validate_problem(_labeled(3, 2, rng), _test(1, 2, rng), DataSplit(0, 4, 1))

    def test_non_finite_sample_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            LabeledSample(np.array([np.nan]), 0.0, 0.0)
        with pytest.raises(ValueError, match="non-finite"):
            LabeledSample(np.array([0.0]), np.inf, 0.0)
        with pytest.raises(ValueError, match="non-finite"):
            TestSample(np.array([0.0]), np.inf)


class TestProblem:
    def test_arrays_readonly(self):
        rng = np.random.default_rng(4)
        prob = validate_problem(_labeled(4, 2, rng), _test(2, 2, rng), DataSplit(1, 3, 2))
        with pytest.raises(ValueError):
            prob.x_calib[0, 0] = 99.0

    def test_ground_truth_tracking(self):
        rng = np.random.default_rng(5)
        with_truth = validate_problem(_labeled(3, 1, rng), _test(2, 1, rng), DataSplit(0, 3, 2))
        assert with_truth.has_ground_truth
        stripped = with_truth.strip_ground_truth()
        assert not stripped.has_ground_truth
        assert stripped.y_test_hidden is None

    def test_missing_truth_becomes_none(self):
        rng = np.random.default_rng(6)
        prob = validate_problem(
            _labeled(3, 1, rng), _test(2, 1, rng, with_truth=False), DataSplit(0, 3, 2)
        )
        assert prob.y_test_hidden is None

    def test_labeled_pooling(self):
        rng = np.random.default_rng(7)
        prob = validate_problem(_labeled(5, 2, rng), _test(1, 2, rng), DataSplit(2, 3, 1))
        assert prob.x_labeled.shape == (5, 2)
        assert np.array_equal(prob.x_labeled[:2], prob.x_prep)
        assert np.array_equal(prob.x_labeled[2:], prob.x_calib)


class TestScoreConfig:
    def test_quantile_level_required_iff_quantile(self):
        ScoreConfig("clipped_quantile", 100.0, 0.5)
        with pytest.raises(ValueError, match="quantile_level"):
            ScoreConfig("clipped_quantile", 100.0)
        with pytest.raises(ValueError, match="quantile_level"):
            ScoreConfig("clipped_mean", 100.0, 0.5)

    def test_big_m_positive(self):
        with pytest.raises(ValueError, match="big_m"):
            ScoreConfig("clipped_mean", 0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            ScoreConfig("absolute_residual", 1.0)
