"""Trainer zoo: worked examples, exact symmetry, pinball optimality,
oversampling rules."""

import numpy as np
import pytest

from optcs.core import LabeledSample
from optcs.models import (
    TrainerSpec,
    oversample_balance,
    oversample_indices,
    train,
    train_arrays,
)


def _samples(X, y):
    return [LabeledSample(x, v, 0.0) for x, v in zip(np.atleast_2d(X), y)]


def pinball_loss(y, pred, alpha):
    r = np.asarray(y) - pred
    return float(np.mean(np.maximum(alpha * r, (alpha - 1.0) * r)))


def pinball_grid_oracle(y, alpha):
    """Exact 1-D oracle: for a constant design the optimum sits at a data
    value, so searching data values plus a fine grid between them is exact."""
    y = np.asarray(y, dtype=float)
    grid = np.concatenate([y, np.linspace(y.min(), y.max(), 2001)])
    losses = [pinball_loss(y, g, alpha) for g in grid]
    return float(min(losses))


class TestConstantMean:
    def test_mean_of_binary(self):
        model = train(TrainerSpec("constant_mean"), _samples(np.zeros((3, 1)), [0, 1, 1]))
        probe = np.array([[5.0], [-2.0]])
        assert model.predict_mean(probe) == pytest.approx([2 / 3, 2 / 3])

    def test_empty_data(self):
        with pytest.raises(ValueError, match="empty"):
            train(TrainerSpec("constant_mean"), [])


class TestRidge:
    def test_interpolation_lambda_zero(self):
        X = np.array([[0.0], [1.0]])
        model = train_arrays(TrainerSpec("ridge", {"ridge_lambda": 0.0}), X, np.array([0.0, 1.0]))
        probe = np.array([[0.25], [2.0]])
        assert model.predict_mean(probe) == pytest.approx([0.25, 2.0], abs=1e-12)

    def test_rank_deficient_advises_lambda(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])  # duplicate column
        with pytest.raises(ValueError, match="ridge_lambda"):
            train_arrays(TrainerSpec("ridge", {"ridge_lambda": 0.0}), X, np.array([1.0, 2.0, 3.0]))

    def test_lambda_positive_handles_rank_deficiency(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        model = train_arrays(TrainerSpec("ridge", {"ridge_lambda": 1.0}), X, np.array([1.0, 2.0, 3.0]))
        assert np.all(np.isfinite(model.predict_mean(X)))

    def test_feature_subset(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((50, 4))
        y = 2.0 * X[:, 1]
        model = train_arrays(
            TrainerSpec("ridge", {"ridge_lambda": 0.0, "features": (1,)}), X, y
        )
        assert model.predict_mean(X) == pytest.approx(y, abs=1e-9)

    def test_missing_hyperparam(self):
        with pytest.raises(ValueError, match="ridge_lambda"):
            train_arrays(TrainerSpec("ridge"), np.ones((2, 1)), np.ones(2))

    def test_spread_positive(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((30, 2))
        y = X[:, 0] + rng.standard_normal(30)
        model = train_arrays(TrainerSpec("ridge", {"ridge_lambda": 1.0, "fit_spread": True}), X, y)
        assert np.all(model.predict_spread(X) > 0)


class TestLinearQuantile:
    def test_median_of_skewed_sample(self):
        X = np.zeros((3, 1))
        model = train_arrays(
            TrainerSpec("linear_quantile", {"quantile_level": 0.5}), X, np.array([0.0, 0.0, 10.0])
        )
        assert abs(float(model.predict_quantile(np.array([[7.0]]))[0])) <= 1e-9

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
    def test_pinball_within_tolerance_of_oracle(self, alpha):
        rng = np.random.default_rng(int(alpha * 10))
        for _ in range(20):
            n = int(rng.integers(2, 25))
            y = rng.standard_normal(n) * rng.uniform(0.5, 3)
            X = np.zeros((n, 1))
            model = train_arrays(
                TrainerSpec("linear_quantile", {"quantile_level": alpha}), X, y
            )
            fit = float(model.predict_quantile(np.zeros((1, 1)))[0])
            assert pinball_loss(y, fit, alpha) <= pinball_grid_oracle(y, alpha) + 1e-6

    def test_descent_improves_on_sloped_data(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(-1, 1, size=(60, 1))
        y = 3.0 * X[:, 0] + 0.1 * rng.standard_normal(60)
        spec = TrainerSpec(
            "linear_quantile", {"quantile_level": 0.5, "gd_steps": 500, "gd_rate": 1.0}
        )
        model = train_arrays(spec, X, y)
        pred = model.predict_quantile(X)
        flat = np.quantile(y, 0.5, method="inverted_cdf")
        assert pinball_loss(y, pred, 0.5) < pinball_loss(y, flat, 0.5)

    def test_mean_predictor_aliases_quantile(self):
        model = train_arrays(
            TrainerSpec("linear_quantile", {"quantile_level": 0.5}),
            np.zeros((3, 1)), np.array([1.0, 2.0, 3.0]),
        )
        probe = np.array([[0.0]])
        assert model.predict_mean(probe) == pytest.approx(model.predict_quantile(probe))


class TestKnn:
    def test_distance_ties_average_all(self):
        X = np.array([[0.0], [2.0], [-2.0]])
        y = np.array([0.0, 1.0, 5.0])
        model = train_arrays(TrainerSpec("knn", {"knn_k": 2}), X, y)
        # query 0: distances (0, 2, 2); the k-th distance ties both outer points
        assert model.predict_mean(np.array([[0.0]]))[0] == pytest.approx(2.0)

    def test_k_larger_than_n_uses_all(self):
        X = np.array([[0.0], [1.0]])
        model = train_arrays(TrainerSpec("knn", {"knn_k": 10}), X, np.array([2.0, 4.0]))
        assert model.predict_mean(np.array([[9.0]]))[0] == pytest.approx(3.0)

    def test_k_one_nearest(self):
        X = np.array([[0.0], [10.0]])
        model = train_arrays(TrainerSpec("knn", {"knn_k": 1}), X, np.array([-1.0, 1.0]))
        assert model.predict_mean(np.array([[9.0]]))[0] == pytest.approx(1.0)


class TestShuffledWrapper:
    def test_matches_symmetric_inner(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((20, 2))
        y = rng.standard_normal(20)
        inner = {"family": "ridge", "hyperparams": {"ridge_lambda": 1.0}}
        wrapped = train_arrays(TrainerSpec("shuffled_wrapper", {"inner": inner}, seed=7), X, y)
        plain = train_arrays(TrainerSpec("ridge", {"ridge_lambda": 1.0}), X, y)
        probe = rng.standard_normal((5, 2))
        assert wrapped.predict_mean(probe) == pytest.approx(plain.predict_mean(probe))

    def test_requires_seed(self):
        inner = {"family": "constant_mean"}
        with pytest.raises(ValueError, match="seed"):
            train_arrays(TrainerSpec("shuffled_wrapper", {"inner": inner}), np.ones((2, 1)), np.ones(2))


_SYMMETRIC_SPECS = [
    TrainerSpec("constant_mean"),
    TrainerSpec("constant_mean", {"fit_spread": True}),
    TrainerSpec("ridge", {"ridge_lambda": 0.5}),
    TrainerSpec("ridge", {"ridge_lambda": 0.5, "fit_spread": True}),
    TrainerSpec("ridge", {"ridge_lambda": 2.0, "features": (0, 2)}),
    TrainerSpec("linear_quantile", {"quantile_level": 0.3, "gd_steps": 50}),
    TrainerSpec("knn", {"knn_k": 3}),
    TrainerSpec("knn", {"knn_k": 2, "fit_spread": True}),
]


@pytest.mark.parametrize("spec", _SYMMETRIC_SPECS, ids=lambda s: f"{s.family}-{sorted(s.hyperparams)}")
def test_exact_permutation_symmetry(spec):
    rng = np.random.default_rng(hash(spec.family) % 2**32)
    for _ in range(100):
        n = int(rng.integers(3, 20))
        X = rng.standard_normal((n, 3))
        y = rng.standard_normal(n)
        probe = rng.standard_normal((6, 3))
        a = train_arrays(spec, X, y)
        perm = rng.permutation(n)
        b = train_arrays(spec, X[perm], y[perm])
        assert np.array_equal(a.predict_mean(probe), b.predict_mean(probe))
        if a.predict_quantile is not None:
            assert np.array_equal(a.predict_quantile(probe), b.predict_quantile(probe))
        if a.predict_spread is not None:
            assert np.array_equal(a.predict_spread(probe), b.predict_spread(probe))


@pytest.mark.parametrize("spec", _SYMMETRIC_SPECS, ids=lambda s: f"{s.family}-{sorted(s.hyperparams)}")
def test_determinism(spec):
    rng = np.random.default_rng(55)
    X = rng.standard_normal((12, 3))
    y = rng.standard_normal(12)
    probe = rng.standard_normal((4, 3))
    a = train_arrays(spec, X, y)
    b = train_arrays(spec, X.copy(), y.copy())
    assert np.array_equal(a.predict_mean(probe), b.predict_mean(probe))


class TestOversample:
    def _data(self, counts):
        zeros, ones = counts
        X = np.arange(zeros + ones, dtype=float)[:, None]
        y = np.array([0.0] * zeros + [1.0] * ones)
        return X, y

    def test_three_fold_duplication(self):
        X, y = self._data((6, 2))
        idx = oversample_indices(X, y)
        out = y[idx]
        assert np.count_nonzero(out == 0) == 6
        assert np.count_nonzero(out == 1) == 6

    def test_balanced_unchanged(self):
        X, y = self._data((5, 5))
        assert np.array_equal(oversample_indices(X, y), np.arange(10))

    def test_remainder_pattern_seven_three(self):
        X, y = self._data((7, 3))
        idx = oversample_indices(X, y)
        out = y[idx]
        assert np.count_nonzero(out == 0) == 7
        assert np.count_nonzero(out == 1) == 7
        # each positive appears at least twice; exactly one appears three times
        pos_ids = idx[y[idx] == 1]
        counts = np.bincount(pos_ids, minlength=10)[7:]
        assert sorted(counts.tolist()) == [2, 2, 3]
        # the extra copy goes to the canonically-first positive (smallest x)
        assert counts[0] == 3

    def test_multiset_invariant_to_permutation(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n0, n1 = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            X = rng.standard_normal((n0 + n1, 2))
            y = np.array([0.0] * n0 + [1.0] * n1)
            idx = oversample_indices(X, y)
            base = sorted(map(tuple, np.column_stack([X, y])[idx].tolist()))
            perm = rng.permutation(n0 + n1)
            idx2 = oversample_indices(X[perm], y[perm])
            other = sorted(map(tuple, np.column_stack([X[perm], y[perm]])[idx2].tolist()))
            assert base == other

    def test_one_class_empty_unchanged(self):
        X, y = self._data((4, 0))
        assert np.array_equal(oversample_indices(X, y), np.arange(4))

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError, match="non-binary"):
            oversample_indices(np.zeros((2, 1)), np.array([0.0, 2.0]))

    def test_sample_list_adapter(self):
        data = _samples(np.arange(8, dtype=float)[:, None], [0, 0, 0, 0, 0, 0, 1, 1])
        out = oversample_balance(data)
        ys = [s.y for s in out]
        assert ys.count(0.0) == 6 and ys.count(1.0) == 6
        assert out[:8] == data  # originals first, duplicates appended
