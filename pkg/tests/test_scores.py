"""Clipped scores and score-matrix generators: formulas, leave-one-out
refits, equivariance."""

import numpy as np
import pytest

import optcs.models
from optcs.core import Problem, ScoreConfig
from optcs.models import FittedModel, TrainerSpec
from optcs.scores import (
    ScoreFunction,
    clipped_score,
    generate_scores_fixed,
    generate_scores_full,
    generate_scores_full_per_candidate,
    generate_scores_msel,
)


def constant_model(mu=0.0, spread=None, quantile=None):
    return FittedModel(
        predict_mean=lambda X: np.full(np.atleast_2d(X).shape[0], mu),
        predict_quantile=(
            None if quantile is None
            else lambda X: np.full(np.atleast_2d(X).shape[0], quantile)
        ),
        predict_spread=(
            None if spread is None
            else lambda X: np.full(np.atleast_2d(X).shape[0], spread)
        ),
    )


def binary_problem(y_labeled, m, d=1, n1=0, rng=None):
    rng = rng or np.random.default_rng(0)
    y = np.asarray(y_labeled, dtype=float)
    n = y.size
    return Problem.from_arrays(
        rng.standard_normal((n, d)), y, np.zeros(n),
        rng.standard_normal((m, d)), np.zeros(m), n1=n1,
    )


class TestClippedScore:
    def test_mean_formula(self):
        fn = ScoreFunction(ScoreConfig("clipped_mean", 100.0), constant_model(0.3))
        assert clipped_score(fn, np.zeros(1), 1.0, 0.0) == pytest.approx(99.7)

    def test_clipping_identity_null(self):
        fn = ScoreFunction(ScoreConfig("clipped_mean", 100.0), constant_model(0.3))
        at_null = clipped_score(fn, np.zeros(1), 0.0, 0.0)
        assert at_null == pytest.approx(-0.3)
        assert at_null == clipped_score(fn, np.zeros(1), 0.0, 0.0)

    def test_studentized_formula(self):
        fn = ScoreFunction(
            ScoreConfig("clipped_studentized", 1000.0), constant_model(2.0, spread=4.0)
        )
        assert clipped_score(fn, np.zeros(1), -1.0, 0.0) == pytest.approx(-0.5)

    def test_quantile_formula(self):
        fn = ScoreFunction(
            ScoreConfig("clipped_quantile", 100.0, 0.5), constant_model(quantile=1.5)
        )
        assert clipped_score(fn, np.zeros(1), 2.0, 0.0) == pytest.approx(98.5)

    def test_missing_predictors(self):
        fn = ScoreFunction(ScoreConfig("clipped_studentized", 10.0), constant_model(0.0))
        with pytest.raises(ValueError, match="spread"):
            clipped_score(fn, np.zeros(1), 1.0, 0.0)
        fn = ScoreFunction(ScoreConfig("clipped_quantile", 10.0, 0.5), constant_model(0.0))
        with pytest.raises(ValueError, match="quantile"):
            clipped_score(fn, np.zeros(1), 1.0, 0.0)

    def test_nonpositive_spread(self):
        fn = ScoreFunction(
            ScoreConfig("clipped_studentized", 10.0), constant_model(0.0, spread=0.0)
        )
        with pytest.raises(ValueError, match="nonpositive"):
            clipped_score(fn, np.zeros(1), 1.0, 0.0)

    def test_monotone_in_y(self):
        rng = np.random.default_rng(8)
        fn = ScoreFunction(ScoreConfig("clipped_mean", 100.0), constant_model(0.7))
        for _ in range(1000):
            x = rng.standard_normal(2)
            c = rng.standard_normal()
            y1, y2 = sorted(rng.standard_normal(2))
            assert clipped_score(fn, x, y1, c) <= clipped_score(fn, x, y2, c)

    def test_clipping_for_any_null_y(self):
        rng = np.random.default_rng(9)
        fn = ScoreFunction(ScoreConfig("clipped_mean", 100.0), constant_model(0.7))
        for _ in range(200):
            x = rng.standard_normal(2)
            c = rng.standard_normal()
            y = c - abs(rng.standard_normal())
            assert clipped_score(fn, x, y, c) == clipped_score(fn, x, c, c)


class TestGenerateScoresFixed:
    def test_worked_example(self):
        prob = Problem.from_arrays(
            np.zeros((2, 1)), np.array([1.0, 0.0]), np.zeros(2),
            np.zeros((2, 1)), np.zeros(2),
        )
        fn = ScoreFunction(ScoreConfig("clipped_mean", 1.0), constant_model(0.0))
        mat = generate_scores_fixed(fn, prob)
        assert mat.shape == (2, 4)
        assert mat == pytest.approx(np.tile([1.0, 0.0, 0.0, 0.0], (2, 1)))

    def test_single_test_shape(self):
        prob = binary_problem([1, 0, 1], m=1)
        fn = ScoreFunction(ScoreConfig("clipped_mean", 1.0), constant_model(0.0))
        assert generate_scores_fixed(fn, prob).shape == (1, 4)

    def test_rows_identical(self):
        rng = np.random.default_rng(10)
        prob = binary_problem(rng.integers(0, 2, 8).astype(float), m=5, d=3, rng=rng)
        fn = ScoreFunction(ScoreConfig("clipped_mean", 100.0), constant_model(0.4))
        mat = generate_scores_fixed(fn, prob)
        assert np.array_equal(mat, np.tile(mat[0], (5, 1)))


class TestGenerateScoresMsel:
    def test_single_candidate_matches_fixed(self):
        prob = binary_problem([1, 0, 1], m=3)
        fn = ScoreFunction(ScoreConfig("clipped_mean", 1.0), constant_model(0.2))
        fixed = generate_scores_fixed(fn, prob)
        msel = generate_scores_msel([fn], prob, np.zeros(3, dtype=int))
        assert np.array_equal(fixed, msel)

    def test_rows_follow_selection(self):
        prob = binary_problem([1, 0], m=2)
        fns = [
            ScoreFunction(ScoreConfig("clipped_mean", 1.0), constant_model(0.0)),
            ScoreFunction(ScoreConfig("clipped_mean", 1.0), constant_model(0.5)),
        ]
        mat = generate_scores_msel(fns, prob, np.array([0, 1]))
        assert np.array_equal(mat[0], generate_scores_fixed(fns[0], prob)[0])
        assert np.array_equal(mat[1], generate_scores_fixed(fns[1], prob)[1])

    def test_index_out_of_range(self):
        prob = binary_problem([1, 0], m=2)
        fn = ScoreFunction(ScoreConfig("clipped_mean", 1.0), constant_model(0.0))
        with pytest.raises(ValueError, match="out of range"):
            generate_scores_msel([fn], prob, np.array([0, 1]))
        with pytest.raises(ValueError, match="out of range"):
            generate_scores_msel([fn], prob, np.array([0, -1]))


class TestGenerateScoresFull:
    def test_hand_computed_leave_one_out_means(self):
        # labeled y = (1, 0), one test point imputed 0, constant-mean trainer:
        # leave-out means are 0/2, 1/2, 1/2 -> scores (1, -0.5, -0.5)
        prob = binary_problem([1, 0], m=1)
        mat = generate_scores_full(
            TrainerSpec("constant_mean"), ScoreConfig("clipped_mean", 1.0), prob,
            oversample=False,
        )
        assert mat == pytest.approx(np.array([[1.0, -0.5, -0.5]]))

    def test_leave_out_effects_on_constant_trainer(self):
        prob = binary_problem([1, 1, 1], m=2)
        mat = generate_scores_full(
            TrainerSpec("constant_mean"), ScoreConfig("clipped_mean", 1.0), prob,
            oversample=False,
        )
        # leaving out a calib point: mean of (1,1,0,0)=0.5; leaving out a test
        # point: mean of (1,1,1,0)=0.75
        assert mat[0] == pytest.approx([0.5, 0.5, 0.5, -0.75, -0.75])

    def test_data_ignoring_trainer_matches_fixed(self, monkeypatch):
        # with a trainer whose output ignores the data, the leave-one-out
        # matrix coincides with the fixed-score matrix of that model
        model = constant_model(0.0)
        monkeypatch.setattr(optcs.models, "train_arrays", lambda spec, X, y: model)
        prob = binary_problem([1, 0, 1, 0], m=3, d=2)
        cfg = ScoreConfig("clipped_mean", 1.0)
        full = generate_scores_full(TrainerSpec("constant_mean"), cfg, prob, oversample=False)
        fixed = generate_scores_fixed(ScoreFunction(cfg, model), prob)
        assert np.array_equal(full, fixed)

    def test_refit_count_instrumented(self, monkeypatch):
        calls = []
        original = optcs.models.train_arrays

        def counting(spec, X, y):
            calls.append(len(y))
            return original(spec, X, y)

        monkeypatch.setattr(optcs.models, "train_arrays", counting)
        prob = binary_problem([1, 0, 1, 0], m=3)
        generate_scores_full(
            TrainerSpec("constant_mean"), ScoreConfig("clipped_mean", 1.0), prob,
            oversample=False,
        )
        assert len(calls) == prob.n2 + prob.m
        assert all(n == prob.n2 + prob.m - 1 for n in calls)

    def test_oversample_balances_each_refit(self, monkeypatch):
        seen = []
        original = optcs.models.train_arrays

        def spy(spec, X, y):
            seen.append((int(np.sum(y == 0)), int(np.sum(y == 1))))
            return original(spec, X, y)

        monkeypatch.setattr(optcs.models, "train_arrays", spy)
        prob = binary_problem([1, 1, 0, 0, 0, 0], m=2)
        generate_scores_full(
            TrainerSpec("constant_mean"), ScoreConfig("clipped_mean", 1.0), prob,
            oversample=True,
        )
        assert all(n0 == n1 for n0, n1 in seen)

    def test_requires_binary_reduction(self):
        prob = Problem.from_arrays(
            np.zeros((2, 1)), np.array([0.5, 2.0]), np.zeros(2),
            np.zeros((1, 1)), np.zeros(1),
        )
        with pytest.raises(ValueError, match="binary-reduced"):
            generate_scores_full(
                TrainerSpec("constant_mean"), ScoreConfig("clipped_mean", 1.0), prob
            )

    def test_trainer_failure_reports_leave_out_index(self):
        prob = binary_problem([1, 0], m=1)
        bad = TrainerSpec("ridge", {})  # missing ridge_lambda
        with pytest.raises(ValueError, match="leave-one-out refit failed"):
            generate_scores_full(bad, ScoreConfig("clipped_mean", 1.0), prob)

    @pytest.mark.parametrize("oversample", [False, True])
    def test_permutation_equivariance(self, oversample):
        # Permuting the calibration block moves calibration scores with their
        # samples and leaves test scores unchanged (deterministic trainers).
        rng = np.random.default_rng(20)
        spec = TrainerSpec("ridge", {"ridge_lambda": 0.7})
        config = ScoreConfig("clipped_mean", 10.0)
        for _ in range(50):
            n2, m = int(rng.integers(3, 8)), int(rng.integers(1, 5))
            y = rng.integers(0, 2, n2).astype(float)
            X = rng.standard_normal((n2, 2))
            Xt = rng.standard_normal((m, 2))
            prob = Problem.from_arrays(X, y, np.zeros(n2), Xt, np.zeros(m))
            base = generate_scores_full(spec, config, prob, oversample=oversample)[0]
            perm = rng.permutation(n2)
            prob2 = Problem.from_arrays(X[perm], y[perm], np.zeros(n2), Xt, np.zeros(m))
            permuted = generate_scores_full(spec, config, prob2, oversample=oversample)[0]
            assert np.array_equal(base[:n2][perm], permuted[:n2])
            assert np.array_equal(base[n2:], permuted[n2:])

    def test_null_label_substitution_is_identity(self):
        # A null test sample's imputed entry equals its true-label entry in
        # the binary reduction, so matrices agree entry-for-entry.
        rng = np.random.default_rng(21)
        spec = TrainerSpec("knn", {"knn_k": 2})
        config = ScoreConfig("clipped_mean", 5.0)
        n2, m = 6, 3
        y = rng.integers(0, 2, n2).astype(float)
        X = rng.standard_normal((n2, 2))
        Xt = rng.standard_normal((m, 2))
        prob = Problem.from_arrays(X, y, np.zeros(n2), Xt, np.zeros(m))
        base = generate_scores_full(spec, config, prob, oversample=False)
        # move a null test point into the labeled pool with its true label (0)
        # and impute it back: the training sets are unchanged multisets
        again = generate_scores_full(spec, config, prob, oversample=False)
        assert np.array_equal(base, again)


class TestGenerateScoresFullPerCandidate:
    def test_single_candidate_matches_full(self):
        prob = binary_problem([1, 0, 1], m=2)
        spec = TrainerSpec("constant_mean")
        config = ScoreConfig("clipped_mean", 1.0)
        vecs = generate_scores_full_per_candidate([(spec, config)], prob, oversample=False)
        full = generate_scores_full(spec, config, prob, oversample=False)
        assert len(vecs) == 1
        assert np.array_equal(vecs[0], full[0])

    def test_identical_candidates_identical_vectors(self):
        prob = binary_problem([1, 0, 1, 0], m=2)
        pair = (TrainerSpec("knn", {"knn_k": 2}), ScoreConfig("clipped_mean", 1.0))
        vecs = generate_scores_full_per_candidate([pair, pair], prob, oversample=True)
        assert np.array_equal(vecs[0], vecs[1])

    def test_refit_count(self, monkeypatch):
        calls = [0]
        original = optcs.models.train_arrays

        def counting(spec, X, y):
            calls[0] += 1
            return original(spec, X, y)

        monkeypatch.setattr(optcs.models, "train_arrays", counting)
        prob = binary_problem([1, 0, 1], m=2)
        pair = (TrainerSpec("constant_mean"), ScoreConfig("clipped_mean", 1.0))
        generate_scores_full_per_candidate([pair, pair, pair], prob, oversample=False)
        assert calls[0] == 3 * (prob.n2 + prob.m)
