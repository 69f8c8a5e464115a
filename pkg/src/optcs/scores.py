"""Clipped conformity scores and score-matrix generators.

A clipped score satisfies ``score(x, y, c) == score(x, c, c)`` whenever
``y <= c``, so test statistics for null samples are computable without their
true responses.  Score generators produce the ``m x (n2 + m)`` matrix whose
row ``j`` drives the ``j``-th conformal p-value: the first ``n2`` entries are
calibration scores, the last ``m`` are test scores with responses imputed at
their thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .core import Problem, ScoreConfig
from .models import FittedModel, TrainerSpec

__all__ = [
    "ScoreFunction",
    "clipped_score",
    "score_values",
    "generate_scores_fixed",
    "generate_scores_msel",
    "generate_scores_full",
    "generate_scores_full_per_candidate",
]


@dataclass(frozen=True)
class ScoreFunction:
    """A score configuration bound to a fitted model."""

    config: ScoreConfig
    model: FittedModel


def score_values(fn: ScoreFunction, X: np.ndarray, y: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vector of clipped scores for rows of ``X`` at responses ``y``.

    * ``clipped_mean``:        ``M * 1{y > c} - mean(x)``
    * ``clipped_studentized``: ``(M * 1{y > c} - mean(x)) / spread(x)``
    * ``clipped_quantile``:    ``M * 1{y > c} - quantile(x)``
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    cfg, model = fn.config, fn.model
    base = cfg.big_m * (y > c).astype(float)
    if cfg.kind == "clipped_mean":
        return base - model.predict_mean(X)
    if cfg.kind == "clipped_studentized":
        if model.predict_spread is None:
            raise ValueError("clipped_studentized requires a model with a spread predictor")
        spread = model.predict_spread(X)
        if np.any(spread <= 0):
            raise ValueError("spread predictor returned a nonpositive value")
        return (base - model.predict_mean(X)) / spread
    if model.predict_quantile is None:
        raise ValueError("clipped_quantile requires a model with a quantile predictor")
    return base - model.predict_quantile(X)


def clipped_score(fn: ScoreFunction, x: np.ndarray, y: float, c: float) -> float:
    """Clipped score for a single sample; see :func:`score_values`."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(score_values(fn, x[None, :], np.array([y]), np.array([c]))[0])


def _fixed_row(fn: ScoreFunction, problem: Problem) -> np.ndarray:
    cal = score_values(fn, problem.x_calib, problem.y_calib, problem.c_calib)
    tst = score_values(fn, problem.x_test, problem.c_test, problem.c_test)
    return np.concatenate([cal, tst])


def generate_scores_fixed(fn: ScoreFunction, problem: Problem) -> np.ndarray:
    """Score matrix for a single pre-determined score function.

    All ``m`` rows are identical: calibration samples are scored at their
    observed responses, test samples at their thresholds (imputed null).
    """
    return np.tile(_fixed_row(fn, problem), (problem.m, 1))


def generate_scores_msel(
    candidates: list[ScoreFunction], problem: Problem, selected: np.ndarray
) -> np.ndarray:
    """Score matrix where row ``j`` uses candidate ``selected[j]`` (0-based)."""
    selected = np.asarray(selected, dtype=int)
    if selected.shape != (problem.m,):
        raise ValueError(f"selected must have one model index per test point (m={problem.m})")
    if selected.size and (selected.min() < 0 or selected.max() >= len(candidates)):
        raise ValueError(
            f"model index out of range: valid range is 0..{len(candidates) - 1}"
        )
    rows = {k: _fixed_row(candidates[k], problem) for k in np.unique(selected)}
    return np.vstack([rows[k] for k in selected])


def _check_binary_reduced(problem: Problem):
    y = problem.y_labeled
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("binary-reduced problem required: labels must be in {0, 1}")
    if np.any(problem.c_labeled != 0) or np.any(problem.c_test != 0):
        raise ValueError("binary-reduced problem required: all thresholds must be 0")


def _loo_score_vector(
    spec: TrainerSpec, config: ScoreConfig, problem: Problem, oversample: bool
) -> np.ndarray:
    """Leave-one-out scores ``(V_1..V_n2, Vhat_1..Vhat_m)``.

    For each calibration or test point, a model is trained on all labeled
    samples plus all test samples imputed at the null label, minus that one
    point; the point is then scored under its own left-out model.
    """
    n1, n2, m = problem.n1, problem.n2, problem.m
    x_pool = np.vstack([problem.x_labeled, problem.x_test])
    y_pool = np.concatenate([problem.y_labeled, np.zeros(m)])
    n_pool = n1 + n2 + m

    out = np.empty(n2 + m)
    zeros1 = np.zeros(1)
    for pos in range(n1, n_pool):
        keep = np.arange(n_pool) != pos
        X_tr, y_tr = x_pool[keep], y_pool[keep]
        if oversample:
            idx = models.oversample_indices(X_tr, y_tr)
            X_tr, y_tr = X_tr[idx], y_tr[idx]
        try:
            model = models.train_arrays(spec, X_tr, y_tr)
        except Exception as err:
            label = (
                f"calibration sample {pos - n1}" if pos < n1 + n2
                else f"test sample {pos - n1 - n2}"
            )
            raise ValueError(f"leave-one-out refit failed ({label}): {err}") from err
        fn = ScoreFunction(config, model)
        y_at = y_pool[pos : pos + 1] if pos < n1 + n2 else zeros1
        out[pos - n1] = score_values(fn, x_pool[pos : pos + 1], y_at, zeros1)[0]
    return out


def generate_scores_full(
    spec: TrainerSpec, config: ScoreConfig, problem: Problem, oversample: bool = True
) -> np.ndarray:
    """Score matrix from full-data leave-one-out training (all rows identical).

    Requires a binary-reduced problem (labels in ``{0, 1}``, thresholds 0).
    Performs exactly ``n2 + m`` refits; ``oversample`` balances classes in
    each refit's training data.
    """
    _check_binary_reduced(problem)
    return np.tile(_loo_score_vector(spec, config, problem, oversample), (problem.m, 1))


def generate_scores_full_per_candidate(
    candidates: list[tuple[TrainerSpec, ScoreConfig]],
    problem: Problem,
    oversample: bool = True,
) -> list[np.ndarray]:
    """Per-candidate leave-one-out score vectors, ``K * (n2 + m)`` refits."""
    _check_binary_reduced(problem)
    return [
        _loo_score_vector(spec, config, problem, oversample)
        for spec, config in candidates
    ]
