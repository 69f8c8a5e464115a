"""Conformal p-values and the modified p-values used for model evaluation.

The basic conformal p-value ranks a test score against calibration scores:

    p = (1 + #{cal <= test}) / (n2 + 1)

Ties between float scores are genuine equality; no epsilon comparison is
applied anywhere.  A randomized tie-breaking variant exists for the classic
split-conformal baseline.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "conformal_pvalue",
    "conformal_pvalue_randomized",
    "pvalues_from_matrix",
    "modified_pvalues_for_j",
]


def conformal_pvalue(cal_scores: np.ndarray, test_score: float) -> float:
    """``(1 + #{cal <= test}) / (n2 + 1)``."""
    cal = np.asarray(cal_scores, dtype=float)
    if cal.size == 0:
        raise ValueError("empty calibration scores")
    return (1 + int(np.count_nonzero(cal <= test_score))) / (cal.size + 1)


def conformal_pvalue_randomized(cal_scores: np.ndarray, test_score: float, u: float) -> float:
    """``(#{cal < test} + u * (1 + #{cal == test})) / (n2 + 1)``."""
    cal = np.asarray(cal_scores, dtype=float)
    if cal.size == 0:
        raise ValueError("empty calibration scores")
    if not 0 <= u <= 1:
        raise ValueError("tie-breaking variable u must lie in [0, 1]")
    below = int(np.count_nonzero(cal < test_score))
    ties = int(np.count_nonzero(cal == test_score))
    return (below + u * (1 + ties)) / (cal.size + 1)


def pvalues_from_matrix(scores: np.ndarray) -> np.ndarray:
    """One conformal p-value per row of an ``m x (n2 + m)`` score matrix.

    Row ``j`` compares its test entry at column ``n2 + j`` against its first
    ``n2`` (calibration) entries.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise ValueError("score matrix must be two-dimensional")
    m, cols = scores.shape
    n2 = cols - m
    if n2 < 1:
        raise ValueError(f"score matrix must have more columns than rows (m={m}, cols={cols})")
    cal = scores[:, :n2]
    own = scores[np.arange(m), n2 + np.arange(m)]
    return (1 + np.count_nonzero(cal <= own[:, None], axis=1)) / (n2 + 1)


def modified_pvalues_for_j(
    cal_scores_k: np.ndarray, test_scores_k: np.ndarray, j: int
) -> np.ndarray:
    """Auxiliary p-values for evaluating a candidate model at test point ``j``.

    For each other test point ``l`` (0-based, in increasing order skipping
    ``j``):

        (#{cal <= test[l]} + 1{test[j] <= test[l]}) / (n2 + 1)

    The extra indicator folds the ``j``-th test score into the comparison, so
    the value is invariant to permutations of the calibration scores together
    with the ``j``-th test score.
    """
    cal = np.asarray(cal_scores_k, dtype=float)
    tst = np.asarray(test_scores_k, dtype=float)
    m = tst.size
    if not 0 <= j < m:
        raise ValueError(f"test index {j} out of range for m={m}")
    others = np.arange(m) != j
    counts = np.count_nonzero(cal[None, :] <= tst[others, None], axis=1)
    bump = (tst[j] <= tst[others]).astype(int)
    return (counts + bump) / (cal.size + 1)


def _modified_pvalue_matrix(cal: np.ndarray, tst: np.ndarray) -> np.ndarray:
    """Matrix ``P[j, l]`` of modified p-values with the diagonal set to 0.

    Row ``j`` is then exactly the input to the per-test-point BH evaluation:
    the ``m - 1`` off-diagonal entries plus an always-rejected placeholder.
    """
    cal_sorted = np.sort(np.asarray(cal, dtype=float))
    tst = np.asarray(tst, dtype=float)
    counts = np.searchsorted(cal_sorted, tst, side="right")
    bump = (tst[:, None] <= tst[None, :]).astype(float)
    P = (counts[None, :] + bump) / (cal_sorted.size + 1)
    np.fill_diagonal(P, 0.0)
    return P
