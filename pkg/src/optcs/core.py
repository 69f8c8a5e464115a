"""Domain types shared by every part of the library.

A selection problem consists of labeled samples ``(x, y, c)`` split into a
preparatory block (usable for training only) and a calibration block, plus
test samples ``(x, c)`` whose responses are unobserved.  The goal downstream
is to pick test samples with ``y > c`` under false discovery rate control.

All types are immutable after construction and safe to share across workers.
Test ground truth, when present for simulation metrics, is carried in a field
that no selection procedure reads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "LabeledSample",
    "TestSample",
    "DataSplit",
    "ScoreConfig",
    "SelectionOutcome",
    "Problem",
    "validate_problem",
]

SCORE_KINDS = ("clipped_mean", "clipped_studentized", "clipped_quantile")


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LabeledSample:
    """Feature vector with observed response and selection threshold."""

    x: np.ndarray
    y: float
    c: float

    def __post_init__(self):
        object.__setattr__(self, "x", _readonly(np.atleast_1d(self.x)))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "c", float(self.c))
        if self.x.ndim != 1:
            raise ValueError("feature vector must be one-dimensional")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("non-finite feature value")
        if not np.isfinite(self.y) or not np.isfinite(self.c):
            raise ValueError("non-finite response or threshold")


@dataclass(frozen=True)
class TestSample:
    """Feature vector with threshold; the response is unobserved.

    ``y_hidden`` carries simulation ground truth for metric computation only.
    Selection procedures never read it.
    """

    __test__ = False  # not a pytest class, despite the name

    x: np.ndarray
    c: float
    y_hidden: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", _readonly(np.atleast_1d(self.x)))
        object.__setattr__(self, "c", float(self.c))
        if self.x.ndim != 1:
            raise ValueError("feature vector must be one-dimensional")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("non-finite feature value")
        if not np.isfinite(self.c):
            raise ValueError("non-finite threshold")
        if self.y_hidden is not None:
            object.__setattr__(self, "y_hidden", float(self.y_hidden))
            if not np.isfinite(self.y_hidden):
                raise ValueError("non-finite hidden response")


@dataclass(frozen=True)
class DataSplit:
    """Sizes of the preparatory, calibration, and test blocks."""

    n1: int
    n2: int
    m: int

    def __post_init__(self):
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))
        object.__setattr__(self, "m", int(self.m))
        if self.n1 < 0:
            raise ValueError("preparatory size must be nonnegative")
        if self.n2 < 1:
            raise ValueError("empty calibration set")
        if self.m < 1:
            raise ValueError("empty test set")

    @property
    def n(self) -> int:
        return self.n1 + self.n2


@dataclass(frozen=True)
class ScoreConfig:
    """Shape of a clipped conformity score.

    ``big_m`` is the large constant that rewards responses above the
    threshold; ``quantile_level`` is required exactly for the quantile kind.
    """

    kind: str
    big_m: float = 100.0
    quantile_level: float | None = None

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}; expected one of {SCORE_KINDS}")
        object.__setattr__(self, "big_m", float(self.big_m))
        if not self.big_m > 0:
            raise ValueError("big_m must be positive")
        if self.kind == "clipped_quantile":
            if self.quantile_level is None:
                raise ValueError("quantile_level is required for clipped_quantile scores")
            object.__setattr__(self, "quantile_level", float(self.quantile_level))
            if not 0 < self.quantile_level < 1:
                raise ValueError("quantile_level must be in (0, 1)")
        elif self.quantile_level is not None:
            raise ValueError(f"quantile_level is only valid for clipped_quantile, not {self.kind}")


@dataclass(frozen=True)
class SelectionOutcome:
    """Everything a selection procedure produced for one problem.

    ``selected`` holds 0-based test indices; reports convert to 1-based.
    ``aux_sizes`` are the per-test auxiliary selection sizes, ``xi`` the
    pruning variables, and ``selected_models`` the 0-based candidate index
    chosen per test point (model-selection variants only).
    """

    pvalues: np.ndarray
    aux_sizes: np.ndarray
    xi: np.ndarray
    r_star: int
    selected: frozenset[int]
    selected_models: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "pvalues", _readonly(self.pvalues))
        object.__setattr__(self, "aux_sizes", _readonly(self.aux_sizes))
        object.__setattr__(self, "xi", _readonly(self.xi))
        object.__setattr__(self, "r_star", int(self.r_star))
        object.__setattr__(self, "selected", frozenset(int(j) for j in self.selected))
        if self.selected_models is not None:
            sm = np.array(self.selected_models, dtype=int)
            sm.setflags(write=False)
            object.__setattr__(self, "selected_models", sm)

    @property
    def n_selected(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class Problem:
    """A checked selection problem, partitioned into prep/calibration/test.

    ``y_test_hidden`` is NaN where ground truth is absent and ``None`` when no
    test sample carries it.  Procedures must never read it; only metric
    computation does.
    """

    x_prep: np.ndarray
    y_prep: np.ndarray
    c_prep: np.ndarray
    x_calib: np.ndarray
    y_calib: np.ndarray
    c_calib: np.ndarray
    x_test: np.ndarray
    c_test: np.ndarray
    y_test_hidden: np.ndarray | None = None

    def __post_init__(self):
        for name in ("x_prep", "y_prep", "c_prep", "x_calib", "y_calib",
                     "c_calib", "x_test", "c_test"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.y_test_hidden is not None:
            yh = np.array(self.y_test_hidden, dtype=float)
            if np.all(np.isnan(yh)):
                yh = None
            else:
                yh.setflags(write=False)
            object.__setattr__(self, "y_test_hidden", yh)

    @property
    def n1(self) -> int:
        return self.x_prep.shape[0]

    @property
    def n2(self) -> int:
        return self.x_calib.shape[0]

    @property
    def m(self) -> int:
        return self.x_test.shape[0]

    @property
    def d(self) -> int:
        return self.x_calib.shape[1]

    @property
    def x_labeled(self) -> np.ndarray:
        return np.vstack([self.x_prep, self.x_calib])

    @property
    def y_labeled(self) -> np.ndarray:
        return np.concatenate([self.y_prep, self.y_calib])

    @property
    def c_labeled(self) -> np.ndarray:
        return np.concatenate([self.c_prep, self.c_calib])

    @property
    def has_ground_truth(self) -> bool:
        return self.y_test_hidden is not None and not np.any(np.isnan(self.y_test_hidden))

    def strip_ground_truth(self) -> "Problem":
        """The same problem with all hidden test responses erased."""
        return replace(self, y_test_hidden=None)

    @classmethod
    def from_arrays(
        cls,
        x_labeled: np.ndarray,
        y_labeled: np.ndarray,
        c_labeled: np.ndarray,
        x_test: np.ndarray,
        c_test: np.ndarray,
        n1: int = 0,
        y_test_hidden: np.ndarray | None = None,
    ) -> "Problem":
        """Build a problem from stacked arrays, splitting labeled rows at ``n1``."""
        x_labeled = np.asarray(x_labeled, dtype=float)
        x_test = np.asarray(x_test, dtype=float)
        n1 = int(n1)
        return cls(
            x_prep=x_labeled[:n1],
            y_prep=np.asarray(y_labeled, dtype=float)[:n1],
            c_prep=np.asarray(c_labeled, dtype=float)[:n1],
            x_calib=x_labeled[n1:],
            y_calib=np.asarray(y_labeled, dtype=float)[n1:],
            c_calib=np.asarray(c_labeled, dtype=float)[n1:],
            x_test=x_test,
            c_test=np.asarray(c_test, dtype=float),
            y_test_hidden=y_test_hidden,
        )


def validate_problem(
    labeled: list[LabeledSample],
    test: list[TestSample],
    split: DataSplit,
) -> Problem:
    """Check a problem instance and partition it into prep/calibration/test.

    The partition follows the order of ``labeled``: the first ``n1`` samples
    form the preparatory block, the next ``n2`` the calibration block.  No
    reordering is performed.
    """
    if len(labeled) != split.n:
        raise ValueError(
            f"labeled sample count {len(labeled)} does not match split n1+n2={split.n}"
        )
    if len(test) != split.m:
        raise ValueError(f"test sample count {len(test)} does not match split m={split.m}")

    dims = {s.x.shape[0] for s in labeled} | {s.x.shape[0] for s in test}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: feature dimensions {sorted(dims)}")

    x_labeled = np.vstack([s.x for s in labeled])
    y_labeled = np.array([s.y for s in labeled], dtype=float)
    c_labeled = np.array([s.c for s in labeled], dtype=float)
    x_test = np.vstack([s.x for s in test])
    c_test = np.array([s.c for s in test], dtype=float)
    y_hidden = np.array(
        [np.nan if s.y_hidden is None else s.y_hidden for s in test], dtype=float
    )
    return Problem.from_arrays(
        x_labeled, y_labeled, c_labeled, x_test, c_test,
        n1=split.n1, y_test_hidden=y_hidden,
    )
