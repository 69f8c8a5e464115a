"""Symmetric training algorithms producing prediction bundles.

Every trainer here is exactly invariant to permutations of its training data:
the data are put into a canonical (lexicographic) order before fitting, so
even floating-point accumulation order cannot depend on the input order.
That exactness is what the full-data selection procedures rely on.

Families:

* ``constant_mean`` -- the sample mean, ignoring features.
* ``ridge`` -- linear regression with an unpenalized intercept and an L2
  penalty ``ridge_lambda`` on coefficients, solved by normal equations.
* ``linear_quantile`` -- linear quantile regression fitted by full-batch
  subgradient descent on the pinball loss (``quantile_level``, ``gd_steps``,
  ``gd_rate``), initialized at the empirical quantile and returning the best
  iterate by training loss.
* ``knn`` -- k-nearest-neighbor mean with distance ties resolved by averaging
  over all tied neighbors.
* ``shuffled_wrapper`` -- applies a seeded random permutation before handing
  the data to an inner trainer, for wrapping order-sensitive algorithms.

Mean trainers accept ``features`` (column indices to regress on) and an
optional spread model for studentized scores: ``fit_spread=True`` fits the
same family to absolute training residuals, or ``spread_spec`` names another
family.  Spread predictions are floored at ``spread_floor`` to stay positive.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as _slinalg

from .core import LabeledSample

__all__ = [
    "FittedModel",
    "TrainerSpec",
    "train",
    "train_arrays",
    "oversample_balance",
    "oversample_indices",
]

TRAINER_FAMILIES = ("constant_mean", "ridge", "linear_quantile", "knn", "shuffled_wrapper")

_DEFAULT_GD_STEPS = 200
_DEFAULT_GD_RATE = 0.5
_DEFAULT_SPREAD_FLOOR = 1e-6


@dataclass(frozen=True)
class FittedModel:
    """Deterministic predictor bundle.

    Each predictor maps an ``(N, d)`` feature matrix to an ``(N,)`` vector.
    ``predict_spread`` outputs are strictly positive when present.
    """

    predict_mean: Callable[[np.ndarray], np.ndarray]
    predict_quantile: Callable[[np.ndarray], np.ndarray] | None = None
    predict_spread: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class TrainerSpec:
    """Declarative description of a trainer; picklable and reusable."""

    family: str
    hyperparams: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.family not in TRAINER_FAMILIES:
            raise ValueError(
                f"unknown trainer family {self.family!r}; expected one of {TRAINER_FAMILIES}"
            )


def _require(hp: dict, key: str, family: str):
    if key not in hp:
        raise ValueError(f"{family} requires hyperparam {key!r}")
    return hp[key]


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Primary key: first feature column; final tie-breaker: y.
    keys = (y,) + tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def _select_features(X: np.ndarray, features: Sequence[int] | None) -> np.ndarray:
    if features is None:
        return X
    idx = np.asarray(features, dtype=int)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= X.shape[1]:
        raise ValueError(f"features {list(features)} out of range for d={X.shape[1]}")
    return X[:, idx]


def _linear_predictor(intercept: float, beta: np.ndarray, features) -> Callable:
    def predict(X: np.ndarray) -> np.ndarray:
        Xs = _select_features(np.atleast_2d(np.asarray(X, dtype=float)), features)
        return intercept + Xs @ beta

    return predict


def _fit_constant(X, y, hp):
    mu = float(np.mean(y))

    def predict(Xq):
        return np.full(np.atleast_2d(Xq).shape[0], mu)

    return predict


def _fit_ridge(X, y, hp):
    lam = float(_require(hp, "ridge_lambda", "ridge"))
    if lam < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    features = hp.get("features")
    Xs = _select_features(X, features)
    A = np.column_stack([np.ones(Xs.shape[0]), Xs])
    G = A.T @ A
    if lam > 0:
        G = G + np.diag([0.0] + [lam] * Xs.shape[1])
    try:
        cho = _slinalg.cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError as err:
        raise ValueError(
            "singular normal equations; set ridge_lambda > 0 for a rank-deficient design"
        ) from err
    coef = _slinalg.cho_solve(cho, A.T @ y, check_finite=False)
    return _linear_predictor(float(coef[0]), coef[1:], features)


def _pinball_loss(y, pred, alpha):
    r = y - pred
    return float(np.mean(np.maximum(alpha * r, (alpha - 1.0) * r)))


def _fit_linear_quantile(X, y, hp):
    alpha = float(_require(hp, "quantile_level", "linear_quantile"))
    if not 0 < alpha < 1:
        raise ValueError("quantile_level must be in (0, 1)")
    steps = int(hp.get("gd_steps", _DEFAULT_GD_STEPS))
    rate = float(hp.get("gd_rate", _DEFAULT_GD_RATE))
    if steps < 0 or rate <= 0:
        raise ValueError("gd_steps must be >= 0 and gd_rate > 0")
    features = hp.get("features")
    Xs = _select_features(X, features)
    A = np.column_stack([np.ones(Xs.shape[0]), Xs])
    n = A.shape[0]

    theta = np.zeros(A.shape[1])
    theta[0] = np.quantile(y, alpha, method="inverted_cdf")
    best_loss = _pinball_loss(y, A @ theta, alpha)
    best_theta = theta.copy()
    for t in range(1, steps + 1):
        r = y - A @ theta
        g = A.T @ ((r < 0).astype(float) - alpha) / n
        theta = theta - (rate / np.sqrt(t)) * g
        loss = _pinball_loss(y, A @ theta, alpha)
        if loss < best_loss:
            best_loss = loss
            best_theta = theta.copy()
    return _linear_predictor(float(best_theta[0]), best_theta[1:], features)


def _fit_knn(X, y, hp):
    k = int(_require(hp, "knn_k", "knn"))
    if k < 1:
        raise ValueError("knn_k must be >= 1")
    features = hp.get("features")
    Xs = _select_features(X, features).copy()
    yt = y.copy()
    k = min(k, Xs.shape[0])

    def predict(Xq):
        Q = _select_features(np.atleast_2d(np.asarray(Xq, dtype=float)), features)
        d2 = ((Q[:, None, :] - Xs[None, :, :]) ** 2).sum(axis=-1)
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        # All points tied with the k-th distance count as neighbors.
        mask = (d2 <= kth[:, None]).astype(float)
        return (mask @ yt) / mask.sum(axis=1)

    return predict


_MEAN_FITTERS = {
    "constant_mean": _fit_constant,
    "ridge": _fit_ridge,
    "knn": _fit_knn,
}


def _train_sorted(spec: TrainerSpec, X: np.ndarray, y: np.ndarray) -> FittedModel:
    hp = spec.hyperparams
    if spec.family == "linear_quantile":
        predict = _fit_linear_quantile(X, y, hp)
        return FittedModel(predict_mean=predict, predict_quantile=predict)

    if spec.family == "shuffled_wrapper":
        inner = hp.get("inner")
        if not inner:
            raise ValueError("shuffled_wrapper requires an 'inner' trainer spec")
        if spec.seed is None:
            raise ValueError("shuffled_wrapper requires a seed")
        perm = np.random.default_rng(spec.seed).permutation(X.shape[0])
        inner_spec = TrainerSpec(inner["family"], inner.get("hyperparams", {}),
                                 inner.get("seed"))
        # The inner trainer sees a fixed random order regardless of input order.
        return _train_sorted(inner_spec, X[perm], y[perm])

    fitter = _MEAN_FITTERS[spec.family]
    predict_mean = fitter(X, y, hp)

    predict_spread = None
    spread_spec = hp.get("spread_spec")
    if hp.get("fit_spread") or spread_spec is not None:
        floor = float(hp.get("spread_floor", _DEFAULT_SPREAD_FLOOR))
        resid = np.abs(y - predict_mean(X))
        if spread_spec is None:
            raw = fitter(X, resid, hp)
        else:
            inner = TrainerSpec(spread_spec["family"], spread_spec.get("hyperparams", {}),
                                spread_spec.get("seed"))
            raw = _train_sorted(inner, X, resid).predict_mean

        def predict_spread(Xq, _raw=raw, _floor=floor):
            return np.maximum(_raw(Xq), _floor)

    return FittedModel(predict_mean=predict_mean, predict_spread=predict_spread)


def train_arrays(spec: TrainerSpec, X: np.ndarray, y: np.ndarray) -> FittedModel:
    """Fit a model on feature matrix ``X`` and responses ``y``.

    The rows are sorted into a canonical order first, so the fit is exactly
    invariant to any permutation of the input.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (N, d) and y (N,) with matching N")
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    order = _canonical_order(X, y)
    return _train_sorted(spec, X[order], y[order])


def train(spec: TrainerSpec, data: list[LabeledSample]) -> FittedModel:
    """Fit a model on labeled samples; see :func:`train_arrays`."""
    if not data:
        raise ValueError("empty training data")
    X = np.vstack([s.x for s in data])
    y = np.array([s.y for s in data], dtype=float)
    return train_arrays(spec, X, y)


def oversample_indices(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Index vector replicating minority-class rows until classes balance.

    ``y`` must be binary.  Each minority row is duplicated
    ``majority // minority - 1`` extra times; the remaining
    ``majority % minority`` duplicates go to the first minority rows in a
    canonical content order, so the result is invariant (as a multiset) to
    any permutation of the input.  If either class is empty the data are
    returned unchanged.
    """
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("non-binary labels; oversampling requires y in {0, 1}")
    idx0 = np.flatnonzero(y == 0)
    idx1 = np.flatnonzero(y == 1)
    if len(idx0) == 0 or len(idx1) == 0 or len(idx0) == len(idx1):
        return np.arange(len(y))
    minority = idx1 if len(idx1) < len(idx0) else idx0
    majority = idx0 if len(idx1) < len(idx0) else idx1
    extra_each, remainder = divmod(len(majority), len(minority))
    extra_each -= 1

    X = np.asarray(X, dtype=float)
    Xmin = X[minority]
    canon = minority[np.lexsort(tuple(Xmin[:, j] for j in range(X.shape[1] - 1, -1, -1)))]
    parts = [np.arange(len(y))]
    if extra_each > 0:
        parts.append(np.repeat(minority, extra_each))
    if remainder > 0:
        parts.append(canon[:remainder])
    return np.concatenate(parts)


def oversample_balance(data: list[LabeledSample]) -> list[LabeledSample]:
    """Original samples plus duplicated minority-class samples; see
    :func:`oversample_indices` for the duplication rule."""
    if not data:
        return []
    X = np.vstack([s.x for s in data])
    y = np.array([s.y for s in data], dtype=float)
    idx = oversample_indices(X, y)
    return [data[i] for i in idx]
