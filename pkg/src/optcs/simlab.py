"""Synthetic data generators, metrics, and the replication experiment runner.

Twelve data-generating processes in three groups:

* ``liang_1..4`` -- high-dimensional linear signal (default d=300, sigma=3,
  nu=3): sparse or dense coefficients, Gaussian or heavy-tailed noise and
  features.
* ``jin_1..4`` -- low-dimensional nonlinear regression (default d=20,
  sigma=1), homoscedastic and heteroscedastic noise variants.
* ``jin_cls_1..4`` -- binary classification versions (default d=10,
  sigma=0.5): ``y = 1{mu(x) + eps > 0}``.

All thresholds are ``c = 0``.  Features for the ``jin`` groups are sampled
uniformly on ``[-1, 1]^d``: the indicator and min/max terms in their
regression functions are degenerate on ``[0, 1]^d``, so the symmetric range
is used and recorded in report metadata.

The experiment runner draws fresh data per replication from counter-based
substreams of the master seed, runs every procedure on identical data (paired
comparison), and aggregates per-(procedure, q) metrics with Monte-Carlo
standard errors.  Results are independent of worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .core import DataSplit, LabeledSample, Problem, ScoreConfig, SelectionOutcome, TestSample
from .models import TrainerSpec
from .procedures import CandidateSpec, ProcedureSpec, prepare_procedure

__all__ = [
    "DGP_FAMILIES",
    "DgpSpec",
    "RepMetrics",
    "ExperimentReport",
    "sample_dgp",
    "sample_problem",
    "compute_metrics",
    "run_experiment",
    "candidate_bank",
    "BANK_NAMES",
]

DGP_FAMILIES = tuple(
    f"{group}_{i}" for group in ("liang", "jin", "jin_cls") for i in range(1, 5)
)

_FAMILY_DEFAULTS = {
    "liang": {"d": 300, "sigma": 3.0, "nu": 3.0},
    "jin": {"d": 20, "sigma": 1.0, "nu": 3.0},
    "jin_cls": {"d": 10, "sigma": 0.5, "nu": 3.0},
}

X_RANGE_NOTE = (
    "jin/jin_cls features sampled from Unif[-1,1]^d (the nominal Unif[0,1]^d "
    "makes their sign indicators degenerate)"
)

# Substream roles under the master seed.
_ROLE_DATA = 0
_ROLE_PROC = 1


@dataclass(frozen=True)
class DgpSpec:
    """A data-generating process with its shape parameters.

    ``theta_every`` controls the sparse-signal spacing in the liang group:
    coefficients at 1-based positions divisible by it are 1, the rest 0.
    """

    family: str
    d: int = 0
    sigma: float = 0.0
    nu: float = 3.0
    theta_every: int = 20
    substream_id: int = 0

    def __post_init__(self):
        if self.family not in DGP_FAMILIES:
            raise ValueError(f"unknown dgp family {self.family!r}")
        group = self.family.rsplit("_", 1)[0]
        defaults = _FAMILY_DEFAULTS[group]
        object.__setattr__(self, "d", int(self.d) if self.d else defaults["d"])
        object.__setattr__(self, "sigma", float(self.sigma) if self.sigma else defaults["sigma"])
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "theta_every", int(self.theta_every))
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if group != "liang" and self.d < 4:
            raise ValueError("jin settings need d >= 4")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.nu <= 2:
            raise ValueError("nu must be > 2 for finite noise variance")
        if self.theta_every < 1:
            raise ValueError("theta_every must be >= 1")


def _liang_theta(setting: int, d: int, every: int) -> np.ndarray:
    if setting == 3:
        return np.full(d, 1.0 / d)
    # 1-based positions that are multiples of `every` carry the signal.
    theta = np.zeros(d)
    theta[every - 1 :: every] = 1.0
    return theta


def _jin_mu(setting: int, X: np.ndarray) -> np.ndarray:
    x1, x2, x3, x4 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    if setting in (1, 3):
        pos = x2 > 0
        return np.where(
            pos,
            4 * x1 * np.maximum(0.5, x3),
            4 * x1 * np.minimum(x3, -0.5),
        )
    return 2 * (x1 * x2 + np.exp(x4) - 1)


def _jin_cls_mu(setting: int, X: np.ndarray) -> np.ndarray:
    x1, x2, x4 = X[:, 0], X[:, 1], X[:, 3]
    if setting in (1, 3):
        pos = x1 * x2 > 0
        return np.where(pos, 0.5, 1.0) + x4
    return 2 * (x1 * x2 + np.exp(x4) - 1)


def _sample_arrays(spec: DgpSpec, n: int, rng: np.random.Generator):
    group, setting = spec.family.rsplit("_", 1)
    setting = int(setting)
    d, sigma, nu = spec.d, spec.sigma, spec.nu

    if group == "liang":
        if setting == 4:
            X = rng.standard_t(nu, size=(n, d))
        else:
            X = rng.standard_normal((n, d))
        theta = _liang_theta(setting, d, spec.theta_every)
        if setting == 2:
            eps = sigma * rng.standard_t(nu, size=n)
        elif setting == 3:
            eps = sigma * rng.standard_normal(n) / np.sqrt(d)
        else:
            eps = sigma * rng.standard_normal(n)
        y = X @ theta + eps
        return X, y

    X = rng.uniform(-1.0, 1.0, size=(n, d))
    if group == "jin":
        mu = _jin_mu(setting, X)
        scale = {1: sigma, 2: 1.5 * sigma}.get(setting)
        if scale is None:
            scale = sigma * (5.5 - np.abs(mu)) / 2
        return X, mu + scale * rng.standard_normal(n)

    mu = _jin_cls_mu(setting, X)
    if setting == 1:
        scale = 2 * sigma
    elif setting == 2:
        scale = 1.5 * sigma
    elif setting == 3:
        scale = sigma * (5.5 - np.abs(mu)) / 2
    else:
        scale = sigma * (5.5 - np.abs(mu)) / 3
    y = (mu + scale * rng.standard_normal(n) > 0).astype(float)
    return X, y


def sample_dgp(spec: DgpSpec, n: int, rng: np.random.Generator) -> list[LabeledSample]:
    """Draw ``n`` i.i.d. labeled samples (responses revealed, ``c = 0``)."""
    X, y = _sample_arrays(spec, n, rng)
    return [LabeledSample(X[i], y[i], 0.0) for i in range(n)]


def sample_problem(spec: DgpSpec, split: DataSplit, rng: np.random.Generator) -> Problem:
    """Draw a full problem: ``n`` labeled plus ``m`` test samples with ground
    truth retained for metric computation."""
    X, y = _sample_arrays(spec, split.n + split.m, rng)
    return Problem.from_arrays(
        X[: split.n], y[: split.n], np.zeros(split.n),
        X[split.n :], np.zeros(split.m),
        n1=split.n1, y_test_hidden=y[split.n :],
    )


def _metrics_arrays(selected: frozenset[int], y_test: np.ndarray, c_test: np.ndarray):
    null = y_test <= c_test
    n_sel = len(selected)
    idx = np.array(sorted(selected), dtype=int)
    false = int(np.count_nonzero(null[idx])) if n_sel else 0
    n_alt = int(np.count_nonzero(~null))
    fdp = false / max(1, n_sel)
    power = (n_sel - false) / n_alt if n_alt > 0 else 0.0
    return fdp, power, n_alt == 0


def compute_metrics(outcome: SelectionOutcome, test: list[TestSample]) -> tuple[float, float]:
    """False discovery proportion and power of one run against ground truth.

    Power is 0 when no test sample satisfies ``y > c``.
    """
    if any(s.y_hidden is None for s in test):
        raise ValueError("every test sample needs ground truth for metric computation")
    y = np.array([s.y_hidden for s in test], dtype=float)
    c = np.array([s.c for s in test], dtype=float)
    fdp, power, _ = _metrics_arrays(outcome.selected, y, c)
    return fdp, power


@dataclass(frozen=True)
class RepMetrics:
    rep: int
    fdr: float
    power: float
    n_selected: int
    h1_empty: bool = False


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated metrics for one (procedure, q) cell."""

    procedure: str
    q: float
    per_rep: tuple[RepMetrics, ...]
    mean_fdr: float
    mean_power: float
    stderr_fdr: float
    stderr_power: float
    mean_selected: float
    n_h1_empty: int
    config: dict = field(default_factory=dict)


def _rep_rows(dgp: DgpSpec, split: DataSplit, procedures: tuple[ProcedureSpec, ...],
              q_grid: tuple[float, ...], master_seed: int, rep: int):
    """All (procedure, q) metrics for one replication."""
    data_rng = substream(master_seed, _ROLE_DATA, dgp.substream_id, rep)
    problem = sample_problem(dgp, split, data_rng)
    y_test = problem.y_test_hidden
    c_test = problem.c_test
    visible = problem.strip_ground_truth()
    rows = []
    for p_idx, spec in enumerate(procedures):
        try:
            prepared = prepare_procedure(
                visible, spec, substream(master_seed, _ROLE_PROC, rep, p_idx)
            )
            for q_idx, q in enumerate(q_grid):
                outcome = prepared.select(
                    q, substream(master_seed, _ROLE_PROC, rep, p_idx, q_idx)
                )
                fdp, power, h1_empty = _metrics_arrays(outcome.selected, y_test, c_test)
                rows.append((p_idx, q_idx, fdp, power, outcome.n_selected, h1_empty))
        except Exception as err:
            raise RuntimeError(
                f"replication {rep} failed for procedure {spec.label!r} "
                f"(master_seed={master_seed}): {err}"
            ) from err
    return rep, rows


def _rep_worker(args):
    return _rep_rows(*args)


def run_experiment(
    dgp: DgpSpec,
    split: DataSplit,
    procedures: list[ProcedureSpec],
    q_grid: list[float],
    reps: int,
    master_seed: int,
    workers: int = 1,
) -> list[ExperimentReport]:
    """Replicated paired comparison of procedures over a q grid.

    Every replication draws fresh data from its own substream; all procedures
    see identical data within a replication.  Reports are ordered by
    (procedure, q) and are bit-identical for a given master seed regardless
    of ``workers``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    procedures = tuple(procedures)
    q_grid = tuple(float(q) for q in q_grid)
    for q in q_grid:
        if not 0 < q < 1:
            raise ValueError(f"q must be in (0, 1), got {q}")

    args = [(dgp, split, procedures, q_grid, master_seed, rep) for rep in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, reps // (4 * workers))
            results = list(pool.map(_rep_worker, args, chunksize=chunk))
    else:
        results = [_rep_rows(*a) for a in args]
    results.sort(key=lambda t: t[0])

    cells: dict[tuple[int, int], list[RepMetrics]] = {
        (p, qi): [] for p in range(len(procedures)) for qi in range(len(q_grid))
    }
    for rep, rows in results:
        for p_idx, q_idx, fdp, power, n_sel, h1_empty in rows:
            cells[(p_idx, q_idx)].append(RepMetrics(rep, fdp, power, n_sel, h1_empty))

    reports = []
    for p_idx, spec in enumerate(procedures):
        for q_idx, q in enumerate(q_grid):
            per_rep = tuple(cells[(p_idx, q_idx)])
            fdr = np.array([r.fdr for r in per_rep])
            power = np.array([r.power for r in per_rep])
            n = len(per_rep)
            stderr = lambda v: float(np.std(v, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            reports.append(
                ExperimentReport(
                    procedure=spec.label,
                    q=q,
                    per_rep=per_rep,
                    mean_fdr=float(fdr.mean()),
                    mean_power=float(power.mean()),
                    stderr_fdr=stderr(fdr),
                    stderr_power=stderr(power),
                    mean_selected=float(np.mean([r.n_selected for r in per_rep])),
                    n_h1_empty=int(sum(r.h1_empty for r in per_rep)),
                    config={"kind": spec.kind, "prune": spec.prune,
                            "oversample": spec.effective_oversample()},
                )
            )
    return reports


# ---------------------------------------------------------------------------
# Candidate banks for the simulation studies


def _subset(rng: np.random.Generator, d: int, size: int) -> tuple[int, ...]:
    return tuple(int(i) for i in np.sort(rng.choice(d, size=max(1, size), replace=False)))


def _quantile_candidate(alpha: float, features, big_m: float = 1000.0) -> CandidateSpec:
    hp = {"quantile_level": alpha}
    if features is not None:
        hp["features"] = features
    return CandidateSpec(
        TrainerSpec("linear_quantile", hp),
        ScoreConfig("clipped_quantile", big_m=big_m, quantile_level=alpha),
    )


def candidate_bank(name: str, d: int, seed: int = 0) -> tuple[CandidateSpec, ...]:
    """Named candidate banks mirroring the simulation studies' structure.

    * ``liang_msel_11`` -- nine linear quantile models (alpha 0.1..0.9) on
      random feature subsets of size d/10, plus a ridge mean model on a
      subset of size d/5 wrapped in clipped-mean and studentized scores.
    * ``jin_msel_24`` -- two groups of nine quantile models on different
      subsets, a ridge mean model, and five studentized variants with
      different spread-model families.
    * ``jin_cls_msel_5`` -- three quantile levels plus ridge mean and ridge
      studentized, for binary problems.
    * ``jin_cls_full_3`` -- ridge, k-NN, and constant mean trainers for
      full-data procedures on binary problems.

    Feature subsets are drawn from a substream of ``seed``, so a bank is
    fully determined by ``(name, d, seed)``.
    """
    rng = substream(seed, 2, 0)
    if name == "liang_msel_11":
        small, large = max(1, d // 10), max(2, d // 5)
        cands = [
            _quantile_candidate(alpha, _subset(rng, d, small))
            for alpha in np.arange(0.1, 0.95, 0.1).round(1)
        ]
        mean_features = _subset(rng, d, large)
        ridge = TrainerSpec("ridge", {"ridge_lambda": 1.0, "features": mean_features})
        ridge_sp = TrainerSpec(
            "ridge", {"ridge_lambda": 1.0, "features": mean_features, "fit_spread": True}
        )
        cands.append(CandidateSpec(ridge, ScoreConfig("clipped_mean", big_m=100.0)))
        cands.append(CandidateSpec(ridge_sp, ScoreConfig("clipped_studentized", big_m=1000.0)))
        return tuple(cands)

    if name == "jin_msel_24":
        cands = []
        for size in (d, max(2, d // 2)):
            features = None if size == d else _subset(rng, d, size)
            cands.extend(
                _quantile_candidate(alpha, features)
                for alpha in np.arange(0.1, 0.95, 0.1).round(1)
            )
        cands.append(
            CandidateSpec(TrainerSpec("ridge", {"ridge_lambda": 1.0}),
                          ScoreConfig("clipped_mean", big_m=100.0))
        )
        spreads = [
            {"fit_spread": True},
            {"spread_spec": {"family": "constant_mean"}},
            {"spread_spec": {"family": "knn", "hyperparams": {"knn_k": 5}}},
            {"spread_spec": {"family": "knn", "hyperparams": {"knn_k": 15}}},
            {"spread_spec": {"family": "linear_quantile",
                             "hyperparams": {"quantile_level": 0.75}}},
        ]
        for extra in spreads:
            cands.append(
                CandidateSpec(TrainerSpec("ridge", {"ridge_lambda": 1.0, **extra}),
                              ScoreConfig("clipped_studentized", big_m=1000.0))
            )
        return tuple(cands)

    if name == "jin_cls_msel_5":
        cands = [_quantile_candidate(alpha, None) for alpha in (0.3, 0.5, 0.7)]
        cands.append(
            CandidateSpec(TrainerSpec("ridge", {"ridge_lambda": 1.0}),
                          ScoreConfig("clipped_mean", big_m=100.0))
        )
        cands.append(
            CandidateSpec(TrainerSpec("ridge", {"ridge_lambda": 1.0, "fit_spread": True}),
                          ScoreConfig("clipped_studentized", big_m=1000.0))
        )
        return tuple(cands)

    if name == "jin_cls_full_3":
        mean = ScoreConfig("clipped_mean", big_m=100.0)
        return (
            CandidateSpec(TrainerSpec("ridge", {"ridge_lambda": 1.0}), mean),
            CandidateSpec(TrainerSpec("knn", {"knn_k": 25}), mean),
            CandidateSpec(TrainerSpec("constant_mean", {}), mean),
        )

    raise ValueError(f"unknown candidate bank {name!r}; expected one of {BANK_NAMES}")


BANK_NAMES = ("liang_msel_11", "jin_msel_24", "jin_cls_msel_5", "jin_cls_full_3")
