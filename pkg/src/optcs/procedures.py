"""End-to-end selection procedures.

Valid procedures (finite-sample FDR control):

* ``scs`` -- split conformal selection: BH applied to conformal p-values from
  a score function fitted on held-out preparatory data.
* ``optcs_msel`` -- per-test-point model selection over pre-fitted candidates
  via modified p-values, followed by calibrated selection with pruning.
* ``optcs_full`` / ``optcs_full_sep`` -- full-data leave-one-out training, no
  preparatory split needed.
* ``optcs_full_msel`` -- leave-one-out training combined with per-test-point
  model selection.
* ``base_*`` -- sample-splitting baselines that pick the candidate with the
  largest selection set on held-out folds.

``greedy`` picks the candidate with the largest selection set on the *real*
calibration/test data.  It is intentionally invalid (double dipping) and is
included as a cautionary baseline.

Every procedure can be run one-shot through :func:`run_procedure`, or staged
through :func:`prepare_procedure` which does all q-independent work (model
fitting, score generation) once so a grid of nominal levels can be swept
cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._rng import as_generator
from .core import Problem, ScoreConfig, SelectionOutcome
from . import models
from .models import TrainerSpec
from .mtest import PRUNE_MODES, bh, bh_rstar, bh_rstar_rows, optcs_select
from .pvalues import _modified_pvalue_matrix, pvalues_from_matrix
from .scores import (
    ScoreFunction,
    _check_binary_reduced,
    generate_scores_full,
    generate_scores_full_per_candidate,
    score_values,
)

__all__ = [
    "PROCEDURE_KINDS",
    "CandidateSpec",
    "ProcedureSpec",
    "reduce_to_binary",
    "run_scs",
    "run_greedy",
    "run_optcs_msel",
    "run_optcs_full",
    "run_optcs_full_sep",
    "run_optcs_full_msel",
    "run_split_baseline",
    "run_procedure",
    "prepare_procedure",
]

PROCEDURE_KINDS = (
    "scs",
    "greedy",
    "base_random",
    "base_cal_split",
    "base_tr_split",
    "base_split_ratio",
    "optcs_msel",
    "optcs_full",
    "optcs_full_sep",
    "optcs_full_msel",
)

SEP_MODES = ("relaxed_bh", "rigorous")


@dataclass(frozen=True)
class CandidateSpec:
    """A trainer paired with the score shape wrapping its predictions."""

    trainer: TrainerSpec
    score: ScoreConfig


@dataclass(frozen=True)
class ProcedureSpec:
    """Declarative procedure configuration; picklable for parallel runs.

    ``split_ratios`` controls how the procedure repartitions the pooled
    labeled data (kind-specific; see the runner docstrings).  ``oversample``
    defaults by kind (on for ``optcs_full``/``optcs_full_msel``).
    """

    kind: str
    name: str | None = None
    candidates: tuple[CandidateSpec, ...] = ()
    prune: str = "homo"
    q: float | None = None
    oversample: bool | None = None
    split_ratios: tuple[float, ...] | None = None
    seed: int | None = None
    randomized_ties: bool = False
    sep_mode: str = "relaxed_bh"

    def __post_init__(self):
        if self.kind not in PROCEDURE_KINDS:
            raise ValueError(f"unknown procedure kind {self.kind!r}")
        if self.prune not in PRUNE_MODES:
            raise ValueError(f"unknown pruning mode {self.prune!r}")
        if self.sep_mode not in SEP_MODES:
            raise ValueError(f"unknown sep_mode {self.sep_mode!r}")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError(f"procedure {self.kind} requires at least one candidate")
        if self.split_ratios is not None:
            ratios = tuple(float(r) for r in self.split_ratios)
            if abs(sum(ratios) - 1.0) > 1e-9:
                raise ValueError("split ratios must sum to 1")
            object.__setattr__(self, "split_ratios", ratios)

    @property
    def label(self) -> str:
        return self.name or self.kind

    def effective_oversample(self) -> bool:
        if self.oversample is not None:
            return self.oversample
        return self.kind in ("optcs_full", "optcs_full_msel")


def reduce_to_binary(problem: Problem) -> Problem:
    """Recode responses as ``1{y > c}`` with all thresholds set to 0.

    The null event ``y <= c`` becomes ``y_binary <= 0``, so selection targets
    are preserved.  Idempotent on problems that are already binary with zero
    thresholds.
    """
    y_lab = (problem.y_labeled > problem.c_labeled).astype(float)
    yh = problem.y_test_hidden
    if yh is not None:
        yh = np.where(np.isnan(yh), np.nan, (yh > problem.c_test).astype(float))
    return Problem.from_arrays(
        problem.x_labeled,
        y_lab,
        np.zeros(problem.n1 + problem.n2),
        problem.x_test,
        np.zeros(problem.m),
        n1=problem.n1,
        y_test_hidden=yh,
    )


# ---------------------------------------------------------------------------
# Shared selection helpers


def _scs_pvalues(fn: ScoreFunction, x_cal, y_cal, c_cal, x_test, c_test) -> np.ndarray:
    cal = np.sort(score_values(fn, x_cal, y_cal, c_cal))
    tst = score_values(fn, x_test, c_test, c_test)
    counts = np.searchsorted(cal, tst, side="right")
    return (1 + counts) / (cal.size + 1)


def _scs_pvalues_randomized(fn, x_cal, y_cal, c_cal, x_test, c_test, u) -> np.ndarray:
    cal = np.sort(score_values(fn, x_cal, y_cal, c_cal))
    tst = score_values(fn, x_test, c_test, c_test)
    below = np.searchsorted(cal, tst, side="left")
    ties = np.searchsorted(cal, tst, side="right") - below
    return (below + u * (1 + ties)) / (cal.size + 1)


def _bh_outcome(p: np.ndarray, q: float, selected_models=None) -> SelectionOutcome:
    selected = bh(p, q)
    size = len(selected)
    m = p.size
    return SelectionOutcome(
        pvalues=p,
        aux_sizes=np.full(m, float(size)),
        xi=np.ones(m),
        r_star=size,
        selected=selected,
        selected_models=selected_models,
    )


class _MselState:
    """q-independent statistics for per-test-point model selection."""

    def __init__(self, cal_list: list[np.ndarray], tst_list: list[np.ndarray]):
        self.pmats = [_modified_pvalue_matrix(cal, tst) for cal, tst in zip(cal_list, tst_list)]
        pcand = []
        for cal, tst in zip(cal_list, tst_list):
            counts = np.searchsorted(np.sort(cal), tst, side="right")
            pcand.append((1 + counts) / (cal.size + 1))
        self.pcand = np.vstack(pcand)  # (K, m)

    def select(self, q: float, prune: str, rng) -> SelectionOutcome:
        sizes = np.vstack([bh_rstar_rows(pmat, q) for pmat in self.pmats])  # (K, m)
        m = sizes.shape[1]
        khat = np.argmax(sizes, axis=0)  # ties -> smallest candidate index
        rhat = sizes[khat, np.arange(m)].astype(float)
        p = self.pcand[khat, np.arange(m)]
        return optcs_select(p, rhat, q, prune, rng, selected_models=khat)


# ---------------------------------------------------------------------------
# Core procedures (operating on fitted score functions)


def run_scs(
    problem: Problem,
    score_fn: ScoreFunction,
    q: float,
    randomized_ties: bool = False,
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """Split conformal selection: BH on conformal p-values.

    ``score_fn`` must have been fitted without touching the calibration or
    test data.  ``randomized_ties`` switches to uniform tie-breaking p-values
    drawn from ``rng``.
    """
    if randomized_ties:
        u = as_generator(rng).uniform(size=problem.m)
        p = _scs_pvalues_randomized(
            score_fn, problem.x_calib, problem.y_calib, problem.c_calib,
            problem.x_test, problem.c_test, u,
        )
    else:
        p = _scs_pvalues(
            score_fn, problem.x_calib, problem.y_calib, problem.c_calib,
            problem.x_test, problem.c_test,
        )
    return _bh_outcome(p, q)


def run_greedy(
    problem: Problem,
    candidates: list[ScoreFunction],
    q: float,
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """Pick the candidate whose SCS selection set is largest (ties: smallest
    index) and return that set.

    This double-dips the calibration and test data and does **not** control
    the FDR; it exists as a cautionary baseline.
    """
    outcomes = [run_scs(problem, fn, q) for fn in candidates]
    khat = int(np.argmax([o.n_selected for o in outcomes]))
    chosen = outcomes[khat]
    return replace(chosen, selected_models=np.full(problem.m, khat))


def run_optcs_msel(
    problem: Problem,
    candidates: list[ScoreFunction],
    q: float,
    prune: str = "homo",
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """Valid model selection over pre-fitted candidates.

    For each test point ``j`` and candidate ``k``, the candidate's selection
    performance is estimated by BH applied to the modified p-values (plus an
    always-rejected placeholder); the best candidate supplies the p-value and
    auxiliary size, and the final set comes from the calibrated selection
    step with pruning.
    """
    cal_list, tst_list = [], []
    for fn in candidates:
        cal_list.append(score_values(fn, problem.x_calib, problem.y_calib, problem.c_calib))
        tst_list.append(score_values(fn, problem.x_test, problem.c_test, problem.c_test))
    return _MselState(cal_list, tst_list).select(q, prune, rng)


def run_optcs_full(
    problem: Problem,
    trainer: TrainerSpec,
    score_config: ScoreConfig,
    q: float,
    oversample: bool = True,
) -> SelectionOutcome:
    """Full-data selection via leave-one-out training; BH without pruning.

    Requires a binary-reduced problem (see :func:`reduce_to_binary`).
    """
    mat = generate_scores_full(trainer, score_config, problem, oversample)
    return _bh_outcome(pvalues_from_matrix(mat), q)


class _FullSepState:
    """Per-test-point leave-one-out scores for the separate-training variant."""

    def __init__(self, problem: Problem, trainer: TrainerSpec, config: ScoreConfig,
                 need_aux: bool):
        n1, n2, m = problem.n1, problem.n2, problem.m
        x_lab, y_lab = problem.x_labeled, problem.y_labeled
        self.p = np.empty(m)
        self.aux = np.zeros((m, m)) if need_aux else None
        zeros1 = np.zeros(1)
        zeros_m = np.zeros(m)
        for j in range(m):
            x_pool = np.vstack([x_lab, problem.x_test[j : j + 1]])
            y_pool = np.concatenate([y_lab, [0.0]])
            n_pool = n1 + n2 + 1
            cal_scores = np.empty(n2)
            aux_cal = np.empty((n2, m)) if need_aux else None
            keep = np.ones(n_pool, dtype=bool)
            for i in range(n2):
                pos = n1 + i
                keep[pos] = False
                model = models.train_arrays(trainer, x_pool[keep], y_pool[keep])
                keep[pos] = True
                fn = ScoreFunction(config, model)
                cal_scores[i] = score_values(
                    fn, x_pool[pos : pos + 1], y_pool[pos : pos + 1], zeros1
                )[0]
                if need_aux:
                    aux_cal[i] = score_values(fn, problem.x_test, zeros_m, zeros_m)
            model = models.train_arrays(trainer, x_pool[: n_pool - 1], y_pool[: n_pool - 1])
            fn = ScoreFunction(config, model)
            own = score_values(fn, problem.x_test[j : j + 1], zeros1, zeros1)[0]
            self.p[j] = (1 + np.count_nonzero(cal_scores <= own)) / (n2 + 1)
            if need_aux:
                own_all = score_values(fn, problem.x_test, zeros_m, zeros_m)
                counts = np.count_nonzero(cal_scores[:, None] <= aux_cal, axis=0)
                bump = (own <= own_all).astype(int)
                row = (counts + bump) / (n2 + 1)
                row[j] = 0.0
                self.aux[j] = row

    def select(self, q: float, mode: str, prune: str, rng) -> SelectionOutcome:
        if mode == "relaxed_bh":
            return _bh_outcome(self.p, q)
        rhat = bh_rstar_rows(self.aux, q).astype(float)
        return optcs_select(self.p, rhat, q, prune, rng)


def run_optcs_full_sep(
    problem: Problem,
    trainer: TrainerSpec,
    score_config: ScoreConfig,
    q: float,
    mode: str = "relaxed_bh",
    prune: str = "homo",
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """Full-data variant whose training sets contain at most one imputed null.

    For each test point ``j``, models are refit on all labeled data plus that
    single test point (``n2 + 1`` refits per ``j``).  ``relaxed_bh`` applies
    BH directly to the resulting p-values; ``rigorous`` adds the calibrated
    pruning step driven by auxiliary p-values.
    """
    if mode not in SEP_MODES:
        raise ValueError(f"unknown sep mode {mode!r}; expected one of {SEP_MODES}")
    _check_binary_reduced(problem)
    state = _FullSepState(problem, trainer, score_config, need_aux=(mode == "rigorous"))
    return state.select(q, mode, prune, rng)


def run_optcs_full_msel(
    problem: Problem,
    candidates: list[CandidateSpec],
    q: float,
    prune: str = "homo",
    oversample: bool = True,
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """Full-data training combined with per-test-point model selection."""
    vecs = generate_scores_full_per_candidate(
        [(c.trainer, c.score) for c in candidates], problem, oversample
    )
    n2 = problem.n2
    state = _MselState([v[:n2] for v in vecs], [v[n2:] for v in vecs])
    return state.select(q, prune, rng)


# ---------------------------------------------------------------------------
# Fold machinery for split-based procedures


def _fold_sizes(ratios: tuple[float, ...], n: int) -> list[int]:
    cum = np.round(np.cumsum(ratios) * n).astype(int)
    cum[-1] = n
    sizes = np.diff(np.concatenate([[0], cum])).tolist()
    for size, ratio in zip(sizes, ratios):
        if size < 2:
            raise ValueError(
                f"fold too small: ratio {ratio} of {n} labeled samples gives {size} < 2"
            )
    return sizes


def _shuffled_folds(n: int, ratios: tuple[float, ...], rng) -> list[np.ndarray]:
    sizes = _fold_sizes(ratios, n)
    perm = rng.permutation(n)
    folds, start = [], 0
    for size in sizes:
        folds.append(perm[start : start + size])
        start += size
    return folds


def _labeled_subproblem(problem: Problem, prep_idx, calib_idx) -> Problem:
    x, y, c = problem.x_labeled, problem.y_labeled, problem.c_labeled
    idx = np.concatenate([prep_idx, calib_idx]).astype(int)
    return Problem.from_arrays(
        x[idx], y[idx], c[idx], problem.x_test, problem.c_test,
        n1=len(prep_idx), y_test_hidden=None,
    )


def _fit_candidates(cands, X, y) -> list[ScoreFunction]:
    return [ScoreFunction(c.score, models.train_arrays(c.trainer, X, y)) for c in cands]


def _pseudo_scs_pvalues(fn: ScoreFunction, x, y, c, cal_idx, tst_idx) -> np.ndarray:
    """SCS p-values treating one labeled fold as calibration and another as
    an imputed-null pseudo test set."""
    return _scs_pvalues(
        fn, x[cal_idx], y[cal_idx], c[cal_idx], x[tst_idx], c[tst_idx]
    )


# ---------------------------------------------------------------------------
# Prepared procedures: q-independent state + cheap per-q selection


class _Prepared:
    """Base: subclasses fill ``select``."""

    def select(self, q: float, rng=None) -> SelectionOutcome:  # pragma: no cover
        raise NotImplementedError


class _PreparedBH(_Prepared):
    def __init__(self, p, models=None):
        self.p = p
        self.models = models

    def select(self, q, rng=None):
        return _bh_outcome(self.p, q, selected_models=self.models)


class _PreparedCandidateArgmax(_Prepared):
    """Pick the candidate with the largest BH size on the evaluation
    p-values, then select with that candidate's final p-values.

    For the split baselines the evaluation p-values come from held-out folds;
    for the (invalid) greedy method they are the final p-values themselves.
    """

    def __init__(self, eval_p: list[np.ndarray], final_p: list[np.ndarray], m: int):
        self.eval_p = eval_p
        self.final_p = final_p
        self.m = m

    def select(self, q, rng=None):
        sizes = [bh_rstar(p, q) for p in self.eval_p]
        khat = int(np.argmax(sizes))
        return _bh_outcome(self.final_p[khat], q, selected_models=np.full(self.m, khat))


class _PreparedMsel(_Prepared):
    def __init__(self, state: _MselState, prune: str):
        self.state = state
        self.prune = prune

    def select(self, q, rng=None):
        return self.state.select(q, self.prune, rng)


class _PreparedFullSep(_Prepared):
    def __init__(self, state: _FullSepState, mode: str, prune: str):
        self.state = state
        self.mode = mode
        self.prune = prune

    def select(self, q, rng=None):
        return self.state.select(q, self.mode, self.prune, rng)


def _resplit(problem: Problem, ratios, rng) -> Problem:
    """Repartition pooled labeled data into (prep, calib) by a seeded shuffle."""
    if len(ratios) != 2:
        raise ValueError("expected a (prep, calib) ratio pair")
    prep_idx, calib_idx = _shuffled_folds(problem.n1 + problem.n2, ratios, rng)
    return _labeled_subproblem(problem, prep_idx, calib_idx)


def _merge_prep(problem: Problem) -> Problem:
    """Move all preparatory samples into the calibration block (n1 = 0)."""
    if problem.n1 == 0:
        return problem
    return Problem.from_arrays(
        problem.x_labeled, problem.y_labeled, problem.c_labeled,
        problem.x_test, problem.c_test, n1=0,
        y_test_hidden=problem.y_test_hidden,
    )


def prepare_procedure(
    problem: Problem,
    spec: ProcedureSpec,
    rng: int | np.random.Generator | None = None,
) -> _Prepared:
    """Run all q-independent work (splits, training, score generation).

    The returned object's ``select(q, rng)`` produces a
    :class:`SelectionOutcome`; only pruning draws consume ``rng`` there.
    """
    rng = as_generator(rng)
    kind = spec.kind
    cands = spec.candidates

    if kind in ("scs", "greedy", "optcs_msel", "base_random"):
        prob = problem
        if spec.split_ratios is not None:
            prob = _resplit(problem, spec.split_ratios, rng)
        if prob.n1 == 0:
            raise ValueError(
                f"{kind} needs preparatory data to fit candidates; "
                "provide split_ratios or a problem with n1 > 0"
            )
        if kind == "base_random":
            khat = int(rng.integers(len(cands)))
            fns = _fit_candidates([cands[khat]], prob.x_prep, prob.y_prep)
            p = _scs_pvalues(fns[0], prob.x_calib, prob.y_calib, prob.c_calib,
                             prob.x_test, prob.c_test)
            return _PreparedBH(p, models=np.full(prob.m, khat))
        fns = _fit_candidates(cands, prob.x_prep, prob.y_prep)
        if kind == "scs":
            if spec.randomized_ties:
                u = rng.uniform(size=prob.m)
                p = _scs_pvalues_randomized(
                    fns[0], prob.x_calib, prob.y_calib, prob.c_calib,
                    prob.x_test, prob.c_test, u,
                )
            else:
                p = _scs_pvalues(fns[0], prob.x_calib, prob.y_calib, prob.c_calib,
                                 prob.x_test, prob.c_test)
            return _PreparedBH(p)
        pcands = [
            _scs_pvalues(fn, prob.x_calib, prob.y_calib, prob.c_calib,
                         prob.x_test, prob.c_test)
            for fn in fns
        ]
        if kind == "greedy":
            return _PreparedCandidateArgmax(pcands, pcands, prob.m)
        cal_list = [
            score_values(fn, prob.x_calib, prob.y_calib, prob.c_calib) for fn in fns
        ]
        tst_list = [
            score_values(fn, prob.x_test, prob.c_test, prob.c_test) for fn in fns
        ]
        return _PreparedMsel(_MselState(cal_list, tst_list), spec.prune)

    if kind in ("optcs_full", "optcs_full_sep", "optcs_full_msel"):
        prob = reduce_to_binary(problem)
        if spec.split_ratios is not None:
            prob = _resplit(prob, spec.split_ratios, rng)
        else:
            prob = _merge_prep(prob)
        if kind == "optcs_full":
            c = cands[0]
            mat = generate_scores_full(c.trainer, c.score, prob, spec.effective_oversample())
            return _PreparedBH(pvalues_from_matrix(mat))
        if kind == "optcs_full_sep":
            c = cands[0]
            state = _FullSepState(prob, c.trainer, c.score,
                                  need_aux=(spec.sep_mode == "rigorous"))
            return _PreparedFullSep(state, spec.sep_mode, spec.prune)
        vecs = generate_scores_full_per_candidate(
            [(c.trainer, c.score) for c in cands], prob, spec.effective_oversample()
        )
        n2 = prob.n2
        state = _MselState([v[:n2] for v in vecs], [v[n2:] for v in vecs])
        return _PreparedMsel(state, spec.prune)

    # Remaining kinds: split baselines with internal model selection.
    x, y, c = problem.x_labeled, problem.y_labeled, problem.c_labeled
    n = problem.n1 + problem.n2

    if kind == "base_cal_split":
        # Folds: train, selection-calibration, selection-test, final calibration.
        if spec.split_ratios is not None:
            if len(spec.split_ratios) != 4:
                raise ValueError("base_cal_split needs 4 ratios (train, sel_cal, sel_test, calib)")
            tr, sc, st, fc = _shuffled_folds(n, spec.split_ratios, rng)
        else:
            if problem.n1 == 0:
                raise ValueError("base_cal_split without ratios needs a problem with n1 > 0")
            tr = np.arange(problem.n1)
            sc, st, fc = (problem.n1 + f for f in
                          _shuffled_folds(problem.n2, (0.25, 0.25, 0.5), rng))
    elif kind == "base_tr_split":
        if spec.split_ratios is not None:
            if len(spec.split_ratios) != 4:
                raise ValueError("base_tr_split needs 4 ratios (train, sel_cal, sel_test, calib)")
            tr, sc, st, fc = _shuffled_folds(n, spec.split_ratios, rng)
        else:
            if problem.n1 == 0:
                raise ValueError("base_tr_split without ratios needs a problem with n1 > 0")
            tr, sc, st = _shuffled_folds(problem.n1, (0.5, 0.25, 0.25), rng)
            fc = problem.n1 + np.arange(problem.n2)
    elif kind == "base_split_ratio":
        ratios = spec.split_ratios
        if ratios is None:
            raise ValueError("base_split_ratio requires split_ratios")
        if len(ratios) == 2:
            tr_idx, fc = _shuffled_folds(n, ratios, rng)
            if len(cands) != 1:
                raise ValueError("two-way base_split_ratio expects a single candidate")
            fn = _fit_candidates(cands, x[tr_idx], y[tr_idx])[0]
            p = _pseudo_scs_pvalues_final(fn, x, y, c, fc, problem)
            return _PreparedBH(p)
        if len(ratios) != 3:
            raise ValueError("base_split_ratio needs 2 or 3 ratios")
        tr, sel, fc = _shuffled_folds(n, ratios, rng)
        half = len(sel) // 2
        sc, st = sel[:half], sel[half:]
        if len(sc) < 2 or len(st) < 2:
            raise ValueError(f"fold too small: selection fold of {len(sel)} cannot be halved")
    else:  # pragma: no cover
        raise ValueError(f"unhandled kind {kind}")

    fns = _fit_candidates(cands, x[tr], y[tr])
    pseudo = [_pseudo_scs_pvalues(fn, x, y, c, sc, st) for fn in fns]
    final = [_pseudo_scs_pvalues_final(fn, x, y, c, fc, problem) for fn in fns]
    return _PreparedCandidateArgmax(pseudo, final, problem.m)


def _pseudo_scs_pvalues_final(fn, x, y, c, cal_idx, problem) -> np.ndarray:
    return _scs_pvalues(fn, x[cal_idx], y[cal_idx], c[cal_idx],
                        problem.x_test, problem.c_test)


def run_split_baseline(
    problem: Problem,
    spec: ProcedureSpec,
    q: float,
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """One-shot runner for the ``base_*`` sample-splitting baselines."""
    if not spec.kind.startswith("base_"):
        raise ValueError(f"run_split_baseline expects a base_* kind, got {spec.kind!r}")
    return run_procedure(problem, spec, q, rng)


def run_procedure(
    problem: Problem,
    spec: ProcedureSpec,
    q: float | None = None,
    rng: int | np.random.Generator | None = None,
) -> SelectionOutcome:
    """Prepare and select in one step (see :func:`prepare_procedure`)."""
    if q is None:
        q = spec.q
    if q is None:
        raise ValueError("no nominal FDR level: pass q or set it on the ProcedureSpec")
    gen = as_generator(rng if rng is not None else spec.seed)
    return prepare_procedure(problem, spec, gen).select(q, gen)
