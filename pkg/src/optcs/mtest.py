"""Benjamini-Hochberg and the calibrated multiple-testing step with pruning.

``bh`` is the classic step-up procedure.  ``optcs_select`` generalizes it:
each test point gets an individual threshold ``s_j = q * R_j / m`` from its
auxiliary selection size ``R_j``, and a second-stage pruning filter
``xi_j * R_j <= r*`` restores FDR control under arbitrary p-value dependence.
Pruning modes: ``hete`` draws i.i.d. uniform ``xi_j``, ``homo`` shares a
single uniform draw, ``dtm`` fixes ``xi_j = 1``.
"""

from __future__ import annotations

import numpy as np

from ._rng import as_generator
from .core import SelectionOutcome

__all__ = [
    "PRUNE_MODES",
    "bh",
    "bh_rstar",
    "optcs_select",
    "fdr_decomposition_bound",
]

PRUNE_MODES = ("hete", "homo", "dtm")


def _check_q(q: float):
    if not 0 < q < 1:
        raise ValueError(f"nominal FDR level q must be in (0, 1), got {q}")


def bh_rstar(pvalues: np.ndarray, q: float) -> int:
    """Largest ``r`` with at least ``r`` p-values at or below ``q * r / m``."""
    p = np.asarray(pvalues, dtype=float)
    _check_q(q)
    m = p.size
    if m == 0:
        raise ValueError("empty p-value vector")
    s = np.sort(p)
    ok = s <= q * np.arange(1, m + 1) / m
    if not ok.any():
        return 0
    return int(m - np.argmax(ok[::-1]))


def bh(pvalues: np.ndarray, q: float) -> frozenset[int]:
    """Benjamini-Hochberg selection set (0-based indices)."""
    p = np.asarray(pvalues, dtype=float)
    r = bh_rstar(p, q)
    if r == 0:
        return frozenset()
    return frozenset(np.flatnonzero(p <= q * r / p.size).tolist())


def bh_rstar_rows(pmat: np.ndarray, q: float) -> np.ndarray:
    """Row-wise BH selection sizes for a ``(J, m)`` p-value matrix."""
    pmat = np.asarray(pmat, dtype=float)
    _check_q(q)
    J, m = pmat.shape
    s = np.sort(pmat, axis=1)
    ok = s <= q * np.arange(1, m + 1) / m
    any_ok = ok.any(axis=1)
    last = m - np.argmax(ok[:, ::-1], axis=1)
    return np.where(any_ok, last, 0).astype(int)


def optcs_select(
    pvalues: np.ndarray,
    aux_sizes: np.ndarray,
    q: float,
    mode: str = "homo",
    rng: int | np.random.Generator | None = None,
    *,
    xi: np.ndarray | None = None,
    selected_models: np.ndarray | None = None,
) -> SelectionOutcome:
    """Calibrated selection from p-values and auxiliary selection sizes.

    Selects ``{j : p_j <= q R_j / m,  xi_j R_j <= r*,  p_j <= q r* / m}``
    where ``r*`` is the largest ``r`` such that at least ``r`` test points
    satisfy all three conditions at that ``r``.  The last condition caps the
    selection at the plain BH threshold, which keeps the output a subset of
    the BH selection set under every pruning mode (it never binds for
    ``dtm``, where the pruning condition already implies it).

    ``xi`` may be passed explicitly to replay or share pruning draws;
    otherwise it is drawn from ``rng`` per ``mode``.
    """
    p = np.asarray(pvalues, dtype=float)
    aux = np.asarray(aux_sizes, dtype=float)
    _check_q(q)
    m = p.size
    if aux.shape != p.shape:
        raise ValueError("pvalues and aux_sizes must have the same length")
    if not np.all(np.isfinite(aux)) or np.any(aux < 0):
        raise ValueError("aux_sizes must be finite and nonnegative")
    if mode not in PRUNE_MODES:
        raise ValueError(f"unknown pruning mode {mode!r}; expected one of {PRUNE_MODES}")

    if xi is None:
        gen = as_generator(rng)
        if mode == "hete":
            xi = gen.uniform(size=m)
        elif mode == "homo":
            xi = np.full(m, gen.uniform())
        else:
            xi = np.ones(m)
    else:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != p.shape:
            raise ValueError("xi must have one entry per test point")

    first = p <= q * aux / m
    pruned_size = xi * aux
    # r* = max{r : count(r) >= r}; r = 0 is vacuous.  count(r) uses the same
    # three conditions as the final set, evaluated at that r.
    r_grid = np.arange(m + 1)
    hits = first[None, :] & (pruned_size[None, :] <= r_grid[:, None]) \
        & (p[None, :] <= q * r_grid[:, None] / m)
    counts = hits.sum(axis=1)
    r_star = int(np.flatnonzero(counts >= r_grid).max())
    selected = frozenset(
        np.flatnonzero(first & (pruned_size <= r_star) & (p <= q * r_star / m)).tolist()
    )
    return SelectionOutcome(
        pvalues=p,
        aux_sizes=aux,
        xi=xi,
        r_star=r_star,
        selected=selected,
        selected_models=selected_models,
    )


def fdr_decomposition_bound(
    pvalues: np.ndarray,
    aux_sizes: np.ndarray,
    null_mask: np.ndarray,
    q: float,
) -> float:
    """Diagnostic upper bound ``sum_j 1{p_j <= q R_j / m, j null} / R_j``.

    Requires ground-truth null indicators, so it is for simulation analysis
    only.  Terms with ``R_j = 0`` contribute nothing (their first-stage
    threshold is 0, which no p-value can reach).
    """
    p = np.asarray(pvalues, dtype=float)
    aux = np.asarray(aux_sizes, dtype=float)
    null = np.asarray(null_mask, dtype=bool)
    _check_q(q)
    m = p.size
    hit = (p <= q * aux / m) & null & (aux > 0)
    return float(np.sum(1.0 / aux[hit]))
