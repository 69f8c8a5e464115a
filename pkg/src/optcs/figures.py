"""Render experiment reports as figures alongside the delimited output.

Two figures per experiment: empirical FDR against the nominal level (with the
diagonal for reference) and empirical power, both as functions of q with one
line per procedure and Monte-Carlo standard-error bars.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simlab import ExperimentReport

__all__ = ["render_report_figures"]


def _series(reports: list[ExperimentReport]):
    by_proc: dict[str, list[ExperimentReport]] = {}
    for r in reports:
        by_proc.setdefault(r.procedure, []).append(r)
    for rows in by_proc.values():
        rows.sort(key=lambda r: r.q)
    return by_proc


def _plot(by_proc, value, err, ylabel, path, diagonal=False):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, rows in by_proc.items():
        qs = [r.q for r in rows]
        ax.errorbar(qs, [value(r) for r in rows], yerr=[err(r) for r in rows],
                    marker="o", markersize=3.5, capsize=2, label=name)
    if diagonal:
        lo = min(min(r.q for r in rows) for rows in by_proc.values())
        hi = max(max(r.q for r in rows) for rows in by_proc.values())
        ax.plot([lo, hi], [lo, hi], ls="--", color="gray", lw=1, label="nominal")
    ax.set_xlabel("nominal FDR level q")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figures(reports: list[ExperimentReport], out_dir: str | Path) -> list[Path]:
    """Write ``empirical_fdr.png`` and ``empirical_power.png`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_proc = _series(reports)
    fdr_path = out_dir / "empirical_fdr.png"
    power_path = out_dir / "empirical_power.png"
    _plot(by_proc, lambda r: r.mean_fdr, lambda r: r.stderr_fdr,
          "empirical FDR", fdr_path, diagonal=True)
    _plot(by_proc, lambda r: r.mean_power, lambda r: r.stderr_power,
          "empirical power", power_path)
    return [fdr_path, power_path]
