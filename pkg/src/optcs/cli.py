"""Command-line entry points, CSV ingestion, and report serialization.

Two subcommands:

* ``optcs simulate --config cfg.json`` -- replicated synthetic experiments.
  Writes ``results.csv`` (one row per procedure, q, replication),
  ``summary.json`` (means, standard errors, resolved configuration), and
  report figures under ``figures/``.
* ``optcs select --config cfg.json`` -- run one procedure on real data read
  from CSV files and write the selection as ``selection.json``.

CSV interchange format: UTF-8, header required, ``.`` decimal, no index
column.  Labeled data uses columns ``x_1..x_d, y, c``; test data uses
``x_1..x_d, c``.  The feature dimension is inferred from the header.
Indices in all reports are 1-based.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import DataSplit, Problem, ScoreConfig
from .models import TrainerSpec
from .mtest import PRUNE_MODES
from .procedures import CandidateSpec, ProcedureSpec, run_procedure
from .simlab import BANK_NAMES, DgpSpec, X_RANGE_NOTE, candidate_bank, run_experiment

__all__ = ["main", "cmd_simulate", "cmd_select", "read_labeled_csv", "read_test_csv",
           "write_problem_csv"]


class ConfigError(ValueError):
    """Invalid run configuration or input data."""


# ---------------------------------------------------------------------------
# CSV ingestion / emission


def _feature_columns(header: list[str]) -> int:
    d = 0
    while f"x_{d + 1}" in header:
        d += 1
    if d == 0:
        raise ConfigError("no feature columns found (expected x_1, x_2, ...)")
    return d


def _read_rows(path: str | Path, required: list[str]) -> tuple[int, list[dict]]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigError(f"{path}: empty file, header required")
        header = list(reader.fieldnames)
        d = _feature_columns(header)
        for col in required:
            if col not in header:
                raise ConfigError(f"{path}: missing column {col!r}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return d, rows


def _parse_float(path, row_idx, col, raw) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: row {row_idx + 1}, column {col!r}: bad value {raw!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{path}: row {row_idx + 1}, column {col!r}: non-finite value")
    return value


def _rows_to_arrays(path, rows, d, cols: list[str]):
    names = [f"x_{j + 1}" for j in range(d)] + cols
    out = np.empty((len(rows), len(names)))
    for i, row in enumerate(rows):
        for j, name in enumerate(names):
            out[i, j] = _parse_float(path, i, name, row.get(name))
    return out[:, :d], {c: out[:, d + k] for k, c in enumerate(cols)}


def read_labeled_csv(path: str | Path):
    """Read labeled data (columns ``x_1..x_d, y, c``) as arrays."""
    d, rows = _read_rows(path, ["y", "c"])
    X, cols = _rows_to_arrays(path, rows, d, ["y", "c"])
    return X, cols["y"], cols["c"]


def read_test_csv(path: str | Path):
    """Read test data (columns ``x_1..x_d, c``) as arrays."""
    d, rows = _read_rows(path, ["c"])
    X, cols = _rows_to_arrays(path, rows, d, ["c"])
    return X, cols["c"]


def ingest_problem(labeled_path, test_path, n1: int = 0) -> Problem:
    X, y, c = read_labeled_csv(labeled_path)
    Xt, ct = read_test_csv(test_path)
    if Xt.shape[1] != X.shape[1]:
        raise ConfigError(
            f"dimension mismatch: labeled d={X.shape[1]}, test d={Xt.shape[1]}"
        )
    return Problem.from_arrays(X, y, c, Xt, ct, n1=n1)


def write_problem_csv(problem: Problem, labeled_path, test_path):
    """Emit a problem as the CSV pair ingested by ``select`` (full precision)."""
    d = problem.d
    with open(labeled_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{j + 1}" for j in range(d)] + ["y", "c"])
        x, y, c = problem.x_labeled, problem.y_labeled, problem.c_labeled
        for i in range(len(y)):
            writer.writerow([repr(float(v)) for v in x[i]] + [repr(float(y[i])), repr(float(c[i]))])
    with open(test_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{j + 1}" for j in range(d)] + ["c"])
        for i in range(problem.m):
            writer.writerow(
                [repr(float(v)) for v in problem.x_test[i]] + [repr(float(problem.c_test[i]))]
            )


# ---------------------------------------------------------------------------
# Config parsing


def _parse_candidate(obj: dict) -> CandidateSpec:
    try:
        trainer = obj["trainer"]
        score = obj["score"]
    except KeyError as err:
        raise ConfigError(f"candidate needs 'trainer' and 'score': {obj}") from err
    tspec = TrainerSpec(trainer["family"], trainer.get("hyperparams", {}),
                        trainer.get("seed"))
    sspec = ScoreConfig(score["kind"], score.get("big_m", 100.0),
                        score.get("quantile_level"))
    return CandidateSpec(tspec, sspec)


def _parse_candidates(obj, d: int) -> tuple[CandidateSpec, ...]:
    if isinstance(obj, str):
        return candidate_bank(obj, d)
    if isinstance(obj, dict) and "bank" in obj:
        if obj["bank"] not in BANK_NAMES:
            raise ConfigError(f"unknown candidate bank {obj['bank']!r}")
        return candidate_bank(obj["bank"], d, seed=int(obj.get("seed", 0)))
    return tuple(_parse_candidate(c) for c in obj)


def _parse_procedure(obj: dict, d: int, default_prune: str | None) -> ProcedureSpec:
    try:
        kind = obj["kind"]
    except KeyError as err:
        raise ConfigError(f"procedure needs a 'kind': {obj}") from err
    ratios = obj.get("split_ratios")
    return ProcedureSpec(
        kind=kind,
        name=obj.get("name"),
        candidates=_parse_candidates(obj.get("candidates", ()), d),
        prune=obj.get("prune", default_prune or "homo"),
        q=obj.get("q"),
        oversample=obj.get("oversample"),
        split_ratios=tuple(ratios) if ratios else None,
        seed=obj.get("seed"),
        randomized_ties=bool(obj.get("randomized_ties", False)),
        sep_mode=obj.get("sep_mode", "relaxed_bh"),
    )


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path}: {err}") from err


def _check_q_grid(q_grid):
    if not q_grid:
        raise ConfigError("empty q grid")
    for q in q_grid:
        if not 0 < float(q) < 1:
            raise ConfigError(f"q must be in (0, 1), got {q}")
    return [float(q) for q in q_grid]


def _spec_to_dict(spec: ProcedureSpec) -> dict:
    return {
        "kind": spec.kind,
        "name": spec.label,
        "prune": spec.prune,
        "oversample": spec.effective_oversample(),
        "split_ratios": list(spec.split_ratios) if spec.split_ratios else None,
        "randomized_ties": spec.randomized_ties,
        "sep_mode": spec.sep_mode,
        "n_candidates": len(spec.candidates),
        "candidates": [
            {
                "trainer": {"family": c.trainer.family,
                            "hyperparams": {k: (list(v) if isinstance(v, tuple) else v)
                                            for k, v in c.trainer.hyperparams.items()},
                            "seed": c.trainer.seed},
                "score": {"kind": c.score.kind, "big_m": c.score.big_m,
                          "quantile_level": c.score.quantile_level},
            }
            for c in spec.candidates
        ],
    }


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(config: dict, out_dir: str | Path, figures: bool = True,
                 workers: int = 1) -> Path:
    """Run a replicated experiment and write results.csv / summary.json."""
    try:
        dgp_cfg = dict(config["dgp"])
        split_cfg = dict(config["split"])
    except KeyError as err:
        raise ConfigError(f"simulate config needs {err} section") from err
    dgp = DgpSpec(**dgp_cfg)
    split = DataSplit(**split_cfg)
    q_grid = _check_q_grid(config.get("q_grid") or [config.get("q", 0.1)])
    reps = int(config.get("reps", 100))
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    seed = int(config.get("seed", 0))
    default_prune = config.get("prune")
    if default_prune is not None and default_prune not in PRUNE_MODES:
        raise ConfigError(f"unknown prune mode {default_prune!r}")
    proc_cfgs = config.get("procedures")
    if not proc_cfgs:
        raise ConfigError("simulate config needs a nonempty 'procedures' list")
    procedures = [_parse_procedure(p, dgp.d, default_prune) for p in proc_cfgs]
    labels = [p.label for p in procedures]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate procedure names: {labels}")

    reports = run_experiment(dgp, split, procedures, q_grid, reps, seed, workers=workers)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    with open(results_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["procedure", "q", "rep", "fdr", "power", "n_selected"])
        for report in reports:
            for r in report.per_rep:
                writer.writerow([
                    report.procedure, repr(report.q), r.rep + 1,
                    repr(r.fdr), repr(r.power), r.n_selected,
                ])

    summary = {
        "version": __version__,
        "command": "simulate",
        "config": {
            "dgp": {"family": dgp.family, "d": dgp.d, "sigma": dgp.sigma,
                    "nu": dgp.nu, "theta_every": dgp.theta_every},
            "split": {"n1": split.n1, "n2": split.n2, "m": split.m},
            "q_grid": q_grid,
            "reps": reps,
            "seed": seed,
            "workers": workers,
            "procedures": [_spec_to_dict(p) for p in procedures],
        },
        "metadata": {"x_range_note": X_RANGE_NOTE},
        "results": [
            {
                "procedure": r.procedure,
                "q": r.q,
                "mean_fdr": r.mean_fdr,
                "stderr_fdr": r.stderr_fdr,
                "mean_power": r.mean_power,
                "stderr_power": r.stderr_power,
                "mean_selected": r.mean_selected,
                "reps": len(r.per_rep),
                "n_h1_empty": r.n_h1_empty,
            }
            for r in reports
        ],
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if figures:
        from .figures import render_report_figures

        render_report_figures(reports, out_dir / "figures")
    return results_path


def cmd_select(config: dict, out_dir: str | Path) -> Path:
    """Run one procedure on CSV data and write selection.json."""
    for key in ("labeled_csv", "test_csv", "procedure"):
        if key not in config:
            raise ConfigError(f"select config needs {key!r}")
    n1 = int(config.get("n1", 0))
    problem = ingest_problem(config["labeled_csv"], config["test_csv"], n1=n1)
    spec = _parse_procedure(dict(config["procedure"]), problem.d, config.get("prune"))
    q = config.get("q", spec.q)
    if q is None:
        raise ConfigError("select config needs a nominal level 'q'")
    q = float(q)
    if not 0 < q < 1:
        raise ConfigError(f"q must be in (0, 1), got {q}")
    seed = int(config.get("seed", 0))

    outcome = run_procedure(problem, spec, q, seed)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": __version__,
        "command": "select",
        "q": q,
        "seed": seed,
        "n1": n1,
        "n_labeled": problem.n1 + problem.n2,
        "m": problem.m,
        "d": problem.d,
        "procedure": _spec_to_dict(spec),
        "selected": sorted(j + 1 for j in outcome.selected),
        "r_star": outcome.r_star,
        "pvalues": [float(v) for v in outcome.pvalues],
        "aux_sizes": [float(v) for v in outcome.aux_sizes],
        "selected_models": (
            None if outcome.selected_models is None
            else [int(k) + 1 for k in outcome.selected_models]
        ),
    }
    path = out_dir / "selection.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optcs",
        description="FDR-controlled selection of test samples with large unobserved labels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "select"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--q", help="override: nominal level(s), comma-separated")
        p.add_argument("--seed", type=int, help="override: master seed")
        p.add_argument("--prune", choices=PRUNE_MODES, help="override: pruning mode")
        p.add_argument("--out", default=".", help="output directory")
        if name == "simulate":
            p.add_argument("--reps", type=int, help="override: number of replications")
            p.add_argument("--workers", type=int, help="override: parallel workers")
            p.add_argument("--no-figures", action="store_true",
                           help="skip figure rendering")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        if args.prune is not None:
            config["prune"] = args.prune
        if args.command == "simulate":
            if args.q is not None:
                config["q_grid"] = [float(v) for v in args.q.split(",")]
            if args.reps is not None:
                config["reps"] = args.reps
            workers = args.workers if args.workers is not None else int(config.get("workers", 1))
            figures = not args.no_figures and bool(config.get("figures", True))
            path = cmd_simulate(config, args.out, figures=figures, workers=workers)
        else:
            if args.q is not None:
                config["q"] = float(args.q)
            path = cmd_select(config, args.out)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
