"""Finite-sample FDR-controlled selection of test samples with large
unobserved labels, with data-driven model optimization.

The library selects test points whose unobserved response exceeds a
per-sample threshold while controlling the false discovery rate, using
conformal p-values built from clipped conformity scores.  Model choice can be
optimized without sacrificing validity: per-test-point selection over
pre-fitted candidates, full-data leave-one-out training, or both combined.
A simulation lab and a CLI reproduce synthetic benchmark experiments.
"""

from .core import (
    DataSplit,
    LabeledSample,
    Problem,
    ScoreConfig,
    SelectionOutcome,
    TestSample,
    validate_problem,
)
from .models import FittedModel, TrainerSpec, oversample_balance, train
from .mtest import PRUNE_MODES, bh, fdr_decomposition_bound, optcs_select
from .procedures import (
    CandidateSpec,
    ProcedureSpec,
    prepare_procedure,
    reduce_to_binary,
    run_greedy,
    run_optcs_full,
    run_optcs_full_msel,
    run_optcs_full_sep,
    run_optcs_msel,
    run_procedure,
    run_scs,
    run_split_baseline,
)
from .pvalues import (
    conformal_pvalue,
    conformal_pvalue_randomized,
    modified_pvalues_for_j,
    pvalues_from_matrix,
)
from .scores import (
    ScoreFunction,
    clipped_score,
    generate_scores_fixed,
    generate_scores_full,
    generate_scores_full_per_candidate,
    generate_scores_msel,
)
from .simlab import (
    DgpSpec,
    ExperimentReport,
    candidate_bank,
    compute_metrics,
    run_experiment,
    sample_dgp,
)

__version__ = "0.1.0"
