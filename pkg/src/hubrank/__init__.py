"""Transferability scoring and ranking of pre-trained model hubs.

The core estimate is the normalized maximum log evidence of task labels
under a Bayesian linear model on extracted features; model hubs are ranked
by it, and the converged per-class heads double as frozen teachers for
multi-teacher tuning.
"""

__version__ = "0.1.0"

from .evidence import (
    BACKENDS,
    ConvergenceReport,
    EvidenceSolution,
    FeatureMatrix,
    GridSpec,
    LabelVector,
    ProjectedLabels,
    SvdFactors,
    check_convergence,
    decompose,
    evaluate_evidence,
    fixed_point_map,
    maximize_evidence,
    maximize_evidence_fixed_point,
    maximize_evidence_mackay,
    oracle_maximize,
    project_labels,
)
from .logme import LogMeReport, TaskLabels, compute_logme, compute_logme_regression_1d
from .predictive import (
    EnsembleTarget,
    PredictiveHead,
    b_tuning_loss,
    build_head,
    ensemble_target,
    kd_loss,
    predictive_distribution,
)
from .ranking import RankReport, ScorePair, kendall_tau, rank_hub, weighted_tau

__all__ = [
    "BACKENDS",
    "ConvergenceReport",
    "EnsembleTarget",
    "EvidenceSolution",
    "FeatureMatrix",
    "GridSpec",
    "LabelVector",
    "LogMeReport",
    "PredictiveHead",
    "ProjectedLabels",
    "RankReport",
    "ScorePair",
    "SvdFactors",
    "TaskLabels",
    "b_tuning_loss",
    "build_head",
    "check_convergence",
    "compute_logme",
    "compute_logme_regression_1d",
    "decompose",
    "ensemble_target",
    "evaluate_evidence",
    "fixed_point_map",
    "kd_loss",
    "kendall_tau",
    "maximize_evidence",
    "maximize_evidence_fixed_point",
    "maximize_evidence_mackay",
    "oracle_maximize",
    "predictive_distribution",
    "project_labels",
    "rank_hub",
    "weighted_tau",
]
