"""Hypotheses, cross-validation, random search, greedy ensembling and full runs."""
from .hypotheses import HYPOTHESES, HypothesisConfig, hypothesis
from .run import FeatureState, RunReport, explain_to_dir, run, write_manifest
from .search import (
    DEFAULT_BUDGET_SECONDS,
    EnsembleDefinition,
    TrialRecord,
    cross_validate,
    greedy_ensemble,
    hpo_search,
    leaderboard,
    stratified_folds,
    trial_specs,
)

__all__ = [
    "DEFAULT_BUDGET_SECONDS",
    "EnsembleDefinition",
    "FeatureState",
    "HYPOTHESES",
    "HypothesisConfig",
    "RunReport",
    "TrialRecord",
    "cross_validate",
    "explain_to_dir",
    "greedy_ensemble",
    "hpo_search",
    "hypothesis",
    "leaderboard",
    "run",
    "stratified_folds",
    "trial_specs",
    "write_manifest",
]
