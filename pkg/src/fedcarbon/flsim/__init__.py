"""Desk-scale federated training simulator."""

from .data import Dataset, Shard, make_synthetic_dataset, partition, train_validation_split
from .model import OneHiddenLayer, SoftmaxRegression, build_model, cross_entropy, proximal_objective, softmax
from .train import (
    SeedSummary,
    TrainingHyper,
    TrainingOutcome,
    consensus_step,
    fa_aggregate,
    local_optimize,
    run_training,
    summarize,
)

__all__ = [
    "Dataset", "Shard", "make_synthetic_dataset", "partition", "train_validation_split",
    "OneHiddenLayer", "SoftmaxRegression", "build_model", "cross_entropy", "proximal_objective", "softmax",
    "SeedSummary", "TrainingHyper", "TrainingOutcome", "consensus_step", "fa_aggregate",
    "local_optimize", "run_training", "summarize",
]
