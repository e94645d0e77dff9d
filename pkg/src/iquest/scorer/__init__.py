"""Two-hop neighbor aggregation and relevance classification."""

from .candidates import ScoredCandidate, build_training_set, score_candidates, select_topk
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    Gradients,
    TrainConfig,
    TrainingExample,
    aggregate,
    batch_probs,
    grad,
    loss,
    score,
    train,
)
from .params import ScorerDims, ScorerParams, init_params, load_params, save_params

__all__ = [
    "KERNEL_BACKEND",
    "Gradients",
    "ScoredCandidate",
    "ScorerDims",
    "ScorerParams",
    "TrainConfig",
    "TrainingExample",
    "aggregate",
    "batch_probs",
    "build_training_set",
    "grad",
    "init_params",
    "load_params",
    "loss",
    "save_params",
    "score",
    "score_candidates",
    "select_topk",
    "train",
]
