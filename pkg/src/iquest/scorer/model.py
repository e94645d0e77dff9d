"""Forward pass, loss, analytic gradients, and training for the relevance scorer.

The model updates each candidate's representation with the mean of its
2-hop neighborhood (ReLU(W.[center || mean])), concatenates the result
with the sub-question embedding, and classifies relevant/irrelevant with a
two-layer softmax MLP. Training is plain seeded mini-batch gradient
descent, single-threaded so runs reproduce exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .params import ScorerDims, ScorerParams, init_params


@dataclass
class TrainingExample:
    question_emb: np.ndarray
    center_emb: np.ndarray
    neighbor_embs: list[np.ndarray]
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    negative_ratio: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.negative_ratio < 1:
            raise ValueError("epochs, batch_size and negative_ratio must be >= 1")


@dataclass
class Gradients:
    W: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray


def neighbor_mean(neighbors: Sequence[np.ndarray], d_in: int) -> np.ndarray:
    """Mean-pooled neighborhood; the empty neighborhood pools to zero."""
    if not neighbors:
        return np.zeros(d_in, dtype=np.float64)
    return np.mean(np.asarray(neighbors, dtype=np.float64), axis=0)


def _check_dim(vec: np.ndarray, d: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(vec, dtype=np.float64)
    if arr.shape != (d,):
        raise ValueError(f"{what} has shape {arr.shape}, expected ({d},)")
    return arr


def aggregate(center: np.ndarray, neighbors: Sequence[np.ndarray], p: ScorerParams) -> np.ndarray:
    """ReLU(W . [center || mean(neighbors)]) -> updated candidate representation."""
    center = _check_dim(center, p.dims.d_in, "center embedding")
    nbrs = [_check_dim(v, p.dims.d_in, "neighbor embedding") for v in neighbors]
    x = np.concatenate([center, neighbor_mean(nbrs, p.dims.d_in)])
    return kernels.aggregate_batch(p.W, x[np.newaxis, :])[0]


def score(h_hat: np.ndarray, question_emb: np.ndarray, p: ScorerParams) -> tuple[np.ndarray, float]:
    """Relevance probabilities for one candidate.

    Returns ([p_irrelevant, p_relevant], score) where score is the
    relevant-class probability.
    """
    h_hat = _check_dim(h_hat, p.dims.d_gnn, "aggregated representation")
    question_emb = _check_dim(question_emb, p.dims.d_in, "question embedding")
    h = np.concatenate([h_hat, question_emb])
    probs = kernels.mlp_batch(p.W1, p.b1, p.W2, p.b2, h[np.newaxis, :])[0]
    if not np.all(np.isfinite(probs)):
        raise FloatingPointError("non-finite classifier output; scorer params are corrupted")
    return probs, float(probs[1])


@dataclass
class _PackedBatch:
    """Examples flattened to the array layout the kernels consume."""

    CM: np.ndarray      # (n, 2*d_in) [center || neighbor mean]
    Q: np.ndarray       # (n, d_in)
    labels: np.ndarray  # (n,) int64
    perm: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @classmethod
    def pack(cls, batch: Sequence[TrainingExample], dims: ScorerDims) -> "_PackedBatch":
        if not batch:
            raise ValueError("batch must be non-empty")
        n, d = len(batch), dims.d_in
        CM = np.empty((n, 2 * d), dtype=np.float64)
        Q = np.empty((n, d), dtype=np.float64)
        labels = np.empty(n, dtype=np.int64)
        for i, ex in enumerate(batch):
            CM[i, :d] = _check_dim(ex.center_emb, d, "center embedding")
            CM[i, d:] = neighbor_mean(
                [_check_dim(v, d, "neighbor embedding") for v in ex.neighbor_embs], d)
            Q[i] = _check_dim(ex.question_emb, d, "question embedding")
            labels[i] = ex.label
        return cls(CM, Q, labels)

    def take(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.ascontiguousarray(self.CM[idx]),
                np.ascontiguousarray(self.Q[idx]),
                np.ascontiguousarray(self.labels[idx]))


def batch_probs(batch: Sequence[TrainingExample], p: ScorerParams) -> np.ndarray:
    """Full forward pass for every example; rows are [p_irrelevant, p_relevant]."""
    packed = _PackedBatch.pack(batch, p.dims)
    H_hat = kernels.aggregate_batch(p.W, packed.CM)
    H = np.concatenate([H_hat, packed.Q], axis=1)
    return kernels.mlp_batch(p.W1, p.b1, p.W2, p.b2, H)


def loss(batch: Sequence[TrainingExample], p: ScorerParams) -> float:
    """Mean one-hot cross-entropy over the batch (log clamped at 1e-12)."""
    packed = _PackedBatch.pack(batch, p.dims)
    value, *_ = kernels.loss_and_grads(p.W, p.W1, p.b1, p.W2, p.b2,
                                       packed.CM, packed.Q, packed.labels)
    return float(value)


def grad(batch: Sequence[TrainingExample], p: ScorerParams) -> Gradients:
    """Exact analytic gradients of the batch loss (ReLU subgradient at 0 is 0)."""
    packed = _PackedBatch.pack(batch, p.dims)
    _, dW, dW1, db1, dW2, db2 = kernels.loss_and_grads(
        p.W, p.W1, p.b1, p.W2, p.b2, packed.CM, packed.Q, packed.labels)
    return Gradients(dW, dW1, db1, dW2, db2)


def train(dataset: Sequence[TrainingExample], cfg: TrainConfig,
          dims: ScorerDims | None = None,
          init: ScorerParams | None = None) -> ScorerParams:
    """Mini-batch gradient descent over a seeded shuffle; fully reproducible.

    When ``dims`` is omitted it is inferred from the dataset's embedding
    width with the default hidden sizes. ``init`` overrides the seeded
    uniform initialization (its dims win).
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    if init is not None:
        params = init.copy()
    else:
        if dims is None:
            dims = ScorerDims(d_in=int(np.asarray(dataset[0].question_emb).shape[0]))
        params = init_params(dims, rng)

    packed = _PackedBatch.pack(dataset, params.dims)
    n = len(dataset)
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            CM, Q, labels = packed.take(order[start:start + cfg.batch_size])
            _, dW, dW1, db1, dW2, db2 = kernels.loss_and_grads(
                params.W, params.W1, params.b1, params.W2, params.b2, CM, Q, labels)
            params.W -= lr * dW
            params.W1 -= lr * dW1
            params.b1 -= lr * db1
            params.W2 -= lr * dW2
            params.b2 -= lr * db2
    return params
