"""Scorer parameter container, seeded initialization, JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ScorerDims:
    d_in: int = 768
    d_gnn: int = 128
    d_mlp: int = 128

    def __post_init__(self):
        for name in ("d_in", "d_gnn", "d_mlp"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class ScorerParams:
    """Aggregation weight ``W`` plus the two-layer relevance MLP.

    Shapes: W (d_gnn, 2*d_in), W1 (d_mlp, d_gnn + d_in), b1 (d_mlp,),
    W2 (2, d_mlp), b2 (2,).
    """

    dims: ScorerDims
    W: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        d = self.dims
        expected = {
            "W": (d.d_gnn, 2 * d.d_in),
            "W1": (d.d_mlp, d.d_gnn + d.d_in),
            "b1": (d.d_mlp,),
            "W2": (2, d.d_mlp),
            "b2": (2,),
        }
        for name, shape in expected.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)

    def copy(self) -> "ScorerParams":
        return ScorerParams(self.dims, self.W.copy(), self.W1.copy(),
                            self.b1.copy(), self.W2.copy(), self.b2.copy())


def init_params(dims: ScorerDims, rng: np.random.Generator) -> ScorerParams:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer, biases included."""

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return ScorerParams(
        dims=dims,
        W=uniform((dims.d_gnn, 2 * dims.d_in), 2 * dims.d_in),
        W1=uniform((dims.d_mlp, dims.d_gnn + dims.d_in), dims.d_gnn + dims.d_in),
        b1=uniform((dims.d_mlp,), dims.d_gnn + dims.d_in),
        W2=uniform((2, dims.d_mlp), dims.d_mlp),
        b2=uniform((2,), dims.d_mlp),
    )


def save_params(p: ScorerParams, path: str | Path) -> None:
    doc = {
        "dims": {"d_in": p.dims.d_in, "d_gnn": p.dims.d_gnn, "d_mlp": p.dims.d_mlp},
        "W": p.W.tolist(),
        "W1": p.W1.tolist(),
        "b1": p.b1.tolist(),
        "W2": p.W2.tolist(),
        "b2": p.b2.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_params(path: str | Path) -> ScorerParams:
    """Load a params JSON, validating shapes against its declared dims."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        dims = ScorerDims(**doc["dims"])
        return ScorerParams(
            dims=dims,
            W=np.asarray(doc["W"], dtype=np.float64),
            W1=np.asarray(doc["W1"], dtype=np.float64),
            b1=np.asarray(doc["b1"], dtype=np.float64),
            W2=np.asarray(doc["W2"], dtype=np.float64),
            b2=np.asarray(doc["b2"], dtype=np.float64),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scorer params file {path}: {exc}") from exc
