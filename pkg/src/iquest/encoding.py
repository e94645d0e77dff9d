"""Text-to-vector encoders behind one exchangeable interface.

Two backends: a deterministic in-process hash encoder (token n-gram
feature hashing, L2-normalized) used by the offline test path, and a
client for a remote embedding service speaking the ``POST /embed``
protocol. Both return one fixed-dimension float64 vector per input text,
in input order. Encoders are stateless after construction and safe to
share between threads.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from .kg import Direction

Embedding = np.ndarray


class EncoderError(RuntimeError):
    """Remote encoder unreachable, failed, or returned malformed output."""


@dataclass(frozen=True)
class EncoderConfig:
    """Backend selection: ``hash`` (in-process) or ``remote`` (HTTP service)."""

    dimension: int = 768
    backend: str = "hash"
    endpoint: str | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.backend not in ("hash", "remote"):
            raise ValueError(f"unknown encoder backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote encoder requires an endpoint URL")


class Encoder(Protocol):
    dimension: int

    def encode(self, texts: Sequence[str]) -> list[Embedding]: ...


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokenize(text: str) -> list[str]:
    tokens = _TOKEN_RE.findall(text.lower())
    # Token-free but non-empty text (e.g. punctuation) still gets a feature,
    # so only the empty string maps to the zero vector.
    if not tokens and text:
        tokens = [text]
    return tokens


class HashEncoder:
    """Deterministic fixed-seed feature-hashing encoder.

    Features are token unigrams and adjacent bigrams; each feature hashes
    (blake2b, so identical across processes and platforms) to a signed
    coordinate, and the accumulated vector is L2-normalized. The empty
    string encodes to the zero vector.
    """

    def __init__(self, dimension: int = 768):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension

    def encode(self, texts: Sequence[str]) -> list[Embedding]:
        return [self._encode_one(t) for t in texts]

    def _encode_one(self, text: str) -> Embedding:
        vec = np.zeros(self.dimension, dtype=np.float64)
        tokens = _tokenize(text)
        features = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        for feat in features:
            h = int.from_bytes(hashlib.blake2b(feat.encode("utf-8"), digest_size=8).digest(), "big")
            sign = 1.0 if h & 1 else -1.0
            vec[(h >> 1) % self.dimension] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec


class RemoteEncoder:
    """Client for the embedding service's ``POST <endpoint>/embed`` protocol.

    Embeddings pass through unchanged apart from a dimension check; the
    server owns pooling and model choice.
    """

    def __init__(self, endpoint: str, dimension: int = 768, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.dimension = dimension
        self.timeout = timeout

    def encode(self, texts: Sequence[str]) -> list[Embedding]:
        try:
            resp = requests.post(
                f"{self.endpoint}/embed", json={"texts": list(texts)}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise EncoderError(f"embedding service unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise EncoderError(f"embedding service returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            vectors = [np.asarray(v, dtype=np.float64) for v in body["embeddings"]]
            reported = int(body["dimension"])
        except (ValueError, KeyError, TypeError) as exc:
            raise EncoderError(f"malformed embedding response: {exc}") from exc
        if reported != self.dimension:
            raise EncoderError(
                f"embedding service dimension {reported} != configured {self.dimension}"
            )
        if len(vectors) != len(texts):
            raise EncoderError(f"expected {len(texts)} embeddings, got {len(vectors)}")
        for v in vectors:
            if v.shape != (self.dimension,):
                raise EncoderError(f"embedding of shape {v.shape} != ({self.dimension},)")
            if not np.all(np.isfinite(v)):
                raise EncoderError("embedding contains non-finite values")
        return vectors


def build_encoder(cfg: EncoderConfig) -> Encoder:
    if cfg.backend == "hash":
        return HashEncoder(cfg.dimension)
    return RemoteEncoder(cfg.endpoint, cfg.dimension)


def node_text(label: str, relation_label: str, direction: Direction) -> str:
    """Canonical verbalization of a neighbor reached over one edge.

    Outgoing edges read ``relation -> neighbor``, incoming ones
    ``neighbor -> relation``, keeping the relation context the relevance
    scorer conditions on.
    """
    if direction is Direction.OUTGOING:
        return f"{relation_label} → {label}"
    return f"{label} → {relation_label}"
