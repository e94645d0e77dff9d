"""Candidate scoring over the graph frontier, top-k selection, training data.

Candidate enumeration walks every 1-hop edge of the frontier, verbalizes
each neighbor with its connecting relation, looks one hop further for the
neighbor's own 2-hop neighborhood, and runs the aggregate-and-classify
forward pass in one batch. All orderings are deterministic so traces and
tests reproduce exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..encoding import Encoder, node_text
from ..kg import EntityId, KnowledgeGraph, NeighborEdge, label, neighbors_1hop, neighbors_2hop
from . import kernels
from .model import TrainConfig, TrainingExample, neighbor_mean
from .params import ScorerParams


@dataclass(frozen=True)
class ScoredCandidate:
    entity: EntityId
    via_edge: NeighborEdge
    score: float


def _candidate_text(g: KnowledgeGraph, edge: NeighborEdge) -> str:
    return node_text(label(g, edge.neighbor), edge.relation, edge.direction)


def score_candidates(g: KnowledgeGraph, frontier: Iterable[EntityId], subquestion: str,
                     encoder: Encoder, p: ScorerParams) -> list[ScoredCandidate]:
    """Score every (entity, edge) candidate reachable 1 hop from the frontier.

    Output is deduplicated per (entity, via_edge) and ordered by descending
    score with ties broken by entity id, then edge. A frontier whose
    entities have no edges yields an empty list; an empty frontier is a
    caller error.
    """
    frontier = sorted(set(frontier))
    if not frontier:
        raise ValueError("frontier must be non-empty")

    edges: set[NeighborEdge] = set()
    for e in frontier:
        edges.update(neighbors_1hop(g, e))
    if not edges:
        return []
    ordered = sorted(edges)

    # One encoder call covers the sub-question, every candidate text, and
    # every distinct 2-hop neighbor label.
    two_hop: dict[EntityId, list[EntityId]] = {}
    for edge in ordered:
        if edge.neighbor not in two_hop:
            two_hop[edge.neighbor] = neighbors_2hop(g, edge.neighbor)
    hop2_ids = sorted({n for nbrs in two_hop.values() for n in nbrs})
    texts = [subquestion] + [_candidate_text(g, e) for e in ordered] + [label(g, n) for n in hop2_ids]
    vectors = encoder.encode(texts)

    d = encoder.dimension
    q_emb = vectors[0]
    hop2_emb = dict(zip(hop2_ids, vectors[1 + len(ordered):]))

    CM = np.empty((len(ordered), 2 * d), dtype=np.float64)
    for i, edge in enumerate(ordered):
        CM[i, :d] = vectors[1 + i]
        CM[i, d:] = neighbor_mean([hop2_emb[n] for n in two_hop[edge.neighbor]], d)
    H_hat = kernels.aggregate_batch(p.W, CM)
    H = np.concatenate([H_hat, np.tile(q_emb, (len(ordered), 1))], axis=1)
    probs = kernels.mlp_batch(p.W1, p.b1, p.W2, p.b2, H)

    scored = [ScoredCandidate(edge.neighbor, edge, float(probs[i, 1]))
              for i, edge in enumerate(ordered)]
    scored.sort(key=lambda c: (-c.score, c.entity, c.via_edge))
    return scored


def select_topk(candidates: Sequence[ScoredCandidate], k: int) -> list[EntityId]:
    """The k highest-scoring unique entities (an entity's best edge counts).

    Ordered by descending score, ties by entity id; returns everything when
    fewer than k unique entities exist.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    best: dict[EntityId, float] = {}
    for c in candidates:
        if c.entity not in best or c.score > best[c.entity]:
            best[c.entity] = c.score
    ranked = sorted(best.items(), key=lambda item: (-item[1], item[0]))
    return [entity for entity, _ in ranked[:k]]


def build_training_set(g: KnowledgeGraph,
                       pairs: Sequence[tuple[str, EntityId, EntityId]],
                       encoder: Encoder, cfg: TrainConfig) -> list[TrainingExample]:
    """Single-hop (question, topic, answer) pairs -> labeled examples.

    Each pair yields one positive (the answer as candidate) and
    ``cfg.negative_ratio`` seeded-uniform negatives from the topic's other
    1-hop neighbors, falling back to random graph entities when the topic
    has no other neighbor. Pairs whose answer is not a 1-hop neighbor of
    the topic are rejected with their index.
    """
    rng = np.random.default_rng(cfg.seed)
    all_entities = g.entities

    # (entity_id, center_text) candidates per pair, positives first so the
    # RNG consumption order is fixed.
    chosen: list[tuple[str, EntityId, str, int]] = []  # (question, entity, center_text, label)
    for idx, (question, topic, answer) in enumerate(pairs):
        edges = neighbors_1hop(g, topic)
        by_neighbor: dict[EntityId, NeighborEdge] = {}
        for edge in edges:
            by_neighbor.setdefault(edge.neighbor, edge)
        if answer not in by_neighbor:
            raise ValueError(
                f"pair {idx}: answer {answer!r} is not a 1-hop neighbor of topic {topic!r}")
        chosen.append((question, answer, _candidate_text(g, by_neighbor[answer]), 1))

        others = sorted(set(by_neighbor) - {answer})
        if others:
            picks = rng.choice(len(others), size=cfg.negative_ratio, replace=True)
            negatives = [others[int(i)] for i in picks]
            chosen.extend((question, n, _candidate_text(g, by_neighbor[n]), 0) for n in negatives)
        else:
            pool = [e for e in all_entities if e != answer]
            picks = rng.choice(len(pool), size=cfg.negative_ratio, replace=True)
            chosen.extend((question, pool[int(i)], label(g, pool[int(i)]), 0) for i in picks)

    two_hop = {entity: neighbors_2hop(g, entity) for _, entity, _, _ in chosen}
    hop2_ids = sorted({n for nbrs in two_hop.values() for n in nbrs})
    questions = sorted({q for q, _, _, _ in chosen})
    texts = questions + [text for _, _, text, _ in chosen] + [label(g, n) for n in hop2_ids]
    vectors = encoder.encode(texts)

    q_emb = dict(zip(questions, vectors[:len(questions)]))
    center_emb = vectors[len(questions):len(questions) + len(chosen)]
    hop2_emb = dict(zip(hop2_ids, vectors[len(questions) + len(chosen):]))

    return [
        TrainingExample(
            question_emb=q_emb[question],
            center_emb=center_emb[i],
            neighbor_embs=[hop2_emb[n] for n in two_hop[entity]],
            label=lab,
        )
        for i, (question, entity, _, lab) in enumerate(chosen)
    ]
