"""End-to-end question answering: iterate guidance, retrieval, selection,
sub-answering, and the sufficiency check, recording a full trace.

Each iteration asks the guidance role for a sub-question (DONE
short-circuits to synthesis), scores every 1-hop candidate of the frontier
with the two-hop-aware scorer, replaces the frontier with the top-k
entities, answers the sub-question over that evidence, appends to the
context, and stops once the answer role judges the context sufficient.
A run is strictly sequential; share graphs, params, and encoders across
runs but give each run its own scripted client.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from .encoding import Encoder, node_text
from .kg import EntityId, KnowledgeGraph, label
from .llm import (
    ChatClient,
    ChatError,
    Context,
    ContextEntry,
    DEFAULT_PROMPTS,
    PromptLibrary,
    SubAnswerOutcome,
    answer_subquestion,
    check_sufficiency,
    final_answer,
    generate_subquestion,
)
from .scorer import ScoredCandidate, ScorerParams, score_candidates, select_topk

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    max_iter: int = 5
    top_k: int = 3
    separate_sufficiency_call: bool = False

    def __post_init__(self):
        if self.max_iter < 1 or self.top_k < 1:
            raise ValueError("max_iter and top_k must be >= 1")


@dataclass
class IterationRecord:
    index: int
    subquestion: str
    frontier_before: list[EntityId]
    candidates: list[ScoredCandidate]
    selected: list[EntityId]
    outcome: SubAnswerOutcome

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "subquestion": self.subquestion,
            "frontier_before": list(self.frontier_before),
            "candidates": [
                {
                    "entity": c.entity,
                    "direction": c.via_edge.direction.value,
                    "relation": c.via_edge.relation,
                    "neighbor": c.via_edge.neighbor,
                    "score": c.score,
                }
                for c in self.candidates
            ],
            "selected": list(self.selected),
            "outcome": {
                "answer": self.outcome.answer,
                "sufficient": self.outcome.sufficient,
                "used_internal_knowledge": self.outcome.used_internal_knowledge,
            },
        }


@dataclass
class ReasoningTrace:
    question: str
    topic_entity: EntityId
    iterations: list[IterationRecord] = field(default_factory=list)
    final_answer: str = ""
    llm_calls_by_role: dict[str, int] = field(default_factory=dict)
    wall_time_s: float = 0.0

    @property
    def total_llm_calls(self) -> int:
        return sum(self.llm_calls_by_role.values())

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "topic_entity": self.topic_entity,
            "iterations": [it.to_dict() for it in self.iterations],
            "final_answer": self.final_answer,
            "llm_calls_by_role": dict(sorted(self.llm_calls_by_role.items())),
            "wall_time_s": round(self.wall_time_s, 3),
        }


class PipelineError(RuntimeError):
    """LLM failure mid-run; carries the partial trace for diagnosis."""

    def __init__(self, message: str, trace: ReasoningTrace):
        super().__init__(message)
        self.trace = trace


class _RunClient:
    """Per-run call counter around a (possibly shared) chat client.

    Underlying clients keep their own global counters; traces need the
    counts of one run only, which must stay exact even when several runs
    share one HTTP client concurrently.
    """

    def __init__(self, inner: ChatClient):
        self.inner = inner
        self.calls: dict[str, int] = {}

    def chat(self, messages, role: str) -> str:
        self.calls[role] = self.calls.get(role, 0) + 1
        return self.inner.chat(messages, role)

    @property
    def calls_by_role(self) -> dict[str, int]:
        return dict(self.calls)


def answer_question(question: str, topic: EntityId, g: KnowledgeGraph,
                    scorer: ScorerParams, iqg_client: ChatClient, ae_client: ChatClient,
                    encoder: Encoder, cfg: PipelineConfig = PipelineConfig(),
                    prompts: PromptLibrary = DEFAULT_PROMPTS) -> tuple[str, ReasoningTrace]:
    """Run the full loop for one question; returns (answer, trace).

    A topic missing from the graph is tolerated: the run proceeds with an
    empty frontier and the answer role falls back on internal knowledge.
    LLM failures raise PipelineError with the partial trace attached.
    """
    start = time.monotonic()
    iqg = _RunClient(iqg_client)
    ae = iqg if ae_client is iqg_client else _RunClient(ae_client)
    trace = ReasoningTrace(question=question, topic_entity=topic)

    def finish() -> None:
        calls = dict(iqg.calls)
        if ae is not iqg:
            for role, n in ae.calls.items():
                calls[role] = calls.get(role, 0) + n
        trace.llm_calls_by_role = calls
        trace.wall_time_s = time.monotonic() - start

    if topic not in g:
        logger.warning("topic entity %r not present in the graph; starting with an empty frontier",
                       topic)
        frontier: list[EntityId] = []
    else:
        frontier = [topic]

    context = Context()
    try:
        repeat_guard_used = False
        for index in range(1, cfg.max_iter + 1):
            sub = generate_subquestion(iqg, question, context, prompts)
            if sub is None:
                break
            if sub in context.subquestions():
                # One forced reprompt for a repeated sub-question; a second
                # repeat ends the loop instead of burning iterations.
                if repeat_guard_used:
                    logger.warning("sub-question repeated again; ending the loop early")
                    break
                repeat_guard_used = True
                logger.warning("repeated sub-question %r; reprompting once", sub)
                sub = generate_subquestion(iqg, question, context, prompts)
                if sub is None:
                    break
                if sub in context.subquestions():
                    logger.warning("reprompt repeated a sub-question; ending the loop early")
                    break

            frontier_before = list(frontier)
            if frontier:
                candidates = score_candidates(g, frontier, sub, encoder, scorer)
            else:
                candidates = []
            selected = select_topk(candidates, cfg.top_k) if candidates else []
            frontier = list(selected)

            best_edge: dict[EntityId, ScoredCandidate] = {}
            for c in candidates:
                if c.entity not in best_edge:  # candidates are score-sorted
                    best_edge[c.entity] = c
            evidence = [
                (label(g, e),
                 node_text(label(g, best_edge[e].via_edge.neighbor),
                           best_edge[e].via_edge.relation,
                           best_edge[e].via_edge.direction),
                 best_edge[e].score)
                for e in selected
            ]

            outcome = answer_subquestion(ae, sub, evidence, prompts)
            context.append(ContextEntry(subquestion=sub, subanswer=outcome.answer))
            trace.iterations.append(IterationRecord(
                index=index, subquestion=sub, frontier_before=frontier_before,
                candidates=candidates, selected=list(selected), outcome=outcome))

            if cfg.separate_sufficiency_call:
                if check_sufficiency(ae, question, context, prompts):
                    break
            elif outcome.sufficient:
                break

        answer = final_answer(ae, question, context, prompts)
        trace.final_answer = answer
    except ChatError as exc:
        finish()
        raise PipelineError(str(exc), trace) from exc

    finish()
    return answer, trace


def trace_to_json(trace: ReasoningTrace) -> str:
    """Canonical JSON (sorted keys, fixed float form): equal traces, equal bytes."""
    return json.dumps(trace.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_trace(trace: ReasoningTrace, path: str | Path) -> None:
    Path(path).write_text(trace_to_json(trace), encoding="utf-8")


def read_trace(path: str | Path) -> dict:
    """Trace file as a plain dict (the canonical JSON is the interchange form)."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
