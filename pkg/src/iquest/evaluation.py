"""Dataset loading, Hit@1 scoring, and batch evaluation.

Datasets are JSON-Lines records with ``id``, ``question``,
``topic_entity``, and a non-empty ``answers`` alias list. Hit@1 compares
the predicted string against every alias after a frozen normalization
(lowercase, trim, collapse whitespace, strip surrounding quotes and one
trailing period); per-question failures score 0 and never abort the batch.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .encoding import Encoder
from .kg import EntityId, KnowledgeGraph
from .llm import ChatClient
from .pipeline import (
    PipelineConfig,
    PipelineError,
    ReasoningTrace,
    answer_question,
    write_trace,
)
from .scorer import ScorerParams


class DatasetError(ValueError):
    """Malformed dataset line; message carries the line number."""


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    question: str
    topic_entity: EntityId
    answers: tuple[str, ...]


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Parse and validate a JSON-Lines dataset, preserving file order."""
    records: list[DatasetRecord] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            for key in ("id", "question", "topic_entity", "answers"):
                if key not in doc:
                    raise DatasetError(f"{path}:{line_no}: missing field {key!r}")
            answers = doc["answers"]
            if not isinstance(answers, list) or not answers:
                raise DatasetError(f"{path}:{line_no}: 'answers' must be a non-empty list")
            record = DatasetRecord(
                id=str(doc["id"]), question=str(doc["question"]),
                topic_entity=str(doc["topic_entity"]),
                answers=tuple(str(a) for a in answers))
            if record.id in seen_ids:
                raise DatasetError(f"{path}:{line_no}: duplicate id {record.id!r}")
            seen_ids.add(record.id)
            records.append(record)
    return records


_WS_RE = re.compile(r"\s+")


def normalize_answer(text: str) -> str:
    """Frozen Hit@1 normalization; keep in sync with the documented rules."""
    out = _WS_RE.sub(" ", text.strip().lower())
    if len(out) >= 2 and out[0] == out[-1] and out[0] in ("'", '"'):
        out = out[1:-1].strip()
    if out.endswith("."):
        out = out[:-1].rstrip()
    return out


def hit_at_1(predicted: str, golds: Sequence[str]) -> int:
    """1 iff the normalized prediction equals any normalized gold alias."""
    if not golds:
        raise ValueError("golds must be non-empty")
    norm = normalize_answer(predicted)
    return int(any(norm == normalize_answer(g) for g in golds))


@dataclass
class QuestionResult:
    id: str
    predicted: str
    hit: int
    llm_calls: int
    runtime_s: float
    error: str | None = None

    def to_dict(self) -> dict:
        doc = {
            "id": self.id,
            "predicted": self.predicted,
            "hit": self.hit,
            "llm_calls": self.llm_calls,
            "runtime_s": round(self.runtime_s, 3),
        }
        if self.error is not None:
            doc["error"] = self.error
        return doc


@dataclass
class EvalReport:
    n: int
    hit_at_1: float
    mean_llm_calls: float
    mean_runtime_s: float
    per_question: list[QuestionResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "hit_at_1": self.hit_at_1,
            "mean_llm_calls": self.mean_llm_calls,
            "mean_runtime_s": round(self.mean_runtime_s, 3),
            "per_question": [r.to_dict() for r in self.per_question],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def to_table(self) -> str:
        """Fixed-width text table, one row per question plus a summary line."""
        header = f"{'id':<16} {'hit':>3} {'calls':>5} {'runtime_s':>9}  predicted"
        rows = [header, "-" * len(header)]
        for r in self.per_question:
            predicted = r.predicted if r.error is None else f"<error: {r.error}>"
            rows.append(f"{r.id:<16} {r.hit:>3} {r.llm_calls:>5} {r.runtime_s:>9.3f}  {predicted}")
        rows.append("-" * len(header))
        rows.append(f"n={self.n}  hit@1={self.hit_at_1:.4f}  "
                    f"mean_calls={self.mean_llm_calls:.2f}  "
                    f"mean_runtime_s={self.mean_runtime_s:.3f}")
        return "\n".join(rows) + "\n"


# Builds a fresh per-run chat client pair (iqg, ae) for a dataset record.
ClientFactory = Callable[[DatasetRecord], tuple[ChatClient, ChatClient]]


def evaluate(dataset: Sequence[DatasetRecord], g: KnowledgeGraph, scorer: ScorerParams,
             client_factory: ClientFactory, encoder: Encoder,
             cfg: PipelineConfig = PipelineConfig(), parallel: int = 1,
             trace_dir: str | Path | None = None) -> EvalReport:
    """Run the pipeline once per record and aggregate Hit@1, calls, runtime.

    Per-question failures are recorded (hit 0, error string) without
    aborting the batch. ``parallel`` > 1 runs questions concurrently; the
    report stays ordered by dataset position either way.
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

    def run_one(record: DatasetRecord) -> QuestionResult:
        iqg_client, ae_client = client_factory(record)
        start = time.monotonic()
        trace: ReasoningTrace | None = None
        try:
            predicted, trace = answer_question(
                record.question, record.topic_entity, g, scorer,
                iqg_client, ae_client, encoder, cfg)
            result = QuestionResult(
                id=record.id, predicted=predicted,
                hit=hit_at_1(predicted, record.answers),
                llm_calls=trace.total_llm_calls, runtime_s=trace.wall_time_s)
        except PipelineError as exc:
            trace = exc.trace
            result = QuestionResult(
                id=record.id, predicted="", hit=0,
                llm_calls=exc.trace.total_llm_calls,
                runtime_s=time.monotonic() - start, error=str(exc))
        if trace_dir is not None and trace is not None:
            write_trace(trace, Path(trace_dir) / f"{record.id}.json")
        return result

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(run_one, dataset))
    else:
        results = [run_one(r) for r in dataset]

    n = len(results)
    return EvalReport(
        n=n,
        hit_at_1=sum(r.hit for r in results) / n,
        mean_llm_calls=sum(r.llm_calls for r in results) / n,
        mean_runtime_s=sum(r.runtime_s for r in results) / n,
        per_question=results,
    )
