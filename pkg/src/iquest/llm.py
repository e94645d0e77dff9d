"""The two LLM roles behind a pluggable chat client.

The question-guidance role ("iqg") produces the next sub-question or
declares decomposition done; the answer-extraction role ("ae") answers
sub-questions from evidence with a sufficiency verdict and synthesizes the
final answer. Replies use strict line prefixes (SUBQUESTION:/DONE,
ANSWER:/SUFFICIENT:/SOURCE:, FINAL:) so parsing is deterministic; each
operation retries a malformed reply once, then fails with the raw reply
attached.

Two clients ship: a scripted one replaying canned per-role transcripts
(the offline test path) and an HTTP chat-completions client.
"""

from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

import requests

ROLE_IQG = "iqg"
ROLE_AE = "ae"


class ChatError(RuntimeError):
    """Chat transport or transcript failure."""


class ScriptExhaustedError(ChatError):
    """A scripted role queue ran out of replies."""


class PromptExpectationError(ChatError):
    """A scripted entry's expected substring is missing from the prompt."""


class MalformedReplyError(ChatError):
    """Reply violated the required line format even after one retry."""

    def __init__(self, message: str, raw_reply: str):
        super().__init__(f"{message}; raw reply: {raw_reply!r}")
        self.raw_reply = raw_reply


class ChatRole(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: ChatRole
    content: str


@dataclass(frozen=True)
class ContextEntry:
    subquestion: str
    subanswer: str

    def __post_init__(self):
        if not self.subquestion or not self.subanswer:
            raise ValueError("context entries must have non-empty question and answer")


class Context:
    """Append-only history of (sub-question, sub-answer) pairs."""

    def __init__(self, entries: Sequence[ContextEntry] = ()):
        self._entries: list[ContextEntry] = list(entries)

    @property
    def entries(self) -> tuple[ContextEntry, ...]:
        return tuple(self._entries)

    def append(self, entry: ContextEntry) -> None:
        self._entries.append(entry)

    def subquestions(self) -> set[str]:
        return {e.subquestion for e in self._entries}

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class SubAnswerOutcome:
    answer: str
    sufficient: bool
    used_internal_knowledge: bool


class ChatClient(Protocol):
    def chat(self, messages: Sequence[ChatMessage], role: str) -> str: ...

    @property
    def calls_by_role(self) -> dict[str, int]: ...


class _CallCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self._counts: dict[str, int] = {}

    def bump(self, role: str) -> int:
        with self._lock:
            self._counts[role] = self._counts.get(role, 0) + 1
            return self._counts[role]

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)


@dataclass
class ScriptEntry:
    reply: str
    expect: str | None = None


class ScriptedChatClient:
    """Replays per-role FIFO transcripts; use one client per pipeline run.

    Transcript shape: ``{"iqg": [...], "ae": [...]}`` where each entry is a
    reply string or ``{"reply": ..., "expect": <substring the prompt must
    contain>}``. Exhausting a queue or missing an expected substring is an
    error.
    """

    def __init__(self, transcript: dict):
        self._queues: dict[str, list[ScriptEntry]] = {}
        for role, entries in transcript.items():
            parsed = []
            for entry in entries:
                if isinstance(entry, str):
                    parsed.append(ScriptEntry(reply=entry))
                else:
                    parsed.append(ScriptEntry(reply=entry["reply"], expect=entry.get("expect")))
            self._queues[role] = parsed
        self._next: dict[str, int] = {role: 0 for role in self._queues}
        self._counter = _CallCounter()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChatClient":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def chat(self, messages: Sequence[ChatMessage], role: str) -> str:
        index = self._next.get(role, 0)
        queue = self._queues.get(role, [])
        if index >= len(queue):
            raise ScriptExhaustedError(
                f"scripted transcript exhausted for role {role!r} at call {index + 1}")
        entry = queue[index]
        self._next[role] = index + 1
        self._counter.bump(role)
        if entry.expect is not None:
            prompt = "\n".join(m.content for m in messages)
            if entry.expect not in prompt:
                raise PromptExpectationError(
                    f"role {role!r} call {index + 1}: expected substring "
                    f"{entry.expect!r} not found in prompt")
        return entry.reply

    @property
    def calls_by_role(self) -> dict[str, int]:
        return self._counter.snapshot()


class HttpChatClient:
    """Chat-completions client; bearer auth comes from IQUEST_LLM_TOKEN."""

    def __init__(self, base_url: str, model: str = "gpt-4o", temperature: float = 0.0,
                 timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self._counter = _CallCounter()

    def chat(self, messages: Sequence[ChatMessage], role: str) -> str:
        self._counter.bump(role)
        headers = {}
        token = os.environ.get("IQUEST_LLM_TOKEN")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": self.model,
            "messages": [{"role": m.role.value, "content": m.content} for m in messages],
            "temperature": self.temperature,
        }
        try:
            resp = requests.post(f"{self.base_url}/chat/completions", json=payload,
                                 headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ChatError(f"chat endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ChatError(f"chat endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ChatError(f"malformed chat response body: {exc}") from exc

    @property
    def calls_by_role(self) -> dict[str, int]:
        return self._counter.snapshot()


# ---------------------------------------------------------------------------
# Prompt rendering


class PromptLibrary:
    """Named templates with {{placeholder}} substitution.

    Defaults ship as package data; pass a directory to override any subset
    of them without reinstalling.
    """

    NAMES = ("iqg", "ae_answer", "ae_answer_internal", "ae_final", "ae_sufficiency")

    def __init__(self, override_dir: str | Path | None = None):
        self._templates: dict[str, str] = {}
        for name in self.NAMES:
            override = Path(override_dir) / f"{name}.txt" if override_dir else None
            if override is not None and override.exists():
                self._templates[name] = override.read_text(encoding="utf-8")
            else:
                self._templates[name] = (
                    resources.files("iquest.prompts").joinpath(f"{name}.txt").read_text("utf-8")
                )

    def render(self, name: str, **subs: str) -> str:
        text = self._templates[name]
        for key, value in subs.items():
            text = text.replace("{{" + key + "}}", value)
        return text


DEFAULT_PROMPTS = PromptLibrary()

_SYSTEM = ChatMessage(ChatRole.SYSTEM,
                      "You answer questions with the help of a knowledge graph. "
                      "Follow the required reply format exactly.")

_RETRY_NOTE = ChatMessage(ChatRole.USER,
                          "Your reply did not follow the required format. "
                          "Reply again using exactly the format requested above.")


def render_context(c: Context) -> str:
    if len(c) == 0:
        return "(none yet)"
    lines = []
    for i, entry in enumerate(c.entries, start=1):
        lines.append(f"{i}. Q: {entry.subquestion}")
        lines.append(f"   A: {entry.subanswer}")
    return "\n".join(lines)


def render_evidence(evidence: Sequence[tuple[str, str, float]]) -> str:
    return "\n".join(f"- {name}; {edge_text}; score {score:.4f}"
                     for name, edge_text, score in evidence)


def _find_prefixed(reply: str, prefix: str) -> str | None:
    for line in reply.splitlines():
        stripped = line.strip()
        if stripped.upper().startswith(prefix + ":"):
            return stripped[len(prefix) + 1:].strip()
    return None


def _chat_with_retry(client: ChatClient, role: str, messages: list[ChatMessage], parse):
    """Issue one chat call, retry once on a malformed reply (two calls max)."""
    reply = client.chat(messages, role)
    parsed = parse(reply)
    if parsed is not None:
        return parsed
    retry_messages = messages + [ChatMessage(ChatRole.ASSISTANT, reply), _RETRY_NOTE]
    retry_reply = client.chat(retry_messages, role)
    parsed = parse(retry_reply)
    if parsed is not None:
        return parsed
    raise MalformedReplyError("reply violated the required format twice", retry_reply)


_DONE = object()


def generate_subquestion(client: ChatClient, question: str, context: Context,
                         prompts: PromptLibrary = DEFAULT_PROMPTS) -> str | None:
    """Next sub-question from the guidance role, or None when it replies DONE."""
    prompt = prompts.render("iqg", question=question, context=render_context(context))
    messages = [_SYSTEM, ChatMessage(ChatRole.USER, prompt)]

    def parse(reply: str):
        if any(line.strip().upper() == "DONE" for line in reply.splitlines()):
            return _DONE
        sub = _find_prefixed(reply, "SUBQUESTION")
        return sub if sub else None

    result = _chat_with_retry(client, ROLE_IQG, messages, parse)
    return None if result is _DONE else result


def answer_subquestion(client: ChatClient, subquestion: str,
                       evidence: Sequence[tuple[str, str, float]],
                       prompts: PromptLibrary = DEFAULT_PROMPTS) -> SubAnswerOutcome:
    """Answer one sub-question from scored evidence (or internal knowledge).

    Empty evidence selects the internal-knowledge prompt variant used when
    the graph had nothing to offer.
    """
    if evidence:
        prompt = prompts.render("ae_answer", question=subquestion,
                                evidence=render_evidence(evidence))
    else:
        prompt = prompts.render("ae_answer_internal", question=subquestion)
    messages = [_SYSTEM, ChatMessage(ChatRole.USER, prompt)]

    def parse(reply: str):
        answer = _find_prefixed(reply, "ANSWER")
        sufficient = _find_prefixed(reply, "SUFFICIENT")
        source = _find_prefixed(reply, "SOURCE")
        if not answer or sufficient is None or source is None:
            return None
        sufficient = sufficient.strip().lower()
        source = source.strip().lower()
        if sufficient not in ("yes", "no") or source not in ("kg", "internal"):
            return None
        return SubAnswerOutcome(answer=answer, sufficient=sufficient == "yes",
                                used_internal_knowledge=source == "internal")

    return _chat_with_retry(client, ROLE_AE, messages, parse)


def final_answer(client: ChatClient, question: str, context: Context,
                 prompts: PromptLibrary = DEFAULT_PROMPTS) -> str:
    """Synthesize the final answer from the accumulated context."""
    prompt = prompts.render("ae_final", question=question, context=render_context(context))
    messages = [_SYSTEM, ChatMessage(ChatRole.USER, prompt)]

    def parse(reply: str):
        return _find_prefixed(reply, "FINAL") or None

    return _chat_with_retry(client, ROLE_AE, messages, parse)


def check_sufficiency(client: ChatClient, question: str, context: Context,
                      prompts: PromptLibrary = DEFAULT_PROMPTS) -> bool:
    """Standalone sufficiency verdict (the optional separate-call mode)."""
    prompt = prompts.render("ae_sufficiency", question=question, context=render_context(context))
    messages = [_SYSTEM, ChatMessage(ChatRole.USER, prompt)]

    def parse(reply: str):
        verdict = _find_prefixed(reply, "SUFFICIENT")
        if verdict is None or verdict.strip().lower() not in ("yes", "no"):
            return None
        return verdict.strip().lower() == "yes"

    return _chat_with_retry(client, ROLE_AE, messages, parse)
