"""Command-line interface.

Subcommands: ``answer`` (one question), ``eval`` (batch with a report),
``train-scorer`` (build a training set and fit the relevance scorer),
``render-sparql`` (print the neighbor-retrieval template), ``trace-show``
(pretty-print a trace file). Exit codes: 0 success, 1 input error,
2 backend failure.

Backends are selected with ``--llm scripted:<path>|http:<base-url>`` and
``--encoder hash:<dim>|http:<url>``; a JSON ``--config`` file can supply
any flag's default, with explicit flags winning.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .encoding import EncoderError, HashEncoder, RemoteEncoder
from .evaluation import DatasetError, evaluate, load_dataset
from .kg import Direction, GraphFormatError, load_graph, render_sparql
from .llm import ChatError, HttpChatClient, ScriptedChatClient
from .pipeline import PipelineConfig, PipelineError, answer_question, read_trace, write_trace
from .scorer import (
    ScorerDims,
    TrainConfig,
    build_training_set,
    load_params,
    save_params,
    train,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BACKEND = 2


class CliInputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # Input errors (including unknown flags) exit 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _parse_encoder(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "hash":
        try:
            return HashEncoder(int(arg or "768"))
        except ValueError as exc:
            raise CliInputError(f"bad hash encoder dimension {arg!r}") from exc
    if kind == "http":
        if not arg:
            raise CliInputError("http encoder requires a URL, e.g. http:http://localhost:8600")
        return RemoteEncoder(arg)
    raise CliInputError(f"unknown encoder backend {spec!r} (expected hash:<dim> or http:<url>)")


def _parse_llm(spec: str):
    """Returns (kind, arg) where kind is 'scripted' or 'http'."""
    kind, _, arg = spec.partition(":")
    if kind not in ("scripted", "http") or not arg:
        raise CliInputError(
            f"unknown llm backend {spec!r} (expected scripted:<path> or http:<base-url>)")
    return kind, arg


def _scripted_transcript_path(base: Path, record_id: str) -> Path:
    if base.is_dir():
        return base / f"{record_id}.json"
    return base


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliInputError(f"config file {path} must hold a JSON object")
    return doc


def _option(args, config: dict, name: str, default=None):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _build_common(args):
    """Graph, scorer, encoder, llm spec, and pipeline config for answer/eval."""
    config = _load_config(getattr(args, "config", None))
    kg_path = _option(args, config, "kg")
    if not kg_path:
        raise CliInputError("--kg is required (or set 'kg' in --config)")
    labels_path = _option(args, config, "labels")
    g = load_graph(kg_path, labels_path)

    scorer_path = _option(args, config, "scorer")
    if not scorer_path:
        raise CliInputError("--scorer is required (or set 'scorer' in --config)")
    scorer = load_params(scorer_path)

    encoder = _parse_encoder(_option(args, config, "encoder", "hash:768"))
    llm_spec = _option(args, config, "llm")
    if not llm_spec:
        raise CliInputError("--llm is required (or set 'llm' in --config)")
    llm_kind, llm_arg = _parse_llm(llm_spec)

    cfg = PipelineConfig(
        max_iter=int(_option(args, config, "max-iter", 5)),
        top_k=int(_option(args, config, "top-k", 3)),
        separate_sufficiency_call=bool(
            getattr(args, "separate_sufficiency_call", False)
            or config.get("separate-sufficiency-call", False)),
    )
    return g, scorer, encoder, (llm_kind, llm_arg), cfg


def _cmd_answer(args) -> int:
    g, scorer, encoder, (llm_kind, llm_arg), cfg = _build_common(args)
    if not args.question or not args.topic:
        raise CliInputError("answer requires --question and --topic")
    if llm_kind == "scripted":
        path = Path(llm_arg)
        if path.is_dir():
            raise CliInputError("answer requires a single scripted transcript file, not a directory")
        client = ScriptedChatClient.from_file(path)
        iqg_client = ae_client = client
    else:
        iqg_client = ae_client = HttpChatClient(llm_arg)

    answer, trace = answer_question(args.question, args.topic, g, scorer,
                                    iqg_client, ae_client, encoder, cfg)
    if args.trace_dir:
        Path(args.trace_dir).mkdir(parents=True, exist_ok=True)
        write_trace(trace, Path(args.trace_dir) / "trace.json")
    print(answer)
    return EXIT_OK


def _cmd_eval(args) -> int:
    g, scorer, encoder, (llm_kind, llm_arg), cfg = _build_common(args)
    if not args.dataset:
        raise CliInputError("eval requires --dataset")
    dataset = load_dataset(args.dataset)
    if not dataset:
        raise CliInputError(f"dataset {args.dataset} is empty")

    if llm_kind == "scripted":
        base = Path(llm_arg)

        def factory(record):
            client = ScriptedChatClient.from_file(_scripted_transcript_path(base, record.id))
            return client, client
    else:
        shared = HttpChatClient(llm_arg)

        def factory(record):
            return shared, shared

    report = evaluate(dataset, g, scorer, factory, encoder, cfg,
                      parallel=args.parallel, trace_dir=args.trace_dir)
    out_path = Path(args.report) if args.report else None
    if out_path:
        out_path.write_text(report.to_json(), encoding="utf-8")
    sys.stdout.write(report.to_table())
    return EXIT_OK


def _load_pairs(path: str) -> list[tuple[str, str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                pairs.append((str(doc["question"]), str(doc["topic_entity"]), str(doc["answer"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise CliInputError(f"{path}:{line_no}: malformed training pair: {exc}") from exc
    if not pairs:
        raise CliInputError(f"no training pairs in {path}")
    return pairs


def _cmd_train_scorer(args) -> int:
    if not args.kg or not args.pairs or not args.out:
        raise CliInputError("train-scorer requires --kg, --pairs and --out")
    g = load_graph(args.kg, args.labels)
    encoder = _parse_encoder(args.encoder or "hash:768")
    cfg = TrainConfig(learning_rate=args.learning_rate, epochs=args.epochs,
                      batch_size=args.batch_size, seed=args.seed,
                      negative_ratio=args.negative_ratio)
    pairs = _load_pairs(args.pairs)
    examples = build_training_set(g, pairs, encoder, cfg)
    dims = ScorerDims(d_in=encoder.dimension, d_gnn=args.gnn_dim, d_mlp=args.mlp_dim)
    params = train(examples, cfg, dims=dims)
    save_params(params, args.out)
    print(f"trained on {len(examples)} examples "
          f"({sum(1 for e in examples if e.label == 1)} positive); wrote {args.out}")
    return EXIT_OK


def _cmd_render_sparql(args) -> int:
    direction = Direction.OUTGOING if args.direction == "out" else Direction.INCOMING
    print(render_sparql(args.entity, direction, args.relation))
    return EXIT_OK


def _cmd_trace_show(args) -> int:
    try:
        doc = read_trace(args.trace)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read trace {args.trace}: {exc}") from exc
    print(f"question: {doc.get('question', '')}")
    print(f"topic entity: {doc.get('topic_entity', '')}")
    for it in doc.get("iterations", []):
        print(f"\niteration {it['index']}: {it['subquestion']}")
        print(f"  frontier before: {', '.join(it['frontier_before']) or '(empty)'}")
        for cand in it["candidates"]:
            marker = "*" if cand["entity"] in it["selected"] else " "
            print(f"  {marker} {cand['score']:.4f}  {cand['entity']}  "
                  f"[{cand['direction']} {cand['relation']}]")
        outcome = it["outcome"]
        suffix = " (internal knowledge)" if outcome["used_internal_knowledge"] else ""
        print(f"  answer: {outcome['answer']}{suffix}  sufficient: "
              f"{'yes' if outcome['sufficient'] else 'no'}")
    print(f"\nfinal answer: {doc.get('final_answer', '')}")
    calls = doc.get("llm_calls_by_role", {})
    total = sum(calls.values())
    detail = ", ".join(f"{role}={n}" for role, n in sorted(calls.items()))
    print(f"llm calls: {total} ({detail})")
    print(f"wall time: {doc.get('wall_time_s', 0.0):.3f}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iquest", description="Question-guided knowledge-graph QA engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_backend_flags(p, with_llm=True):
        p.add_argument("--kg", help="triples TSV file")
        p.add_argument("--labels", help="entity labels TSV file")
        p.add_argument("--scorer", help="scorer params JSON")
        if with_llm:
            p.add_argument("--llm", help="scripted:<path> or http:<base-url>")
        p.add_argument("--encoder", help="hash:<dim> or http:<url> (default hash:768)")
        p.add_argument("--config", help="JSON file of flag defaults")
        p.add_argument("--max-iter", type=int, help="iteration cap (default 5)")
        p.add_argument("--top-k", type=int, help="frontier size (default 3)")
        p.add_argument("--trace-dir", help="write per-question traces here")
        p.add_argument("--separate-sufficiency-call", action="store_true",
                       help="issue sufficiency checks as their own chat calls")
        p.add_argument("--seed", type=int, default=0, help="seed for seeded subcommands")

    p_answer = sub.add_parser("answer", help="answer a single question")
    p_answer.add_argument("--question", help="the natural-language question")
    p_answer.add_argument("--topic", help="topic entity id to start from")
    add_backend_flags(p_answer)
    p_answer.set_defaults(func=_cmd_answer)

    p_eval = sub.add_parser("eval", help="evaluate a JSONL dataset")
    p_eval.add_argument("--dataset", help="JSONL dataset path")
    p_eval.add_argument("--report", help="write the JSON report here")
    p_eval.add_argument("--parallel", type=int, default=1, help="concurrent questions (default 1)")
    add_backend_flags(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_train = sub.add_parser("train-scorer", help="fit the relevance scorer")
    p_train.add_argument("--kg", help="triples TSV file")
    p_train.add_argument("--labels", help="entity labels TSV file")
    p_train.add_argument("--pairs", help="JSONL of {question, topic_entity, answer}")
    p_train.add_argument("--out", help="output params JSON path")
    p_train.add_argument("--encoder", help="hash:<dim> or http:<url> (default hash:768)")
    p_train.add_argument("--learning-rate", type=float, default=1e-3)
    p_train.add_argument("--epochs", type=int, default=20)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--negative-ratio", type=int, default=1)
    p_train.add_argument("--gnn-dim", type=int, default=128)
    p_train.add_argument("--mlp-dim", type=int, default=128)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=_cmd_train_scorer)

    p_sparql = sub.add_parser("render-sparql", help="print the neighbor SPARQL template")
    p_sparql.add_argument("--entity", required=True)
    p_sparql.add_argument("--relation", default=None)
    p_sparql.add_argument("--direction", choices=("out", "in"), default="out")
    p_sparql.set_defaults(func=_cmd_render_sparql)

    p_show = sub.add_parser("trace-show", help="pretty-print a trace file")
    p_show.add_argument("trace", help="trace JSON path")
    p_show.set_defaults(func=_cmd_trace_show)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliInputError, DatasetError, GraphFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ChatError, EncoderError, PipelineError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
