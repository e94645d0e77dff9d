"""Acceptance suite: one test per criterion, at the stated tolerances.

Criteria a01..a10 exercise the engine offline (hash encoder + scripted
chat transcripts only). a11 talks to the companion embedding service over
HTTP and skips when that package has not been built.

A per-criterion pass/fail summary is printed at the end of the pytest run
(see pytest_terminal_summary in conftest.py).
"""

from __future__ import annotations

import json
import math
import shutil
import socket
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from iquest.cli import main
from iquest.encoding import HashEncoder, RemoteEncoder
from iquest.kg import load_graph
from iquest.llm import ScriptedChatClient
from iquest.pipeline import PipelineConfig, answer_question
from iquest.scorer import (
    ScorerDims,
    ScorerParams,
    TrainConfig,
    aggregate,
    batch_probs,
    grad,
    init_params,
    load_params,
    loss,
    score,
    score_candidates,
    select_topk,
    train,
)

import reference_impl as ref
from conftest import FIXTURES, make_separable_task, random_params, write_graph

REPO_ROOT = Path(__file__).resolve().parent.parent


# --- A1: call-count law ------------------------------------------------------

def test_a01_call_count_law():
    start = time.monotonic()
    g = load_graph(FIXTURES / "kg.tsv", FIXTURES / "labels.tsv")
    scorer = load_params(FIXTURES / "scorer.json")
    encoder = HashEncoder(64)
    dataset = {json.loads(line)["id"]: json.loads(line)
               for line in (FIXTURES / "dataset.jsonl").read_text().splitlines()}

    expected_calls = {"q1": 3, "q3": 5, "q5": 7}  # 1-, 2-, 3-hop
    for qid, expected in expected_calls.items():
        record = dataset[qid]
        client = ScriptedChatClient.from_file(FIXTURES / "transcripts" / f"{qid}.json")
        _, trace = answer_question(record["question"], record["topic_entity"], g, scorer,
                                   client, client, encoder, PipelineConfig())
        assert trace.total_llm_calls == expected, qid
        assert trace.total_llm_calls == 2 * len(trace.iterations) + 1
    assert time.monotonic() - start < 1.0


# --- A2: forward-pass oracle equivalence --------------------------------------

def test_a02_forward_oracle_equivalence():
    start = time.monotonic()
    rng = np.random.default_rng(20_240_601)
    for _ in range(200):
        d_in = int(rng.integers(1, 9))
        d_gnn = int(rng.integers(1, 7))
        d_mlp = int(rng.integers(1, 7))
        p = random_params(rng, d_in, d_gnn, d_mlp)
        center = rng.normal(size=d_in)
        neighbors = [rng.normal(size=d_in) for _ in range(int(rng.integers(0, 6)))]
        question = rng.normal(size=d_in)

        h_hat = aggregate(center, neighbors, p)
        probs, relevance = score(h_hat, question, p)
        ref_h, ref_probs = ref.forward(
            p.W.tolist(), p.W1.tolist(), p.b1.tolist(), p.W2.tolist(), p.b2.tolist(),
            center.tolist(), [v.tolist() for v in neighbors], question.tolist())
        assert np.max(np.abs(h_hat - np.array(ref_h))) <= 1e-9
        assert np.max(np.abs(probs - np.array(ref_probs))) <= 1e-9
        assert abs(relevance - ref_probs[1]) <= 1e-9
    assert time.monotonic() - start < 5.0


# --- A3: gradient correctness ---------------------------------------------------

def test_a03_gradient_matches_finite_differences():
    start = time.monotonic()
    rng = np.random.default_rng(7_331)
    eps, rtol = 1e-4, 1e-3
    from iquest.scorer.model import TrainingExample

    for _ in range(100):
        d_in = int(rng.integers(2, 5))
        p = random_params(rng, d_in, int(rng.integers(2, 4)), int(rng.integers(2, 4)))
        batch = [
            TrainingExample(
                question_emb=rng.normal(size=d_in),
                center_emb=rng.normal(size=d_in),
                neighbor_embs=[rng.normal(size=d_in)
                               for _ in range(int(rng.integers(0, 3)))],
                label=int(rng.integers(0, 2)))
            for _ in range(int(rng.integers(1, 4)))
        ]
        g = grad(batch, p)
        analytic = {"W": g.W, "W1": g.W1, "b1": g.b1, "W2": g.W2, "b2": g.b2}
        for name in ("W", "W1", "b1", "W2", "b2"):
            arr = getattr(p, name)
            flat, gflat = arr.ravel(), analytic[name].ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                lp = loss(batch, p)
                flat[i] = orig - eps
                lm = loss(batch, p)
                flat[i] = orig
                fd = (lp - lm) / (2 * eps)
                if abs(fd) < 1e-10 and abs(gflat[i]) < 1e-10:
                    continue
                assert abs(fd - gflat[i]) <= rtol * max(abs(fd), abs(gflat[i]), 1e-8)
    assert time.monotonic() - start < 30.0


# --- A4: trainability -------------------------------------------------------------

def test_a04_trainable_on_separable_task():
    start = time.monotonic()
    examples = make_separable_task(seed=2024, n=2000)
    train_set, held = examples[:1600], examples[1600:]
    dims = ScorerDims(d_in=16, d_gnn=32, d_mlp=32)
    cfg = TrainConfig(learning_rate=0.05, epochs=60, batch_size=32, seed=0)

    initial_loss = loss(held, init_params(dims, np.random.default_rng(cfg.seed)))
    params = train(train_set, cfg, dims=dims)
    final_loss = loss(held, params)

    probs = batch_probs(held, params)
    truth = np.array([e.label for e in held], dtype=bool)
    accuracy = float(((probs[:, 1] > 0.5) == truth).mean())
    assert accuracy >= 0.95  # brute-force logistic baseline reaches ~0.99
    assert final_loss < initial_loss
    assert time.monotonic() - start < 60.0


# --- A5: two-hop lookahead ----------------------------------------------------------

def test_a05_two_hop_lookahead_rescues_bridging_entity(tmp_path):
    start = time.monotonic()
    write_graph(tmp_path, [
        "m.t\tseries.installment\tm.bridge",
        "m.t\tseries.trivia\tm.b",
        "m.t\tseries.media\tm.c",
        "m.bridge\tcredits.person\tm.j",
        "m.b\tcatalog.item\tm.junk1",
        "m.c\tcommunity.group\tm.junk2",
    ])
    write_graph(tmp_path, [
        "m.t\tfranchise hub",
        "m.bridge\tsequel listing",
        "m.b\tfilm trivia",
        "m.c\tmusic video",
        "m.j\tcomposed film score music by john williams",
        "m.junk1\tmerchandise catalog",
        "m.junk2\tfan club",
    ], name="labels.tsv")
    g = load_graph(tmp_path / "kg.tsv", tmp_path / "labels.tsv")

    # The bridging entity's own text is weakly relevant to the sub-question;
    # its 2-hop neighbor matches it strongly. Params compute
    # h = [relu(q . center), relu(q . neighbor-mean)] and weight the
    # lookahead channel twice as much as the direct one.
    dim = 64
    encoder = HashEncoder(dim)
    subquestion = "who composed the film score music"
    (q_emb,) = encoder.encode([subquestion])

    W = np.zeros((2, 2 * dim))
    W[0, :dim] = q_emb
    W[1, dim:] = q_emb
    W1 = np.zeros((1, 2 + dim))
    W1[0, 0], W1[0, 1] = 1.0, 2.0
    full = ScorerParams(dims=ScorerDims(dim, 2, 1), W=W, W1=W1, b1=np.zeros(1),
                        W2=np.array([[0.0], [4.0]]), b2=np.zeros(2))
    degenerate = full.copy()
    degenerate.W[:, dim:] = 0.0  # no neighbor aggregation

    full_top2 = select_topk(score_candidates(g, ["m.t"], subquestion, encoder, full), 2)
    degen_top2 = select_topk(score_candidates(g, ["m.t"], subquestion, encoder, degenerate), 2)
    assert "m.bridge" in full_top2
    assert "m.bridge" not in degen_top2
    assert time.monotonic() - start < 5.0


# --- A6: selection oracle --------------------------------------------------------------

def test_a06_select_topk_equals_sort_oracle():
    start = time.monotonic()
    from iquest.kg import Direction, NeighborEdge
    from iquest.scorer import ScoredCandidate

    rng = np.random.default_rng(606)
    for _ in range(1000):
        n = int(rng.integers(1, 15))
        cands = [
            ScoredCandidate(f"e{int(rng.integers(0, 9))}",
                            NeighborEdge(Direction.OUTGOING, "r", "x"),
                            float(rng.choice([0.1, 0.3, 0.5, 0.7, 0.9])))
            for _ in range(n)
        ]
        k = int(rng.integers(1, 7))
        best: dict[str, float] = {}
        for c in cands:
            best[c.entity] = max(best.get(c.entity, -1.0), c.score)
        oracle = [e for e, _ in sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]
        assert select_topk(cands, k) == oracle
    assert time.monotonic() - start < 1.0


# --- A7: simplex and shift invariance ------------------------------------------------------

def test_a07_softmax_simplex_and_shift_invariance():
    rng = np.random.default_rng(707)
    for _ in range(200):
        p = random_params(rng, d_in=5, d_gnn=3, d_mlp=4)
        h_hat = rng.normal(size=3)
        question = rng.normal(size=5)
        probs, relevance = score(h_hat, question, p)
        assert probs[0] >= 0.0 and probs[1] >= 0.0
        assert abs(float(probs.sum()) - 1.0) <= 1e-9

        shifted = p.copy()
        shifted.b2 += float(rng.uniform(-30, 30))
        probs2, relevance2 = score(h_hat, question, shifted)
        assert np.max(np.abs(probs2 - probs)) <= 1e-9
        assert abs(relevance2 - relevance) <= 1e-9


# --- A8: end-to-end determinism --------------------------------------------------------------

def _mask_runtime(doc):
    if isinstance(doc, dict):
        return {k: (0.0 if k in ("runtime_s", "mean_runtime_s", "wall_time_s")
                    else _mask_runtime(v))
                for k, v in doc.items()}
    if isinstance(doc, list):
        return [_mask_runtime(v) for v in doc]
    return doc


def _run_eval(out_dir: Path) -> tuple[str, dict[str, str]]:
    report = out_dir / "report.json"
    traces = out_dir / "traces"
    code = main(["eval",
                 "--dataset", str(FIXTURES / "dataset.jsonl"),
                 "--kg", str(FIXTURES / "kg.tsv"),
                 "--labels", str(FIXTURES / "labels.tsv"),
                 "--scorer", str(FIXTURES / "scorer.json"),
                 "--encoder", "hash:64",
                 "--llm", f"scripted:{FIXTURES / 'transcripts'}",
                 "--report", str(report), "--trace-dir", str(traces)])
    assert code == 0
    masked_report = json.dumps(_mask_runtime(json.loads(report.read_text())), sort_keys=True)
    masked_traces = {
        p.name: json.dumps(_mask_runtime(json.loads(p.read_text())), sort_keys=True)
        for p in sorted(traces.iterdir())
    }
    return masked_report, masked_traces


def test_a08_end_to_end_determinism(tmp_path, capsys):
    report1, traces1 = _run_eval(tmp_path / "run1")
    report2, traces2 = _run_eval(tmp_path / "run2")
    capsys.readouterr()
    assert report1 == report2
    assert list(traces1) == list(traces2) == [f"q{i}.json" for i in range(1, 7)]
    assert traces1 == traces2


# --- A9: Hit@1 fixtures --------------------------------------------------------------------

def test_a09_hit_at_1_fixtures():
    from iquest.evaluation import hit_at_1

    cases = [
        ("Haley Joel Osment", ["haley joel osment"], 1),
        ("haley  joel   osment", ["Haley Joel Osment"], 1),
        ('"Haley Joel Osment."', ["haley joel osment"], 1),
        ("  Haley Joel Osment. ", ["Haley Joel Osment"], 1),
        ("Haley Osment", ["Haley Joel Osment"], 0),
        ("Paris", ["London"], 0),
        ("  John Williams. ", ["John Williams"], 1),
        ("'John Williams'", ["john   williams"], 1),
        ("UNKNOWN", ["Haley Joel Osment"], 0),
        ("New York City", ["NYC", "new york city."], 1),
    ]
    for predicted, golds, expected in cases:
        assert hit_at_1(predicted, golds) == expected, (predicted, golds)


# --- A10: SPARQL template fidelity --------------------------------------------------------------

def test_a10_sparql_template_fidelity(capsys):
    code = main(["render-sparql", "--entity", "m.0bxtg",
                 "--relation", "film.director.film", "--direction", "out"])
    assert code == 0
    assert capsys.readouterr().out == (
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "  ns:m.0bxtg ns:film.director.film ?tailEntity .\n"
        "}\n"
    )


# --- A11 (secondary): embedding service protocol conformance -----------------------------------

SERVICE_ENTRY = REPO_ROOT / "embed-service" / "dist" / "server.js"


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.mark.skipif(shutil.which("node") is None, reason="node is not installed")
@pytest.mark.skipif(not SERVICE_ENTRY.exists(),
                    reason="embed-service not built (npm run build)")
def test_a11_embed_service_protocol_conformance():
    import requests

    port = _free_port()
    proc = subprocess.Popen(["node", str(SERVICE_ENTRY), "--port", str(port)],
                            stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
    base = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 15
        health = None
        while time.monotonic() < deadline:
            try:
                health = requests.get(f"{base}/health", timeout=1)
                if health.status_code == 200:
                    break
            except requests.RequestException:
                pass
            time.sleep(0.1)
        assert health is not None and health.status_code == 200, "service never became healthy"
        assert health.json() == {"status": "ok", "dimension": 768}

        resp = requests.post(f"{base}/embed", json={"texts": ["a"]}, timeout=10)
        assert resp.status_code == 200
        body = resp.json()
        assert body["dimension"] == 768
        assert len(body["embeddings"]) == 1
        assert len(body["embeddings"][0]) == 768
        assert all(math.isfinite(x) for x in body["embeddings"][0])

        twice = requests.post(f"{base}/embed", json={"texts": ["a"]}, timeout=10)
        assert twice.content == resp.content  # identical bodies

        assert requests.post(f"{base}/embed", json={"texts": []}, timeout=10).status_code == 400
        assert requests.post(f"{base}/embed", json={"bad": 1}, timeout=10).status_code == 400

        # The engine-side client consumes the service unmodified.
        encoder = RemoteEncoder(base, dimension=768)
        vectors = encoder.encode(["alpha", "beta"])
        assert [v.shape for v in vectors] == [(768,), (768,)]
        again = encoder.encode(["alpha", "beta"])
        assert all(np.array_equal(a, b) for a, b in zip(vectors, again))
    finally:
        proc.terminate()
        proc.wait(timeout=10)
