#!/usr/bin/env python3
"""Regenerates the bundled synthetic fixtures under fixtures/synthetic/.

Everything here is seeded, so reruns reproduce the committed files byte
for byte (scorer.json included). Run from the repository root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import os
from pathlib import Path

# Pin the kernel backend so the committed scorer.json reproduces bit for bit.
os.environ.setdefault("IQUEST_KERNELS", "numpy")

from iquest.encoding import HashEncoder
from iquest.kg import load_graph
from iquest.scorer import ScorerDims, TrainConfig, build_training_set, save_params, train

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "synthetic"

TRIPLES = [
    ("m.dir1", "film.director.film", "m.film1"),
    ("m.dir1", "film.director.film", "m.film2"),
    ("m.film1", "film.film.music", "m.comp1"),
    ("m.film1", "film.film.location", "m.city1"),
    ("m.film2", "film.film.location", "m.city2"),
    ("m.city1", "location.containedby", "m.cntry1"),
    ("m.city2", "location.containedby", "m.cntry2"),
    ("m.cntry1", "location.country.official_flower", "m.flower1"),
    ("m.cntry2", "location.country.official_flower", "m.flower2"),
    ("m.film1", "film.film.genre", "m.genre1"),
    ("m.film2", "film.film.genre", "m.genre1"),
    ("m.comp1", "music.composer.residence", "m.city2"),
]

LABELS = {
    "m.dir1": "Rae Callum",
    "m.film1": "Glass Harbor",
    "m.film2": "Iron Tide",
    "m.comp1": "Tomas Ling",
    "m.city1": "Porto Azul",
    "m.city2": "Dun Harrow",
    "m.cntry1": "Valdora",
    "m.cntry2": "Khesh",
    "m.flower1": "Silver Lily",
    "m.flower2": "Ember Rose",
    "m.genre1": "maritime drama",
}


def ae(answer: str, sufficient: bool, expect: str | None = None) -> dict:
    entry = {"reply": f"ANSWER: {answer}\nSUFFICIENT: {'yes' if sufficient else 'no'}\nSOURCE: kg"}
    if expect:
        entry["expect"] = expect
    return entry


def subq(text: str, expect: str | None = None) -> dict:
    entry = {"reply": f"SUBQUESTION: {text}"}
    if expect:
        entry["expect"] = expect
    return entry


def final(text: str, expect: str | None = None) -> dict:
    entry = {"reply": f"FINAL: {text}"}
    if expect:
        entry["expect"] = expect
    return entry


DATASET = [
    {
        "id": "q1", "question": "Who directed Glass Harbor?",
        "topic_entity": "m.film1", "answers": ["Rae Callum"],
        "transcript": {
            "iqg": [subq("Who directed Glass Harbor?", expect="Who directed Glass Harbor?")],
            "ae": [ae("Rae Callum", True, expect="Glass Harbor"),
                   final("Rae Callum", expect="Rae Callum")],
        },
    },
    {
        "id": "q2", "question": "Who wrote the music for Glass Harbor?",
        "topic_entity": "m.film1", "answers": ["Tomas Ling"],
        "transcript": {
            "iqg": [subq("Who wrote the music for Glass Harbor?")],
            "ae": [ae("Tomas Ling", True), final("Tomas Ling")],
        },
    },
    {
        "id": "q3", "question": "Which country was Glass Harbor filmed in?",
        "topic_entity": "m.film1", "answers": ["Valdora"],
        "transcript": {
            "iqg": [subq("Where was Glass Harbor filmed?"),
                    subq("Which country contains Porto Azul?", expect="Porto Azul")],
            "ae": [ae("Porto Azul", False),
                   ae("Valdora", True),
                   final("Valdora", expect="Valdora")],
        },
    },
    {
        "id": "q4", "question": "Which country was Iron Tide filmed in?",
        "topic_entity": "m.film2", "answers": ["Khesh"],
        "transcript": {
            "iqg": [subq("Where was Iron Tide filmed?"),
                    subq("Which country contains Dun Harrow?")],
            "ae": [ae("Dun Harrow", False), ae("Khesh", True), final("Khesh")],
        },
    },
    {
        "id": "q5",
        "question": "What is the official flower of the country where Glass Harbor was filmed?",
        "topic_entity": "m.film1", "answers": ["Silver Lily"],
        "transcript": {
            "iqg": [subq("Where was Glass Harbor filmed?"),
                    subq("Which country contains Porto Azul?"),
                    subq("What is the official flower of Valdora?", expect="Valdora")],
            "ae": [ae("Porto Azul", False),
                   ae("Valdora", False),
                   ae("Silver Lily", True),
                   final("Silver Lily")],
        },
    },
    {
        "id": "q6",
        "question": "Which country contains the location of the film directed by Rae Callum and set at sea?",
        "topic_entity": "m.dir1", "answers": ["Valdora"],
        "transcript": {
            "iqg": [subq("Which film did Rae Callum direct that is set at sea?"),
                    subq("Where was Glass Harbor filmed?"),
                    subq("Which country contains Porto Azul?")],
            "ae": [ae("Glass Harbor", False),
                   ae("Porto Azul", False),
                   ae("Valdora", True),
                   final("Valdora")],
        },
    },
]

TRAIN_PAIRS = [
    {"question": "Who directed Glass Harbor?", "topic_entity": "m.film1", "answer": "m.dir1"},
    {"question": "Who wrote the music for Glass Harbor?", "topic_entity": "m.film1",
     "answer": "m.comp1"},
    {"question": "Where was Glass Harbor filmed?", "topic_entity": "m.film1", "answer": "m.city1"},
    {"question": "Where was Iron Tide filmed?", "topic_entity": "m.film2", "answer": "m.city2"},
    {"question": "Which country contains Porto Azul?", "topic_entity": "m.city1",
     "answer": "m.cntry1"},
    {"question": "Which country contains Dun Harrow?", "topic_entity": "m.city2",
     "answer": "m.cntry2"},
    {"question": "What is the official flower of Valdora?", "topic_entity": "m.cntry1",
     "answer": "m.flower1"},
    {"question": "What is the official flower of Khesh?", "topic_entity": "m.cntry2",
     "answer": "m.flower2"},
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "transcripts").mkdir(exist_ok=True)

    kg_lines = ["# synthetic film-world graph used by the bundled evaluation suite"]
    kg_lines += ["\t".join(t) for t in TRIPLES]
    (OUT / "kg.tsv").write_text("\n".join(kg_lines) + "\n", encoding="utf-8")
    (OUT / "labels.tsv").write_text(
        "".join(f"{mid}\t{name}\n" for mid, name in LABELS.items()), encoding="utf-8")

    with open(OUT / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for rec in DATASET:
            fh.write(json.dumps({k: rec[k] for k in ("id", "question", "topic_entity", "answers")},
                                sort_keys=True) + "\n")
            (OUT / "transcripts" / f"{rec['id']}.json").write_text(
                json.dumps(rec["transcript"], indent=2) + "\n", encoding="utf-8")

    with open(OUT / "train_pairs.jsonl", "w", encoding="utf-8") as fh:
        for pair in TRAIN_PAIRS:
            fh.write(json.dumps(pair, sort_keys=True) + "\n")

    # Small scorer trained on the bundled single-hop pairs; inference-time
    # determinism in the eval suite only needs fixed parameters, not a
    # strong model.
    g = load_graph(OUT / "kg.tsv", OUT / "labels.tsv")
    encoder = HashEncoder(64)
    cfg = TrainConfig(learning_rate=0.05, epochs=30, batch_size=8, seed=7, negative_ratio=1)
    pairs = [(p["question"], p["topic_entity"], p["answer"]) for p in TRAIN_PAIRS]
    examples = build_training_set(g, pairs, encoder, cfg)
    params = train(examples, cfg, dims=ScorerDims(d_in=64, d_gnn=16, d_mlp=16))
    save_params(params, OUT / "scorer.json")
    print(f"wrote fixtures for {len(DATASET)} questions to {OUT}")


if __name__ == "__main__":
    main()
