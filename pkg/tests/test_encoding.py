from __future__ import annotations

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iquest.encoding import EncoderConfig, HashEncoder, build_encoder, node_text
from iquest.kg import Direction


def test_same_text_same_vector():
    enc = HashEncoder(32)
    a, b = enc.encode(["abc", "abc"])
    assert np.array_equal(a, b)


def test_empty_string_is_zero_vector():
    enc = HashEncoder(16)
    (v,) = enc.encode([""])
    assert v.shape == (16,)
    assert np.all(v == 0.0)


def test_unit_norm_matches_independent_recomputation():
    # Oracle: redo the hashing pipeline (tokens + bigrams, blake2b bucket and
    # sign, L2 normalization) from scratch for one concrete input.
    dim = 8
    text = "abc"
    expected = np.zeros(dim)
    for feat in ["abc"]:  # single token, no bigrams
        h = int.from_bytes(hashlib.blake2b(feat.encode(), digest_size=8).digest(), "big")
        expected[(h >> 1) % dim] += 1.0 if h & 1 else -1.0
    expected /= np.linalg.norm(expected)

    (got,) = HashEncoder(dim).encode([text])
    assert got == pytest.approx(expected, abs=1e-12)
    assert abs(np.linalg.norm(got) - 1.0) <= 1e-9


def test_multi_token_includes_bigrams():
    dim = 64
    enc = HashEncoder(dim)
    (got,) = enc.encode(["alpha beta"])
    expected = np.zeros(dim)
    for feat in ["alpha", "beta", "alpha beta"]:
        h = int.from_bytes(hashlib.blake2b(feat.encode(), digest_size=8).digest(), "big")
        expected[(h >> 1) % dim] += 1.0 if h & 1 else -1.0
    expected /= np.linalg.norm(expected)
    assert got == pytest.approx(expected, abs=1e-12)


def test_order_and_length_preserving():
    enc = HashEncoder(16)
    texts = ["one", "two", "three"]
    vecs = enc.encode(texts)
    assert len(vecs) == 3
    singles = [enc.encode([t])[0] for t in texts]
    for got, want in zip(vecs, singles):
        assert np.array_equal(got, want)


@settings(max_examples=80, deadline=None)
@given(st.text(alphabet="abcdefghij 0123", min_size=1, max_size=40))
def test_norm_and_dimension_properties(text):
    enc = HashEncoder(24)
    (v,) = enc.encode([text])
    assert v.shape == (24,)
    assert np.all(np.isfinite(v))
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-9


def test_tokenization_is_case_insensitive():
    enc = HashEncoder(32)
    a, b = enc.encode(["Nolan Film", "nolan film"])
    assert np.array_equal(a, b)


def test_punctuation_only_text_still_encodes():
    (v,) = HashEncoder(8).encode(["!!!"])
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-9


def test_encoder_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(dimension=0)
    with pytest.raises(ValueError):
        EncoderConfig(backend="gpu")
    with pytest.raises(ValueError):
        EncoderConfig(backend="remote")


def test_build_encoder_hash():
    enc = build_encoder(EncoderConfig(dimension=12, backend="hash"))
    assert enc.dimension == 12


def test_node_text_outgoing():
    assert node_text("Inception", "film.director.film", Direction.OUTGOING) == \
        "film.director.film → Inception"


def test_node_text_incoming():
    assert node_text("Christopher Nolan", "film.director.film", Direction.INCOMING) == \
        "Christopher Nolan → film.director.film"


def test_node_text_deterministic():
    args = ("X", "rel", Direction.OUTGOING)
    assert node_text(*args) == node_text(*args)
