from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iquest.kg import (
    Direction,
    GraphFormatError,
    NeighborEdge,
    Triple,
    fetch_neighbors_1hop,
    label,
    load_graph,
    neighbors_1hop,
    neighbors_2hop,
    render_sparql,
)

from conftest import write_graph


def test_load_single_triple(tmp_path):
    path = write_graph(tmp_path, ["m.a\tr1\tm.b"])
    g = load_graph(path)
    assert len(g.triples) == 1
    assert g.out_index["m.a"] == [("r1", "m.b")]
    assert g.in_index["m.b"] == [("r1", "m.a")]


def test_load_empty_file(tmp_path):
    path = write_graph(tmp_path, [])
    g = load_graph(path)
    assert len(g.triples) == 0
    assert neighbors_1hop(g, "m.a") == []
    assert neighbors_2hop(g, "m.a") == []


def test_load_deduplicates(tmp_path):
    path = write_graph(tmp_path, ["m.a\tr1\tm.b", "m.a\tr1\tm.b"])
    g = load_graph(path)
    assert len(g.triples) == 1


def test_load_skips_comments_and_blanks(tmp_path):
    path = write_graph(tmp_path, ["# header", "", "m.a\tr1\tm.b", "   "])
    g = load_graph(path)
    assert g.triples == frozenset({Triple("m.a", "r1", "m.b")})


@pytest.mark.parametrize("bad", ["m.a\tr1", "m.a\tr1\tm.b\textra", "m.a\t\tm.b"])
def test_load_malformed_line_reports_line_number(tmp_path, bad):
    path = write_graph(tmp_path, ["m.a\tr1\tm.b", bad])
    with pytest.raises(GraphFormatError) as err:
        load_graph(path)
    assert err.value.line_no == 2


def test_load_labels(tmp_path):
    kg = write_graph(tmp_path, ["m.a\tr1\tm.b"])
    labels = write_graph(tmp_path, ["m.a\tAlpha"], name="labels.tsv")
    g = load_graph(kg, labels)
    assert label(g, "m.a") == "Alpha"
    assert label(g, "m.b") == "m.b"


def test_label_total_fallback(tmp_path):
    g = load_graph(write_graph(tmp_path, []))
    assert label(g, "m.01066g18") == "m.01066g18"


def test_neighbors_1hop_single_edge_both_ends(tmp_path):
    g = load_graph(write_graph(tmp_path, ["a\tr\tb"]))
    assert neighbors_1hop(g, "a") == [NeighborEdge(Direction.OUTGOING, "r", "b")]
    assert neighbors_1hop(g, "b") == [NeighborEdge(Direction.INCOMING, "r", "a")]


def test_neighbors_1hop_sort_order(tmp_path):
    # Oracle: linear scan over all triples mentioning the entity.
    g = load_graph(write_graph(tmp_path, ["a\tr\tb", "c\ts\ta"]))
    expected = [NeighborEdge(Direction.INCOMING, "s", "c"),
                NeighborEdge(Direction.OUTGOING, "r", "b")]
    assert neighbors_1hop(g, "a") == expected


def test_neighbors_2hop_chain_midpoint(tmp_path):
    g = load_graph(write_graph(tmp_path, ["a\tr\tb", "b\tr\tc"]))
    assert neighbors_2hop(g, "b") == ["a", "c"]


def test_neighbors_2hop_isolated(tmp_path):
    g = load_graph(write_graph(tmp_path, ["a\tr\tb"]))
    assert neighbors_2hop(g, "zzz") == []


def test_neighbors_2hop_star_with_duplicate_relation(tmp_path):
    # One spoke is reachable via two relations; the neighbor set oracle is a
    # linear scan collecting every entity that shares a triple with the hub.
    lines = [f"hub\tr{i}\tspoke{i}" for i in range(5)] + ["hub\tr_extra\tspoke0"]
    g = load_graph(write_graph(tmp_path, lines))
    expected = sorted({f"spoke{i}" for i in range(5)})
    assert neighbors_2hop(g, "hub") == expected


triple_ids = st.text(alphabet="abcdefgh123.", min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(triple_ids, triple_ids, triple_ids), min_size=0, max_size=25))
def test_roundtrip_and_index_consistency(tmp_path_factory, triples):
    # Round trip: every written triple is visible from both endpoints, and
    # index sizes match a linear-scan count.
    tmp_path = tmp_path_factory.mktemp("kg")
    lines = [f"{s}\t{r}\t{o}" for s, r, o in triples]
    g = load_graph(write_graph(tmp_path, lines))
    unique = set(map(tuple, triples))
    assert len(g.triples) == len(unique)

    entities = {s for s, _, _ in unique} | {o for _, _, o in unique}
    for e in entities:
        from_scan = sum(1 for s, _, _ in unique if s == e) + sum(1 for _, _, o in unique if o == e)
        assert len(g.out_index.get(e, [])) + len(g.in_index.get(e, [])) == from_scan
        # 2-hop equals the union of 1-hop neighbor fields.
        assert neighbors_2hop(g, e) == sorted({edge.neighbor for edge in neighbors_1hop(g, e)})
    for s, r, o in unique:
        assert NeighborEdge(Direction.OUTGOING, r, o) in neighbors_1hop(g, s)
        assert NeighborEdge(Direction.INCOMING, r, s) in neighbors_1hop(g, o)


def test_retrieval_is_pure(synthetic_graph):
    first = neighbors_1hop(synthetic_graph, "m.film1")
    second = neighbors_1hop(synthetic_graph, "m.film1")
    assert first == second


def test_render_sparql_outgoing_with_relation():
    query = render_sparql("m.0bxtg", Direction.OUTGOING, "film.director.film")
    assert query == (
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "  ns:m.0bxtg ns:film.director.film ?tailEntity .\n"
        "}"
    )


def test_render_sparql_unbound_relation():
    query = render_sparql("m.a", Direction.OUTGOING, None)
    assert "?r ?tailEntity ." in query  # variable in predicate position
    assert query == render_sparql("m.a", Direction.OUTGOING, None)


def test_render_sparql_incoming():
    query = render_sparql("m.x", Direction.INCOMING, "rel.a")
    assert "?headEntity ns:rel.a ns:m.x ." in query
    assert query.startswith("SELECT ?headEntity")


def test_fetch_neighbors_1hop_uses_hook():
    def fake_fetch(query: str):
        if "?tailEntity" in query:
            return [{"r": "r1", "tailEntity": "m.b"}]
        return [{"r": "r2", "headEntity": "m.c"}]

    edges = fetch_neighbors_1hop(fake_fetch, "m.a")
    assert edges == [NeighborEdge(Direction.INCOMING, "r2", "m.c"),
                     NeighborEdge(Direction.OUTGOING, "r1", "m.b")]
