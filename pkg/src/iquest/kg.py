"""In-process knowledge graph store with bidirectional adjacency indexes.

Triples load from a TSV file (``subject<TAB>relation<TAB>object``, ``#``
comments allowed); entity display names load from an optional two-column
labels TSV. Objects that are literals (dates, numbers) are stored as
entities whose id doubles as their label. The store is immutable after
load, so concurrent reads are safe.

For deployments backed by a live SPARQL endpoint, :func:`render_sparql`
produces the fixed query template and :func:`fetch_neighbors_1hop` turns a
caller-supplied query executor into the same edge view the local store
provides.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

EntityId = str
RelationId = str


class GraphFormatError(ValueError):
    """Malformed triples or labels file; carries the offending line number."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class Direction(str, enum.Enum):
    # "in" < "out" gives the documented sort order (incoming edges first).
    INCOMING = "in"
    OUTGOING = "out"

    def __str__(self) -> str:
        return self.value


class Triple(NamedTuple):
    subject: EntityId
    relation: RelationId
    object: EntityId


class NeighborEdge(NamedTuple):
    direction: Direction
    relation: RelationId
    neighbor: EntityId


@dataclass
class KnowledgeGraph:
    """Triple set plus outgoing/incoming adjacency indexes and labels."""

    triples: frozenset[Triple]
    out_index: dict[EntityId, list[tuple[RelationId, EntityId]]]
    in_index: dict[EntityId, list[tuple[RelationId, EntityId]]]
    labels: dict[EntityId, str] = field(default_factory=dict)

    def __contains__(self, entity: EntityId) -> bool:
        return entity in self.out_index or entity in self.in_index

    @property
    def entities(self) -> list[EntityId]:
        """All entity ids mentioned by any triple, sorted."""
        return sorted(set(self.out_index) | set(self.in_index))


def _check_field(value: str, path: str, line_no: int, what: str) -> str:
    if not value:
        raise GraphFormatError(path, line_no, f"empty {what}")
    return value


def load_graph(triples_path: str | Path, labels_path: str | Path | None = None) -> KnowledgeGraph:
    """Load and index a TSV triple file, deduplicating repeated triples.

    Raises GraphFormatError (with line number) on lines that do not have
    exactly three non-empty tab-separated fields. An empty file yields an
    empty graph.
    """
    triples_path = str(triples_path)
    triples: set[Triple] = set()
    with open(triples_path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise GraphFormatError(
                    triples_path, line_no, f"expected 3 tab-separated fields, got {len(fields)}"
                )
            s, r, o = (_check_field(f.strip(), triples_path, line_no, w)
                       for f, w in zip(fields, ("subject", "relation", "object")))
            triples.add(Triple(s, r, o))

    out_index: dict[EntityId, list[tuple[RelationId, EntityId]]] = {}
    in_index: dict[EntityId, list[tuple[RelationId, EntityId]]] = {}
    for t in triples:
        out_index.setdefault(t.subject, []).append((t.relation, t.object))
        in_index.setdefault(t.object, []).append((t.relation, t.subject))
    for index in (out_index, in_index):
        for edges in index.values():
            edges.sort()

    labels: dict[EntityId, str] = {}
    if labels_path is not None:
        labels_path = str(labels_path)
        with open(labels_path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n").rstrip("\r")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise GraphFormatError(
                        labels_path, line_no, f"expected 2 tab-separated fields, got {len(fields)}"
                    )
                entity = _check_field(fields[0].strip(), labels_path, line_no, "entity id")
                name = _check_field(fields[1].strip(), labels_path, line_no, "display name")
                labels[entity] = name

    return KnowledgeGraph(triples=frozenset(triples), out_index=out_index,
                          in_index=in_index, labels=labels)


def neighbors_1hop(g: KnowledgeGraph, e: EntityId) -> list[NeighborEdge]:
    """All outgoing and incoming edges of ``e``, deduplicated and sorted.

    Sort order is (direction, relation, neighbor); unknown entities yield
    an empty list.
    """
    edges = {NeighborEdge(Direction.OUTGOING, r, o) for r, o in g.out_index.get(e, ())}
    edges |= {NeighborEdge(Direction.INCOMING, r, s) for r, s in g.in_index.get(e, ())}
    return sorted(edges)


def neighbors_2hop(g: KnowledgeGraph, e_1h: EntityId) -> list[EntityId]:
    """The sorted set of entities adjacent to ``e_1h`` in either direction."""
    seen = {o for _, o in g.out_index.get(e_1h, ())}
    seen.update(s for _, s in g.in_index.get(e_1h, ()))
    return sorted(seen)


def label(g: KnowledgeGraph, e: EntityId) -> str:
    """Display name of ``e``, falling back to the raw id for unnamed entities."""
    return g.labels.get(e, e)


_SPARQL_OUT = "SELECT {projection}\nWHERE {{\n  ns:{entity} {predicate} ?tailEntity .\n}}"
_SPARQL_IN = "SELECT {projection}\nWHERE {{\n  ?headEntity {predicate} ns:{entity} .\n}}"


def render_sparql(e: EntityId, direction: Direction, relation: RelationId | None = None) -> str:
    """Instantiate the fixed neighbor-retrieval SPARQL template.

    Outgoing queries select ``?tailEntity``, incoming ones ``?headEntity``.
    A missing relation leaves the variable ``?r`` in predicate position and
    adds it to the projection so callers can recover the connecting
    relation. Output is byte-identical for identical input.
    """
    result_var = "?tailEntity" if direction is Direction.OUTGOING else "?headEntity"
    if relation is not None:
        predicate, projection = f"ns:{relation}", result_var
    else:
        predicate, projection = "?r", f"?r {result_var}"
    template = _SPARQL_OUT if direction is Direction.OUTGOING else _SPARQL_IN
    return template.format(entity=e, predicate=predicate, projection=projection)


# Executes a rendered SPARQL query against a remote endpoint and returns one
# binding dict per result row (variable name -> value).
SparqlFetchHook = Callable[[str], Iterable[dict[str, str]]]


def fetch_neighbors_1hop(fetch: SparqlFetchHook, e: EntityId) -> list[NeighborEdge]:
    """1-hop edge view of a remote endpoint, via the pluggable fetch hook.

    Issues the unbound-relation template in both directions; rows must bind
    ``r`` plus ``tailEntity`` or ``headEntity``. Results are deduplicated
    and sorted exactly like :func:`neighbors_1hop`.
    """
    edges: set[NeighborEdge] = set()
    for row in fetch(render_sparql(e, Direction.OUTGOING)):
        edges.add(NeighborEdge(Direction.OUTGOING, row["r"], row["tailEntity"]))
    for row in fetch(render_sparql(e, Direction.INCOMING)):
        edges.add(NeighborEdge(Direction.INCOMING, row["r"], row["headEntity"]))
    return sorted(edges)
