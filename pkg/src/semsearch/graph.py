"""Labeled directed graph over RDF-style triples.

Statements are ingested from line-oriented N-Triples text and materialized
as a graph of entity nodes (identified by IRI, labeled with the IRI's local
name) and literal nodes (labeled with their text, verbatim). Every edge
runs from an entity node and carries the predicate's local name.

Graphs, datasets and entity descriptions are immutable after construction,
so any number of readers may share them.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from .errors import NotFoundError, NTriplesError

ENTITY = "entity"
LITERAL = "literal"


def local_name(iri: str) -> str:
    """Substring after the last '#' if any, else after the last '/', else the input."""
    for sep in ("#", "/"):
        pos = iri.rfind(sep)
        if pos >= 0:
            return iri[pos + 1 :]
    return iri


def namespace(iri: str) -> str:
    """The complement of local_name: everything before the separator, '' if none."""
    for sep in ("#", "/"):
        pos = iri.rfind(sep)
        if pos >= 0:
            return iri[:pos]
    return ""


@dataclass(frozen=True, slots=True)
class Node:
    """One graph node: an IRI-identified entity or a bare literal value."""

    kind: str
    label: str
    iri: str | None = None

    def __post_init__(self):
        if self.kind == ENTITY:
            if self.iri is None:
                raise ValueError("entity nodes require an IRI")
            if self.label != local_name(self.iri):
                raise ValueError(
                    f"entity label {self.label!r} is not the local name of {self.iri!r}"
                )
        elif self.kind == LITERAL:
            if self.iri is not None:
                raise ValueError("literal nodes carry no IRI")
        else:
            raise ValueError(f"unknown node kind: {self.kind!r}")

    @classmethod
    def entity(cls, iri: str) -> Node:
        return cls(ENTITY, local_name(iri), iri)

    @classmethod
    def literal(cls, text: str) -> Node:
        return cls(LITERAL, text)

    @property
    def is_entity(self) -> bool:
        return self.kind == ENTITY


def node_key(node: Node) -> tuple[str, str, str]:
    """Bytewise-stable sort key: label first, IRI as tie-break."""
    return (node.label, node.iri or "", node.kind)


@dataclass(frozen=True, slots=True)
class Edge:
    """A labeled edge from an entity node to any node."""

    source: Node
    label: str
    target: Node

    def __post_init__(self):
        if not self.source.is_entity:
            raise ValueError("edge sources must be entity nodes")


def edge_key(edge: Edge) -> tuple:
    return (node_key(edge.source), edge.label, node_key(edge.target))


@dataclass(frozen=True, slots=True)
class Triple:
    """One parsed statement. The object is an IRI unless object_is_literal."""

    subject: str
    predicate: str
    object: str
    object_is_literal: bool = False


class Graph:
    """Immutable node/edge sets with label indexes and adjacency.

    Construction deduplicates edges and automatically includes every edge
    endpoint in the node set.
    """

    __slots__ = ("nodes", "edges", "node_labels", "edge_labels", "_out", "_entities_by_label")

    def __init__(self, nodes: Iterable[Node] = (), edges: Iterable[Edge] = ()):
        node_set = set(nodes)
        edge_set = frozenset(edges)
        for edge in edge_set:
            node_set.add(edge.source)
            node_set.add(edge.target)
        self.nodes: frozenset[Node] = frozenset(node_set)
        self.edges: frozenset[Edge] = edge_set
        self.node_labels: frozenset[str] = frozenset(n.label for n in self.nodes)
        self.edge_labels: frozenset[str] = frozenset(e.label for e in self.edges)
        out: dict[Node, list[Edge]] = {}
        for edge in sorted(edge_set, key=edge_key):
            out.setdefault(edge.source, []).append(edge)
        self._out: dict[Node, tuple[Edge, ...]] = {n: tuple(es) for n, es in out.items()}
        by_label: dict[str, Node] = {}
        for node in sorted((n for n in self.nodes if n.is_entity), key=node_key):
            by_label.setdefault(node.label, node)
        self._entities_by_label = by_label

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Graph(nodes={len(self.nodes)}, edges={len(self.edges)})"

    def outgoing(self, node: Node) -> tuple[Edge, ...]:
        """All edges leaving a node, in deterministic (label, target) order."""
        return self._out.get(node, ())

    def entity_by_label(self, label: str) -> Node:
        """The entity node with this label; bytewise-smallest IRI wins on clashes."""
        node = self._entities_by_label.get(label)
        if node is None:
            raise NotFoundError(f"no entity labeled {label!r}")
        return node

    def entity_nodes(self) -> list[Node]:
        return sorted((n for n in self.nodes if n.is_entity), key=node_key)


@dataclass(frozen=True, slots=True)
class EntityDescription:
    """One entity with its outgoing edges and their target nodes."""

    entity: Node
    attribute_edges: frozenset[Edge]
    value_nodes: frozenset[Node]


@dataclass(frozen=True, slots=True)
class Dataset:
    """The per-subject slice of a graph, labeled with the subject's full IRI."""

    label: str
    entity_nodes: frozenset[Node]
    edges: frozenset[Edge]
    entity_labels: frozenset[str]
    node_labels: frozenset[str]


def entity_description(graph: Graph, entity_label: str) -> EntityDescription:
    """Extract the subgraph describing one entity: its edges and their targets."""
    entity = graph.entity_by_label(entity_label)
    edges = frozenset(graph.outgoing(entity))
    return EntityDescription(
        entity=entity,
        attribute_edges=edges,
        value_nodes=frozenset(e.target for e in edges),
    )


def datasets(graph: Graph) -> list[Dataset]:
    """One dataset per entity with outgoing edges, sorted by label bytewise."""
    result = []
    for entity in graph.entity_nodes():
        edges = graph.outgoing(entity)
        if not edges:
            continue
        nodes = {entity} | {e.target for e in edges}
        entities = frozenset(n for n in nodes if n.is_entity)
        result.append(
            Dataset(
                label=entity.iri or entity.label,
                entity_nodes=entities,
                edges=frozenset(edges),
                entity_labels=frozenset(n.label for n in entities),
                node_labels=frozenset(n.label for n in nodes),
            )
        )
    result.sort(key=lambda d: d.label)
    return result


def build_graph(triples: Iterable[Triple]) -> Graph:
    """Embed triples into a graph.

    Each distinct subject or object IRI becomes one entity node, each
    distinct literal text one literal node; each triple becomes one edge
    labeled with the predicate's local name. Edges deduplicate.
    """
    entities: dict[str, Node] = {}
    literals: dict[str, Node] = {}

    def entity(iri: str) -> Node:
        node = entities.get(iri)
        if node is None:
            node = Node.entity(iri)
            entities[iri] = node
        return node

    def literal(text: str) -> Node:
        node = literals.get(text)
        if node is None:
            node = Node.literal(text)
            literals[text] = node
        return node

    edges = set()
    for triple in triples:
        source = entity(triple.subject)
        target = literal(triple.object) if triple.object_is_literal else entity(triple.object)
        edges.add(Edge(source, local_name(triple.predicate), target))
    return Graph(set(entities.values()) | set(literals.values()), edges)


# --- N-Triples parsing -------------------------------------------------

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def parse_ntriples(text: str) -> list[Triple]:
    """Parse a line-oriented N-Triples document.

    Lines are `<s> <p> <o> .` or `<s> <p> "literal" .`; blank lines and
    `#`-prefixed lines are skipped. Datatype (`^^<...>`) and language
    (`@xx`) tags on literals are accepted and dropped. Duplicate lines
    yield duplicate list entries. Blank nodes are rejected.
    """
    triples = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(_parse_statement(line, lineno))
    return triples


def _parse_statement(line: str, lineno: int) -> Triple:
    def fail(message: str) -> NTriplesError:
        return NTriplesError(message, line=lineno, source=line)

    pos = _skip_ws(line, 0)
    if line.startswith("_:", pos):
        raise fail("blank nodes are not supported")
    subject, pos = _parse_iri(line, pos, fail)
    pos = _skip_ws(line, pos)
    if line.startswith("_:", pos):
        raise fail("blank nodes are not supported")
    predicate, pos = _parse_iri(line, pos, fail)
    pos = _skip_ws(line, pos)
    if pos >= len(line) or line[pos] == ".":
        raise fail("statement is missing its object")
    if line.startswith("_:", pos):
        raise fail("blank nodes are not supported")
    if line[pos] == "<":
        obj, pos = _parse_iri(line, pos, fail)
        is_literal = False
    elif line[pos] == '"':
        obj, pos = _parse_literal(line, pos, fail)
        is_literal = True
        pos = _skip_tag(line, pos, fail)
    else:
        raise fail("expected an IRI or a quoted literal as object")
    pos = _skip_ws(line, pos)
    if pos >= len(line) or line[pos] != ".":
        raise fail("statement is not terminated by '.'")
    if line[pos + 1 :].strip():
        raise fail("unexpected text after closing '.'")
    return Triple(subject, predicate, obj, is_literal)


def _skip_ws(line: str, pos: int) -> int:
    while pos < len(line) and line[pos] in " \t":
        pos += 1
    return pos


def _parse_iri(line: str, pos: int, fail) -> tuple[str, int]:
    if pos >= len(line) or line[pos] != "<":
        raise fail("expected '<'")
    end = line.find(">", pos + 1)
    if end < 0:
        raise fail("unterminated IRI")
    return line[pos + 1 : end], end + 1


def _parse_literal(line: str, pos: int, fail) -> tuple[str, int]:
    out = []
    i = pos + 1
    while i < len(line):
        ch = line[i]
        if ch == '"':
            return "".join(out), i + 1
        if ch == "\\":
            if i + 1 >= len(line):
                raise fail("unterminated literal")
            esc = line[i + 1]
            if esc in _ESCAPES:
                out.append(_ESCAPES[esc])
                i += 2
                continue
            if esc in ("u", "U"):
                width = 4 if esc == "u" else 8
                hexdigits = line[i + 2 : i + 2 + width]
                if len(hexdigits) < width:
                    raise fail("truncated unicode escape")
                try:
                    out.append(chr(int(hexdigits, 16)))
                except ValueError:
                    raise fail("invalid unicode escape") from None
                i += 2 + width
                continue
            raise fail(f"invalid escape sequence '\\{esc}'")
        out.append(ch)
        i += 1
    raise fail("unterminated literal")


def _skip_tag(line: str, pos: int, fail) -> int:
    """Drop a trailing ^^<datatype> or @lang tag."""
    if line.startswith("^^", pos):
        if pos + 2 >= len(line) or line[pos + 2] != "<":
            raise fail("expected '<' after '^^'")
        _, pos = _parse_iri(line, pos + 2, fail)
        return pos
    if line.startswith("@", pos):
        end = pos + 1
        while end < len(line) and (line[end].isalnum() or line[end] == "-"):
            end += 1
        if end == pos + 1:
            raise fail("empty language tag")
        return end
    return pos


# --- Canonical export --------------------------------------------------


def _escape_literal(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    return "".join(out)


def to_ntriples(graph: Graph) -> str:
    """Serialize edges as canonical N-Triples: LF endings, statements sorted
    by (subject, predicate, object) bytewise. Re-parsing the output yields
    an identical graph."""
    entries = []
    for edge in graph.edges:
        if edge.target.is_entity:
            rendered = f"<{edge.target.iri}>"
            obj_key = (edge.target.iri, ENTITY)
        else:
            rendered = '"' + _escape_literal(edge.target.label) + '"'
            obj_key = (edge.target.label, LITERAL)
        key = (edge.source.iri, edge.label, *obj_key)
        entries.append((key, f"<{edge.source.iri}> <{edge.label}> {rendered} ."))
    entries.sort()
    return "".join(line + "\n" for _, line in entries)
