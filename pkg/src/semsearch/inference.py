"""Horn-rule inference and journey-pattern materialization.

The rules file is line-oriented UTF-8: `#` starts a comment, a rule reads

    (?y is_encircled_by ?x) :- (?x encircles ?y).

and a pattern declaration reads

    @pattern SERVICE_JOURNEY_PATTERN { path: next_stop, max_hops = 6; attach: is_encircled; }

Atom terms are `?variables`, bare constants (matched against node or edge
labels) or `<full-iri>` constants (matched against entity IRIs; predicate
IRIs are reduced to their local names). Rules must be safe: every head
variable occurs somewhere in the body.

Forward chaining runs semi-naive (each round joins at least one edge
derived in the previous round) to the least fixpoint. Derivations whose
subject would be a literal node are discarded, since such edges cannot
exist in the graph.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass

from .errors import DivergenceError, RuleParseError, RuleSafetyError
from .graph import Edge, Graph, Node, local_name, namespace, node_key

ITERATION_CAP = 10_000


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Const:
    text: str
    is_iri: bool = False


Term = Var | Const


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: Term
    predicate: Term
    object: Term

    def variables(self) -> set[str]:
        return {t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Var)}


@dataclass(frozen=True, slots=True)
class Rule:
    head: TriplePattern
    body: tuple[TriplePattern, ...]
    name: str = ""


@dataclass(frozen=True, slots=True)
class PatternConfig:
    """Shape of the composite documents materialized from one path predicate."""

    pattern_label: str
    path_predicate: str
    max_hops: int
    attach_predicates: tuple[str, ...] = ()

    def __post_init__(self):
        if self.max_hops < 1:
            raise ValueError("max_hops must be at least 1")


@dataclass(frozen=True, slots=True)
class Block:
    dataset: str
    entity: str
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True, slots=True)
class CompositeDoc:
    """A journey-pattern document: ordered entity blocks under one pattern dataset."""

    pattern_dataset: str
    blocks: tuple[Block, ...]

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("composite documents need at least one block")
        for block in self.blocks:
            if not block.pairs:
                raise ValueError("composite blocks need at least one attribute/value pair")


# --- Rules file parsing ------------------------------------------------

_ATOM_RE = re.compile(r"\(([^()]*)\)")
_PATTERN_RE = re.compile(r"^@pattern\s+([^\s{]+)\s*\{(.*)\}\s*$")
_PATH_RE = re.compile(r"(?:^|[,;])\s*path\s*:\s*([^,;\s]+)")
_HOPS_RE = re.compile(r"(?:^|[,;])\s*max_hops\s*=\s*(\d+)")
_ATTACH_RE = re.compile(r"(?:^|[,;])\s*attach\s*:\s*([^;]*)")


def parse_rules(text: str) -> tuple[list[Rule], list[PatternConfig]]:
    """Parse a rules file into rules and pattern declarations, in file order."""
    rules: list[Rule] = []
    configs: list[PatternConfig] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@pattern"):
            configs.append(_parse_pattern(line, lineno))
            continue
        rules.append(_parse_rule(line, lineno, name=f"rule{len(rules) + 1}"))
    return rules, configs


def _parse_pattern(line: str, lineno: int) -> PatternConfig:
    match = _PATTERN_RE.match(line)
    if not match:
        raise RuleParseError("malformed @pattern declaration", line=lineno, source=line)
    label, body = match.groups()
    path = _PATH_RE.search(body)
    if not path:
        raise RuleParseError("@pattern is missing 'path:'", line=lineno, source=line)
    hops = _HOPS_RE.search(body)
    if not hops:
        raise RuleParseError("@pattern is missing 'max_hops ='", line=lineno, source=line)
    max_hops = int(hops.group(1))
    if max_hops < 1:
        raise RuleParseError("max_hops must be at least 1", line=lineno, source=line)
    attach: tuple[str, ...] = ()
    attach_match = _ATTACH_RE.search(body)
    if attach_match:
        attach = tuple(p.strip() for p in attach_match.group(1).split(",") if p.strip())
    return PatternConfig(label, path.group(1), max_hops, attach)


def _parse_rule(line: str, lineno: int, name: str) -> Rule:
    if not line.endswith("."):
        raise RuleParseError("rule must end with '.'", line=lineno, source=line)
    stripped = line[:-1]
    if ":-" not in stripped:
        raise RuleParseError("rule is missing ':-'", line=lineno, source=line)
    head_text, _, body_text = stripped.partition(":-")
    head = _parse_atoms(head_text, lineno, line, expect_one=True)[0]
    body = _parse_atoms(body_text, lineno, line)
    if not body:
        raise RuleParseError("rule body is empty", line=lineno, source=line)
    body_vars = set().union(*(atom.variables() for atom in body))
    for var in sorted(head.variables() - body_vars):
        raise RuleSafetyError(
            f"head variable {var} does not occur in the rule body", variable=var
        )
    return Rule(head, tuple(body), name)


def _parse_atoms(text: str, lineno: int, source: str, expect_one: bool = False) -> list[TriplePattern]:
    leftover = _ATOM_RE.sub("", text)
    if leftover.strip(", \t"):
        raise RuleParseError(
            f"unexpected text outside atoms: {leftover.strip()!r}", line=lineno, source=source
        )
    atoms = []
    for match in _ATOM_RE.finditer(text):
        terms = _parse_terms(match.group(1), lineno, source)
        if len(terms) != 3:
            raise RuleParseError(
                f"atom needs exactly 3 terms, got {len(terms)}", line=lineno, source=source
            )
        subject, predicate, obj = terms
        if isinstance(predicate, Const) and predicate.is_iri:
            predicate = Const(local_name(predicate.text))
        atoms.append(TriplePattern(subject, predicate, obj))
    if expect_one and len(atoms) != 1:
        raise RuleParseError("rule head must be a single atom", line=lineno, source=source)
    return atoms


def _parse_terms(text: str, lineno: int, source: str) -> list[Term]:
    terms: list[Term] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "<":
            end = text.find(">", i)
            if end < 0:
                raise RuleParseError("unterminated IRI in atom", line=lineno, source=source)
            terms.append(Const(text[i + 1 : end], is_iri=True))
            i = end + 1
            continue
        end = i
        while end < len(text) and not text[end].isspace():
            end += 1
        token = text[i:end]
        if token.startswith("?"):
            if len(token) == 1:
                raise RuleParseError("variable is missing a name", line=lineno, source=source)
            terms.append(Var(token))
        else:
            terms.append(Const(token))
        i = end
    return terms


# --- Forward chaining --------------------------------------------------


class _NodeRegistry:
    """Resolves head constants to nodes, creating entities when needed."""

    def __init__(self, nodes):
        self._by_iri: dict[str, Node] = {}
        self._entity_by_label: dict[str, Node] = {}
        self._literal_by_label: dict[str, Node] = {}
        for node in sorted(nodes, key=node_key):
            if node.is_entity:
                self._by_iri[node.iri] = node
                self._entity_by_label.setdefault(node.label, node)
            else:
                self._literal_by_label.setdefault(node.label, node)

    def for_iri(self, iri: str) -> Node:
        node = self._by_iri.get(iri)
        if node is None:
            node = Node.entity(iri)
            self._by_iri[iri] = node
            self._entity_by_label.setdefault(node.label, node)
        return node

    def for_label(self, label: str) -> Node:
        node = self._entity_by_label.get(label)
        if node is not None:
            return node
        node = self._literal_by_label.get(label)
        if node is not None:
            return node
        return self.for_iri(label)


class _EdgePool:
    def __init__(self, edges):
        self.edges = list(edges)
        self.by_label: dict[str, list[Edge]] = {}
        for edge in self.edges:
            self.by_label.setdefault(edge.label, []).append(edge)

    def candidates(self, predicate: Term, binding: dict) -> list[Edge]:
        if isinstance(predicate, Const):
            return self.by_label.get(predicate.text, [])
        bound = binding.get(predicate.name)
        if isinstance(bound, str):
            return self.by_label.get(bound, [])
        return self.edges


def _match_node(term: Term, node: Node, binding: dict) -> bool:
    if isinstance(term, Var):
        bound = binding.get(term.name)
        if bound is None:
            binding[term.name] = node
            return True
        return bound == node
    if term.is_iri:
        return node.is_entity and node.iri == term.text
    return node.label == term.text


def _match_label(term: Term, label: str, binding: dict) -> bool:
    if isinstance(term, Var):
        bound = binding.get(term.name)
        if bound is None:
            binding[term.name] = label
            return True
        return bound == label
    return term.text == label


def _match_atom(atom: TriplePattern, edge: Edge, binding: dict) -> dict | None:
    trial = dict(binding)
    if not _match_node(atom.subject, edge.source, trial):
        return None
    if not _match_label(atom.predicate, edge.label, trial):
        return None
    if not _match_node(atom.object, edge.target, trial):
        return None
    return trial


def _solutions(body, delta_index, delta_pool, full_pool, binding, pos=0):
    if pos == len(body):
        yield binding
        return
    atom = body[pos]
    pool = delta_pool if pos == delta_index else full_pool
    for edge in pool.candidates(atom.predicate, binding):
        extended = _match_atom(atom, edge, binding)
        if extended is not None:
            yield from _solutions(body, delta_index, delta_pool, full_pool, extended, pos + 1)


def _instantiate(head: TriplePattern, binding: dict, registry: _NodeRegistry) -> Edge | None:
    def node_value(term: Term) -> Node | None:
        if isinstance(term, Var):
            value = binding[term.name]
            return value if isinstance(value, Node) else None
        if term.is_iri:
            return registry.for_iri(term.text)
        return registry.for_label(term.text)

    source = node_value(head.subject)
    target = node_value(head.object)
    if isinstance(head.predicate, Var):
        label = binding[head.predicate.name]
        if not isinstance(label, str):
            return None
    else:
        label = head.predicate.text
    if source is None or target is None or not source.is_entity:
        return None
    return Edge(source, label, target)


def apply_rules(graph: Graph, rules: list[Rule]) -> Graph:
    """Close the graph under the rules and return the least fixpoint.

    The input graph is left untouched. Entity nodes named by head constants
    are created on demand. Safe rules over a finite graph always converge;
    the iteration cap only guards against engine bugs.
    """
    if not rules:
        return Graph(graph.nodes, graph.edges)
    all_edges = set(graph.edges)
    nodes = set(graph.nodes)
    registry = _NodeRegistry(nodes)
    delta = set(all_edges)
    for _ in range(ITERATION_CAP):
        if not delta:
            break
        full_pool = _EdgePool(all_edges)
        delta_pool = _EdgePool(delta)
        fresh = set()
        for rule in rules:
            for i in range(len(rule.body)):
                for binding in _solutions(rule.body, i, delta_pool, full_pool, {}):
                    edge = _instantiate(rule.head, binding, registry)
                    if edge is not None and edge not in all_edges:
                        fresh.add(edge)
        delta = fresh - all_edges
        all_edges |= delta
        for edge in delta:
            nodes.add(edge.source)
            nodes.add(edge.target)
    else:
        raise DivergenceError(
            f"forward chaining did not converge within {ITERATION_CAP} iterations"
        )
    return Graph(nodes, all_edges)


# --- Journey-pattern materialization ------------------------------------


def materialize_journey_patterns(graph: Graph, config: PatternConfig) -> list[CompositeDoc]:
    """Emit one composite document per (origin, destination) entity pair
    connected by 1..max_hops edges labeled with the path predicate.

    Blocks follow the shortest path (BFS, neighbors in bytewise label
    order), then come the attached entities reachable from path nodes via
    the attach predicates. A block carries the entity's literal-valued
    pairs plus its attach-predicate pairs; blocks that would be empty are
    dropped. Output is sorted by (origin label, destination label).
    """
    adjacency: dict[Node, list[Node]] = {}
    for node in graph.entity_nodes():
        targets = {
            e.target
            for e in graph.outgoing(node)
            if e.label == config.path_predicate and e.target.is_entity
        }
        if targets:
            adjacency[node] = sorted(targets, key=node_key)

    docs = []
    for origin in sorted(adjacency, key=node_key):
        parent: dict[Node, Node | None] = {origin: None}
        depth = {origin: 0}
        queue = deque([origin])
        while queue:
            current = queue.popleft()
            if depth[current] >= config.max_hops:
                continue
            for neighbor in adjacency.get(current, ()):
                if neighbor not in parent:
                    parent[neighbor] = current
                    depth[neighbor] = depth[current] + 1
                    queue.append(neighbor)
        for destination in sorted(parent, key=node_key):
            if destination is origin:
                continue
            path = []
            step: Node | None = destination
            while step is not None:
                path.append(step)
                step = parent[step]
            path.reverse()
            doc = _pattern_doc(graph, config, path)
            if doc is not None:
                docs.append(doc)
    return docs


def _pattern_doc(graph: Graph, config: PatternConfig, path: list[Node]) -> CompositeDoc | None:
    attach = set(config.attach_predicates)
    path_set = set(path)
    blocks = []
    attached: list[Node] = []
    seen: set[Node] = set()
    for node in path:
        literal_pairs = sorted(
            (e.label, e.target.label) for e in graph.outgoing(node) if not e.target.is_entity
        )
        attach_edges = [
            e for e in graph.outgoing(node) if e.label in attach and e.target.is_entity
        ]
        attach_pairs = sorted((e.label, e.target.label) for e in attach_edges)
        pairs = tuple(literal_pairs) + tuple(attach_pairs)
        if pairs:
            blocks.append(Block(node.iri or node.label, node.label, pairs))
        for target in sorted({e.target for e in attach_edges}, key=node_key):
            if target not in path_set and target not in seen:
                seen.add(target)
                attached.append(target)
    for node in attached:
        pairs = tuple(
            sorted((e.label, e.target.label) for e in graph.outgoing(node) if not e.target.is_entity)
        )
        if pairs:
            blocks.append(Block(node.iri or node.label, node.label, pairs))
    if not blocks:
        return None
    origin_iri = path[0].iri or ""
    return CompositeDoc(f"{namespace(origin_iri)}#{config.pattern_label}", tuple(blocks))
