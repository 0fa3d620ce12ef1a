"""Keyword query language and its relational evaluation.

Grammar (whitespace-separated, operators uppercase):

    query   := orExpr ('|' fieldList)?
    orExpr  := andExpr ('OR' andExpr)*
    andExpr := notExpr ('AND'? notExpr)*          juxtaposition means AND
    notExpr := 'NOT' notExpr
             | '(' orExpr ')'
             | (field ':')? (keyword | '"' phrase '"')
    field   := 'd' | 'e' | 'at' | 'v' | '*'

A bare keyword matches in any field; `f:word` binds a field; quoted
strings (and keywords that tokenize into several terms, such as
Port-Royal) are phrases, which require the terms to occur consecutively
inside a single field value. Boolean combination is document-scoped: a
statement document is one statement, a composite document is one whole
journey pattern. NOT complements against the queried index's documents.

The optional `| f1,f2` suffix selects projection columns; the default
projection is e,at,v.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import EmptyQueryError, QueryParseError, UnknownFieldError
from .index import FIELDS, Index, _token_tuple, doc_rows

ANY = "Any"
FIELD_BY_PREFIX = {"d": "Dataset", "e": "Entity", "at": "Attribute", "v": "Value", "*": ANY}
PREFIX_BY_FIELD = {full: short for short, full in FIELD_BY_PREFIX.items()}
DEFAULT_PROJECTION = ("Entity", "Attribute", "Value")

_ROW_ATTR = {"Dataset": "d", "Entity": "e", "Attribute": "at", "Value": "v"}


@dataclass(frozen=True, slots=True)
class Condition:
    """One keyword test: the term (or consecutive phrase) must occur in the field."""

    field: str
    terms: tuple[str, ...]

    def __post_init__(self):
        if self.field not in FIELDS and self.field != ANY:
            raise ValueError(f"unknown field: {self.field!r}")
        if not self.terms:
            raise ValueError("conditions need at least one term")


@dataclass(frozen=True, slots=True)
class Cond:
    condition: Condition


@dataclass(frozen=True, slots=True)
class And:
    children: tuple


@dataclass(frozen=True, slots=True)
class Or:
    children: tuple


@dataclass(frozen=True, slots=True)
class Not:
    child: object


@dataclass(frozen=True, slots=True)
class QueryAst:
    root: object
    projection: tuple[str, ...] = DEFAULT_PROJECTION


@dataclass(frozen=True, slots=True)
class Row:
    d: str
    e: str
    at: str
    v: str
    doc_id: int
    score: float = 0.0


@dataclass(frozen=True)
class Relation:
    """An ordered row set with named columns; rows are unique under the columns."""

    columns: tuple[str, ...]
    rows: tuple[Row, ...]
    index: Index | None = None


# --- Parsing -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    text: str
    offset: int


def _lex(text: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()|,":
            kind = {"(": "lparen", ")": "rparen", "|": "pipe", ",": "comma"}[ch]
            tokens.append(_Token(kind, ch, i))
            i += 1
            continue
        if ch == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise QueryParseError("unterminated phrase", offset=i, source=text)
            tokens.append(_Token("quoted", text[i + 1 : end], i))
            i = end + 1
            continue
        start = i
        while i < n and not text[i].isspace() and text[i] not in '()|,"':
            i += 1
        tokens.append(_Token("word", text[start:i], start))
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], source: str):
        self.tokens = tokens
        self.source = source
        self.pos = 0

    @property
    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def fail(self, message: str, token: _Token | None = None):
        token = token or self.peek
        raise QueryParseError(message, offset=token.offset, source=self.source)

    def or_expr(self):
        children = [self.and_expr()]
        while self.peek.kind == "word" and self.peek.text == "OR":
            self.advance()
            children.append(self.and_expr())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def and_expr(self):
        children = [self.not_expr()]
        while True:
            token = self.peek
            if token.kind == "word" and token.text == "AND":
                self.advance()
                children.append(self.not_expr())
            elif token.kind in ("quoted", "lparen") or (
                token.kind == "word" and token.text != "OR"
            ):
                children.append(self.not_expr())
            else:
                break
        return children[0] if len(children) == 1 else And(tuple(children))

    def not_expr(self):
        token = self.peek
        if token.kind == "word" and token.text == "NOT":
            self.advance()
            return Not(self.not_expr())
        if token.kind == "lparen":
            self.advance()
            inner = self.or_expr()
            if self.peek.kind != "rparen":
                self.fail("expected ')'")
            self.advance()
            return inner
        return self.condition()

    def condition(self):
        token = self.peek
        if token.kind == "quoted":
            self.advance()
            return Cond(self._make_condition(ANY, token.text, token))
        if token.kind != "word":
            self.fail(f"expected a keyword, got {token.text!r}" if token.text else "unexpected end of query")
        self.advance()
        text = token.text
        if ":" in text:
            prefix, _, rest = text.partition(":")
            field = FIELD_BY_PREFIX.get(prefix)
            if field is None:
                raise UnknownFieldError(
                    f"unknown field prefix {prefix!r} (expected one of d, e, at, v, *)",
                    offset=token.offset,
                    source=self.source,
                )
            if rest:
                return Cond(self._make_condition(field, rest, token))
            if self.peek.kind == "quoted":
                quoted = self.advance()
                return Cond(self._make_condition(field, quoted.text, quoted))
            self.fail("expected a keyword after the field prefix", token)
        return Cond(self._make_condition(ANY, text, token))

    def _make_condition(self, field: str, raw: str, token: _Token) -> Condition:
        terms = _token_tuple(raw)
        if not terms:
            self.fail(f"keyword {raw!r} contains no searchable terms", token)
        return Condition(field, terms)

    def field_list(self) -> tuple[str, ...]:
        fields = []
        while True:
            token = self.peek
            if token.kind != "word":
                self.fail("expected a projection field")
            field = FIELD_BY_PREFIX.get(token.text)
            if field is None or field == ANY:
                raise UnknownFieldError(
                    f"unknown projection field {token.text!r} (expected d, e, at or v)",
                    offset=token.offset,
                    source=self.source,
                )
            self.advance()
            fields.append(field)
            if self.peek.kind == "comma":
                self.advance()
                continue
            break
        return tuple(fields)


def parse_query(text: str) -> QueryAst:
    """Parse a query string; see the module docstring for the grammar."""
    tokens = _lex(text)
    if tokens[0].kind == "end":
        raise EmptyQueryError("empty query", offset=0, source=text)
    parser = _Parser(tokens, text)
    root = parser.or_expr()
    projection = DEFAULT_PROJECTION
    if parser.peek.kind == "pipe":
        parser.advance()
        projection = parser.field_list()
    if parser.peek.kind != "end":
        parser.fail(f"unexpected {parser.peek.text!r}")
    return QueryAst(root, projection)


# --- Evaluation -----------------------------------------------------------


def _contains_run(tokens: tuple[str, ...], terms: tuple[str, ...]) -> bool:
    span = len(terms)
    if span > len(tokens):
        return False
    for i in range(len(tokens) - span + 1):
        if tokens[i : i + span] == terms:
            return True
    return False


def _phrase_in_field(doc, field: str, terms: tuple[str, ...]) -> bool:
    for f, value in doc.field_values:
        if f == field and _contains_run(_token_tuple(value), terms):
            return True
    return False


def condition_docs(index: Index, condition: Condition) -> frozenset[int]:
    """Doc ids satisfying one condition, straight from the posting lists.

    Phrases intersect the per-term postings, then re-tokenize the stored
    values of the candidates to check that the terms run consecutively
    inside a single field value.
    """
    fields = FIELDS if condition.field == ANY else (condition.field,)
    matched: set[int] = set()
    if len(condition.terms) == 1:
        term = condition.terms[0]
        for field in fields:
            matched.update(index.postings(field, term))
        return frozenset(matched)
    for field in fields:
        candidates: set[int] | None = None
        for term in condition.terms:
            ids = index.postings(field, term)
            candidates = set(ids) if candidates is None else candidates & set(ids)
            if not candidates:
                break
        if not candidates:
            continue
        for doc_id in candidates:
            if doc_id not in matched and _phrase_in_field(
                index.docs[doc_id], field, condition.terms
            ):
                matched.add(doc_id)
    return frozenset(matched)


def _docs_for(index: Index, node, memo: dict) -> frozenset[int]:
    cached = memo.get(node)
    if cached is not None:
        return cached
    if isinstance(node, Cond):
        result = condition_docs(index, node.condition)
    elif isinstance(node, And):
        result = _docs_for(index, node.children[0], memo)
        for child in node.children[1:]:
            result = result & _docs_for(index, child, memo)
    elif isinstance(node, Or):
        result = frozenset().union(*(_docs_for(index, c, memo) for c in node.children))
    elif isinstance(node, Not):
        result = frozenset(range(index.doc_count)) - _docs_for(index, node.child, memo)
    else:
        raise TypeError(f"not a query node: {node!r}")
    memo[node] = result
    return result


def _rows_for_docs(index: Index, doc_ids) -> tuple[Row, ...]:
    rows = []
    for doc_id in sorted(doc_ids):
        for d, e, at, v in doc_rows(index.docs[doc_id]):
            rows.append(Row(d, e, at, v, doc_id))
    return tuple(rows)


def select(index: Index, condition: Condition) -> Relation:
    """All rows of the documents satisfying one condition (score 1)."""
    docs = condition_docs(index, condition)
    rows = tuple(replace(r, score=1.0) for r in _rows_for_docs(index, docs))
    return Relation(FIELDS, rows, index)


def _normalize_field(field: str) -> str:
    if field in FIELDS:
        return field
    full = FIELD_BY_PREFIX.get(field)
    if full is None or full == ANY:
        raise ValueError(f"unknown projection field: {field!r}")
    return full


def project(relation: Relation, fields) -> Relation:
    """Keep the named columns in order, deduplicating rows afterwards
    (first occurrence wins)."""
    columns = tuple(_normalize_field(f) for f in fields)
    if not columns:
        raise ValueError("projection requires at least one field")
    seen = set()
    kept = []
    for row in relation.rows:
        key = tuple(getattr(row, _ROW_ATTR[c]) for c in columns)
        if key not in seen:
            seen.add(key)
            kept.append(row)
    return Relation(columns, tuple(kept), relation.index)


def _collect_leaves(node, out: list[Condition]) -> None:
    if isinstance(node, Cond):
        if node.condition not in out:
            out.append(node.condition)
    elif isinstance(node, (And, Or)):
        for child in node.children:
            _collect_leaves(child, out)
    elif isinstance(node, Not):
        _collect_leaves(node.child, out)


def rank(relation: Relation, ast: QueryAst) -> Relation:
    """Score each row by how many distinct leaf conditions its document
    satisfies; order by score descending, ties by (entity, doc id)."""
    if relation.index is None:
        raise ValueError("relation is not attached to an index")
    leaves: list[Condition] = []
    _collect_leaves(ast.root, leaves)
    doc_sets = [condition_docs(relation.index, leaf) for leaf in leaves]
    scored = [
        replace(row, score=float(sum(1 for s in doc_sets if row.doc_id in s)))
        for row in relation.rows
    ]
    scored.sort(key=lambda r: (-r.score, r.e, r.doc_id))
    return Relation(relation.columns, tuple(scored), relation.index)


def evaluate(index: Index, ast: QueryAst) -> Relation:
    """Evaluate a parsed query: boolean document algebra over posting
    lists, projection, then ranking."""
    docs = _docs_for(index, ast.root, {})
    relation = Relation(FIELDS, _rows_for_docs(index, docs), index)
    return rank(project(relation, ast.projection), ast)


def row_values(row: Row, columns) -> tuple[str, ...]:
    """The row's values for the given columns, in order."""
    return tuple(getattr(row, _ROW_ATTR[_normalize_field(c)]) for c in columns)
