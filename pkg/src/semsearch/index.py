"""Inverted indexes over statement and journey-pattern documents.

Two index kinds share one structure: BASIC holds one document per
statement (fields Dataset, Entity, Attribute, Value, one value each),
RULES holds one document per composite journey pattern (the same fields,
repeated). Field values are tokenized by lowercasing, folding accents to
their ASCII base letters and splitting on runs of non-alphanumerics; a
posting list is the ascending doc-id list for one (field, term) pair.

The on-disk layout under an index directory is deterministic:

    manifest.json   {"doc_count": N, "format_version": 1, "kind": "BASIC"}
    docs.jsonl      one {"fields": [["Dataset", ...], ...], "id": n} per line
    postings.tsv    field<TAB>term<TAB>id,id,id  sorted by field then term
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .errors import IndexFormatError, IndexVersionError
from .graph import Graph
from .inference import CompositeDoc

FORMAT_VERSION = 1
FIELDS = ("Dataset", "Entity", "Attribute", "Value")

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


@lru_cache(maxsize=1 << 16)
def _token_tuple(text: str) -> tuple[str, ...]:
    folded = unicodedata.normalize("NFKD", text)
    folded = "".join(ch for ch in folded if not unicodedata.combining(ch))
    return tuple(_WORD_RE.findall(folded.lower()))


def tokenize(text: str) -> list[str]:
    """Lowercased, accent-folded terms in order, duplicates preserved."""
    return list(_token_tuple(text))


@dataclass(frozen=True, slots=True)
class StatementDoc:
    """One statement as an indexable document; entity is the dataset's local name."""

    doc_id: int
    dataset: str
    entity: str
    attribute: str
    value: str

    def to_indexed(self) -> IndexedDoc:
        return IndexedDoc(
            self.doc_id,
            (
                ("Dataset", self.dataset),
                ("Entity", self.entity),
                ("Attribute", self.attribute),
                ("Value", self.value),
            ),
        )


@dataclass(frozen=True, slots=True)
class IndexedDoc:
    """A stored document: ordered (field, value) occurrences."""

    doc_id: int
    field_values: tuple[tuple[str, str], ...]


def doc_rows(doc: IndexedDoc) -> list[tuple[str, str, str, str]]:
    """The (dataset, entity, attribute, value) rows a document contributes.

    A statement document yields exactly one row; a composite document
    yields one row per attribute/value pair, under its enclosing block's
    dataset and entity.
    """
    rows = []
    dataset = entity = ""
    attribute: str | None = None
    for field, value in doc.field_values:
        if field == "Dataset":
            dataset = value
            entity = ""
        elif field == "Entity":
            entity = value
        elif field == "Attribute":
            attribute = value
        elif field == "Value":
            rows.append((dataset, entity, attribute or "", value))
            attribute = None
    return rows


def doc_fingerprint(doc: IndexedDoc) -> str:
    """Stable 16-hex-digit key derived from the document's fields only,
    so relevance judgments survive re-indexing."""
    payload = json.dumps(
        [list(fv) for fv in doc.field_values], ensure_ascii=False, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class Index:
    """Immutable document store plus per-(field, term) posting lists."""

    __slots__ = ("kind", "docs", "_postings")

    def __init__(self, kind: str, docs: Sequence[IndexedDoc]):
        if kind not in ("BASIC", "RULES"):
            raise ValueError(f"unknown index kind: {kind!r}")
        self.kind = kind
        self.docs: tuple[IndexedDoc, ...] = tuple(docs)
        for position, doc in enumerate(self.docs):
            if doc.doc_id != position:
                raise ValueError(f"doc ids must be dense from 0, got {doc.doc_id} at {position}")
        postings: dict[tuple[str, str], list[int]] = {}
        for doc in self.docs:
            seen = set()
            for field, value in doc.field_values:
                for term in _token_tuple(value):
                    key = (field, term)
                    if key not in seen:
                        seen.add(key)
                        postings.setdefault(key, []).append(doc.doc_id)
        self._postings = postings

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Index):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.docs == other.docs
            and self._postings == other._postings
        )

    def __repr__(self) -> str:
        return f"Index(kind={self.kind}, docs={len(self.docs)}, terms={len(self._postings)})"

    @property
    def doc_count(self) -> int:
        return len(self.docs)

    def postings(self, field: str, term: str) -> list[int]:
        """Ascending doc ids whose field contains the term; callers must not
        mutate the returned list."""
        return self._postings.get((field, term), [])

    def terms(self, field: str) -> list[str]:
        """Sorted term dictionary for one field."""
        return sorted(term for f, term in self._postings if f == field)

    def fingerprint(self, doc_id: int) -> str:
        return doc_fingerprint(self.docs[doc_id])


def index_basic(graph: Graph) -> Index:
    """One statement document per edge, ordered by (dataset, attribute, value).

    The caller is responsible for closing the graph under inference first;
    indexing takes edges as they are.
    """
    keyed = sorted(
        (
            (e.source.iri or "", e.label, e.target.label, e.target.kind, e.source.label)
            for e in graph.edges
        ),
    )
    docs = [
        StatementDoc(i, dataset, entity, attribute, value).to_indexed()
        for i, (dataset, attribute, value, _kind, entity) in enumerate(keyed)
    ]
    return Index("BASIC", docs)


def index_rules(docs: Iterable[CompositeDoc]) -> Index:
    """One document per composite journey pattern, ids in input order."""
    indexed = []
    for i, doc in enumerate(docs):
        fields: list[tuple[str, str]] = [("Dataset", doc.pattern_dataset)]
        for block in doc.blocks:
            fields.append(("Dataset", block.dataset))
            fields.append(("Entity", block.entity))
            for attribute, value in block.pairs:
                fields.append(("Attribute", attribute))
                fields.append(("Value", value))
        indexed.append(IndexedDoc(i, tuple(fields)))
    return Index("RULES", indexed)


# --- Persistence --------------------------------------------------------


def write_index(index: Index, directory: str | Path) -> None:
    """Persist an index; output bytes are identical for identical indexes."""
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "doc_count": index.doc_count,
        "format_version": FORMAT_VERSION,
        "kind": index.kind,
    }
    (path / "manifest.json").write_bytes(
        (json.dumps(manifest, sort_keys=True) + "\n").encode("utf-8")
    )
    doc_lines = []
    for doc in index.docs:
        doc_lines.append(
            json.dumps(
                {"fields": [list(fv) for fv in doc.field_values], "id": doc.doc_id},
                ensure_ascii=False,
                separators=(",", ":"),
                sort_keys=True,
            )
        )
    (path / "docs.jsonl").write_bytes(("".join(line + "\n" for line in doc_lines)).encode("utf-8"))
    posting_lines = []
    for (field, term), ids in sorted(index._postings.items()):
        posting_lines.append(f"{field}\t{term}\t{','.join(map(str, ids))}")
    (path / "postings.tsv").write_bytes(
        ("".join(line + "\n" for line in posting_lines)).encode("utf-8")
    )


def read_index(directory: str | Path) -> Index:
    """Load an index written by write_index, verifying structure and postings."""
    path = Path(directory)
    manifest = _read_manifest(path / "manifest.json")
    docs = _read_docs(path / "docs.jsonl", manifest["doc_count"])
    index = Index(manifest["kind"], docs)
    _verify_postings(path / "postings.tsv", index)
    return index


def _read_manifest(path: Path) -> dict:
    if not path.exists():
        raise IndexFormatError(path.name, "missing manifest")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise IndexFormatError(path.name, f"unreadable manifest: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise IndexVersionError(path.name, f"unsupported format version {version!r}")
    kind = manifest.get("kind")
    if kind not in ("BASIC", "RULES"):
        raise IndexFormatError(path.name, f"unknown index kind {kind!r}")
    if not isinstance(manifest.get("doc_count"), int):
        raise IndexFormatError(path.name, "doc_count must be an integer")
    return manifest


def _read_docs(path: Path, expected_count: int) -> list[IndexedDoc]:
    if not path.exists():
        raise IndexFormatError(path.name, "missing document store")
    docs = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                record = json.loads(line)
                doc = IndexedDoc(
                    record["id"], tuple((str(f), str(v)) for f, v in record["fields"])
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise IndexFormatError(path.name, f"bad document on line {lineno}: {exc}") from exc
            docs.append(doc)
    if len(docs) != expected_count:
        raise IndexFormatError(
            path.name, f"expected {expected_count} documents, found {len(docs)}"
        )
    return docs


def _verify_postings(path: Path, index: Index) -> None:
    if not path.exists():
        raise IndexFormatError(path.name, "missing postings file")
    stored: dict[tuple[str, str], list[int]] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise IndexFormatError(path.name, f"malformed posting on line {lineno}")
            field, term, ids_text = parts
            try:
                ids = [int(x) for x in ids_text.split(",")] if ids_text else []
            except ValueError as exc:
                raise IndexFormatError(path.name, f"bad doc id on line {lineno}") from exc
            stored[(field, term)] = ids
    if stored != index._postings:
        raise IndexFormatError(path.name, "postings do not match the document store")
