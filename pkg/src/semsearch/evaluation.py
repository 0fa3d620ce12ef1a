"""Precision / Recall / F-measure harness for query runs.

Relevance judgments are binary and document-level. Documents are keyed by
their content fingerprint (see index.doc_fingerprint), so judgments stay
valid across re-indexing. Degenerate denominators yield 0 together with an
explicit flag instead of an error, which keeps batch runs total.

File formats (UTF-8, tab-separated):

    queries:  query_id<TAB>query string
    qrels:    query_id<TAB>doc_fingerprint<TAB>relevance (0 or 1)
    report:   query_id<TAB>P<TAB>R<TAB>F<TAB>tp<TAB>fp<TAB>fn, 3-decimal
              ratios, one final AVG row (macro averages, summed counts)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import NotFoundError, ParseError
from .index import Index
from .query import evaluate, parse_query


def precision(tp: int, fp: int) -> tuple[float, bool]:
    """tp / (tp + fp); returns (0.0, True) when nothing was retrieved."""
    if tp + fp == 0:
        return 0.0, True
    return tp / (tp + fp), False


def recall(tp: int, fn: int) -> tuple[float, bool]:
    """tp / (tp + fn); returns (0.0, True) when nothing is relevant."""
    if tp + fn == 0:
        return 0.0, True
    return tp / (tp + fn), False


def f_measure(p: float, r: float) -> float:
    """Harmonic mean 2PR / (P + R); 0 when both inputs are 0."""
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


@dataclass(frozen=True, slots=True)
class Metrics:
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    fn: int
    precision_degenerate: bool = False
    recall_degenerate: bool = False


@dataclass(frozen=True, slots=True)
class RunResult:
    """The ordered, duplicate-free doc keys one query retrieved."""

    query_id: str
    retrieved: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.retrieved)) != len(self.retrieved):
            raise ValueError("retrieved doc keys must be unique")


@dataclass(frozen=True, slots=True)
class Qrels:
    """Relevance judgments: query id to the set of relevant doc keys."""

    entries: dict[str, frozenset[str]] = field(default_factory=dict)

    def relevant(self, query_id: str) -> frozenset[str]:
        relevant = self.entries.get(query_id)
        if relevant is None:
            raise NotFoundError(f"no relevance judgments for query {query_id!r}")
        return relevant


def evaluate_run(run: RunResult, qrels: Qrels) -> Metrics:
    """Set arithmetic between one run and its judgments."""
    relevant = qrels.relevant(run.query_id)
    retrieved = set(run.retrieved)
    tp = len(retrieved & relevant)
    fp = len(retrieved - relevant)
    fn = len(relevant - retrieved)
    p, p_degenerate = precision(tp, fp)
    r, r_degenerate = recall(tp, fn)
    return Metrics(p, r, f_measure(p, r), tp, fp, fn, p_degenerate, r_degenerate)


# --- Batch runs -----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ReportEntry:
    query_id: str
    metrics: Metrics | None
    error: str | None = None


@dataclass(frozen=True, slots=True)
class EvalReport:
    entries: tuple[ReportEntry, ...]

    @property
    def ok(self) -> bool:
        return all(entry.error is None for entry in self.entries)

    def to_tsv(self) -> str:
        lines = []
        scored = []
        for entry in self.entries:
            if entry.metrics is None:
                lines.append(f"{entry.query_id}\tERROR\t{entry.error}")
                continue
            m = entry.metrics
            lines.append(
                f"{entry.query_id}\t{m.precision:.3f}\t{m.recall:.3f}\t{m.f_measure:.3f}"
                f"\t{m.tp}\t{m.fp}\t{m.fn}"
            )
            scored.append(m)
        if scored:
            n = len(scored)
            avg_p = sum(m.precision for m in scored) / n
            avg_r = sum(m.recall for m in scored) / n
            avg_f = sum(m.f_measure for m in scored) / n
            lines.append(
                f"AVG\t{avg_p:.3f}\t{avg_r:.3f}\t{avg_f:.3f}"
                f"\t{sum(m.tp for m in scored)}\t{sum(m.fp for m in scored)}"
                f"\t{sum(m.fn for m in scored)}"
            )
        return "".join(line + "\n" for line in lines)


def parse_queries(text: str) -> list[tuple[str, str]]:
    """Parse `query_id<TAB>query string` lines; comments and blanks skipped."""
    queries = []
    seen = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError("expected 'query_id<TAB>query string'", line=lineno, source=line)
        query_id = parts[0].strip()
        if query_id in seen:
            raise ParseError(f"duplicate query id {query_id!r}", line=lineno, source=line)
        seen.add(query_id)
        queries.append((query_id, parts[1].strip()))
    return queries


def parse_qrels(text: str) -> Qrels:
    """Parse `query_id<TAB>doc_key<TAB>relevance` lines into judgments."""
    entries: dict[str, set[str]] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(
                "expected 'query_id<TAB>doc_key<TAB>relevance'", line=lineno, source=line
            )
        query_id, doc_key, relevance_text = (p.strip() for p in parts)
        try:
            relevance = int(relevance_text)
        except ValueError:
            raise ParseError(
                f"relevance must be an integer, got {relevance_text!r}", line=lineno, source=line
            ) from None
        bucket = entries.setdefault(query_id, set())
        if relevance > 0:
            bucket.add(doc_key)
    return Qrels({qid: frozenset(keys) for qid, keys in entries.items()})


def run_eval(index: Index, queries_path: str | Path, qrels_path: str | Path) -> EvalReport:
    """Evaluate every query in the file against the index and score it
    against the judgments; entries are ordered by query id."""
    queries = parse_queries(Path(queries_path).read_text(encoding="utf-8"))
    qrels = parse_qrels(Path(qrels_path).read_text(encoding="utf-8"))
    entries = []
    for query_id, query_text in sorted(queries):
        try:
            relation = evaluate(index, parse_query(query_text))
            retrieved = []
            seen = set()
            for row in relation.rows:
                key = index.fingerprint(row.doc_id)
                if key not in seen:
                    seen.add(key)
                    retrieved.append(key)
            run = RunResult(query_id, tuple(retrieved))
            entries.append(ReportEntry(query_id, evaluate_run(run, qrels)))
        except (NotFoundError, ParseError) as exc:
            entries.append(ReportEntry(query_id, None, str(exc)))
    return EvalReport(tuple(entries))
