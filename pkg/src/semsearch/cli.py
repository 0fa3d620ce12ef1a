"""Command-line pipeline: ingest, infer, index, query/repl, eval.

Exit codes: 0 success, 2 user/input error, 3 environment or I/O error.
Diagnostics go to stderr; data goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    IndexFormatError,
    NotFoundError,
    ParseError,
    QueryParseError,
    RuleSafetyError,
    SemSearchError,
)
from .evaluation import run_eval
from .graph import Graph, build_graph, parse_ntriples, to_ntriples
from .index import Index, index_basic, index_rules, read_index, write_index
from .inference import PatternConfig, apply_rules, materialize_journey_patterns, parse_rules
from .query import PREFIX_BY_FIELD, Relation, evaluate, parse_query, row_values

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """Parsed flags shared by the pipeline commands."""

    input_paths: tuple[str, ...] = ()
    rules_path: str | None = None
    index_dir: str = ""
    index_kind: str = "basic"
    output_format: str = "tsv"


def _load_graph(config: PipelineConfig) -> tuple[Graph, Graph, list[PatternConfig]]:
    """Parse inputs and rules; returns (base graph, closed graph, patterns)."""
    triples = []
    for path in config.input_paths:
        triples.extend(parse_ntriples(Path(path).read_text(encoding="utf-8")))
    base = build_graph(triples)
    rules, patterns = [], []
    if config.rules_path:
        rules, patterns = parse_rules(Path(config.rules_path).read_text(encoding="utf-8"))
    closed = apply_rules(base, rules) if rules else base
    return base, closed, patterns


def cmd_infer(config: PipelineConfig, output_path: str) -> int:
    base, closed, _ = _load_graph(config)
    Path(output_path).write_bytes(to_ntriples(closed).encode("utf-8"))
    print(f"input edges: {len(base.edges)}", file=sys.stderr)
    print(f"added: {len(closed.edges) - len(base.edges)}", file=sys.stderr)
    return EXIT_OK


def cmd_index(config: PipelineConfig) -> int:
    _, closed, patterns = _load_graph(config)
    if config.index_kind == "basic":
        index = index_basic(closed)
    else:
        docs = [doc for pattern in patterns for doc in materialize_journey_patterns(closed, pattern)]
        index = index_rules(docs)
    write_index(index, config.index_dir)
    print(f"docs: {index.doc_count}", file=sys.stderr)
    return EXIT_OK


def _print_relation(relation: Relation, output_format: str) -> None:
    if output_format == "json":
        for row in relation.rows:
            record = dict(
                zip(
                    (PREFIX_BY_FIELD[c] for c in relation.columns),
                    row_values(row, relation.columns),
                )
            )
            print(json.dumps(record, ensure_ascii=False))
    else:
        for row in relation.rows:
            print("\t".join(row_values(row, relation.columns)))


def _print_query_error(exc: QueryParseError, query: str) -> None:
    print(f"query error: {exc.reason}", file=sys.stderr)
    if exc.offset is not None:
        print(f"  {query}", file=sys.stderr)
        print(f"  {' ' * exc.offset}^", file=sys.stderr)


def cmd_query(config: PipelineConfig, query: str) -> int:
    index = read_index(config.index_dir)
    try:
        ast = parse_query(query)
    except QueryParseError as exc:
        _print_query_error(exc, query)
        return EXIT_INPUT
    relation = evaluate(index, ast)
    _print_relation(relation, config.output_format)
    print(f"rows: {len(relation.rows)}", file=sys.stderr)
    return EXIT_OK


def cmd_repl(config: PipelineConfig) -> int:
    index = read_index(config.index_dir)
    print(f"index: {config.index_dir} ({index.kind}, {index.doc_count} docs)", file=sys.stderr)
    while True:
        print("semsearch> ", end="", file=sys.stderr, flush=True)
        line = sys.stdin.readline()
        if not line:
            return EXIT_OK
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            return EXIT_OK
        if line.startswith(":index"):
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                print("usage: :index DIR", file=sys.stderr)
                continue
            try:
                index = read_index(parts[1])
                print(f"index: {parts[1]} ({index.kind}, {index.doc_count} docs)", file=sys.stderr)
            except (OSError, IndexFormatError) as exc:
                print(f"error: {exc}", file=sys.stderr)
            continue
        try:
            relation = evaluate(index, parse_query(line))
        except QueryParseError as exc:
            _print_query_error(exc, line)
            continue
        _print_relation(relation, config.output_format)
        print(f"rows: {len(relation.rows)}", file=sys.stderr)


def cmd_eval(config: PipelineConfig, queries_path: str, qrels_path: str) -> int:
    index = read_index(config.index_dir)
    report = run_eval(index, queries_path, qrels_path)
    sys.stdout.write(report.to_tsv())
    if not report.ok:
        for entry in report.entries:
            if entry.error is not None:
                print(f"error: {entry.query_id}: {entry.error}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semsearch",
        description="Entity-retrieval search over triples: infer, index, query, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    infer = sub.add_parser("infer", help="run the rules to fixpoint and export canonical triples")
    infer.add_argument("inputs", nargs="+", metavar="TRIPLES")
    infer.add_argument("--rules", metavar="PATH")
    infer.add_argument("--output", "-o", required=True, metavar="PATH")

    index = sub.add_parser("index", help="build and persist an index")
    index.add_argument("inputs", nargs="+", metavar="TRIPLES")
    index.add_argument("--rules", metavar="PATH")
    index.add_argument("--index", required=True, metavar="DIR")
    index.add_argument("--kind", choices=("basic", "rules"), default="basic")

    query = sub.add_parser("query", help="evaluate one query against an index")
    query.add_argument("query", metavar="QUERY")
    query.add_argument("--index", required=True, metavar="DIR")
    query.add_argument("--format", choices=("tsv", "json"), default="tsv")

    repl = sub.add_parser("repl", help="interactive query loop (:quit to exit)")
    repl.add_argument("--index", required=True, metavar="DIR")
    repl.add_argument("--format", choices=("tsv", "json"), default="tsv")

    evaluate_ = sub.add_parser("eval", help="score queries against relevance judgments")
    evaluate_.add_argument("--index", required=True, metavar="DIR")
    evaluate_.add_argument("--queries", required=True, metavar="PATH")
    evaluate_.add_argument("--qrels", required=True, metavar="PATH")

    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "infer":
        config = PipelineConfig(input_paths=tuple(args.inputs), rules_path=args.rules)
        return cmd_infer(config, args.output)
    if args.command == "index":
        config = PipelineConfig(
            input_paths=tuple(args.inputs),
            rules_path=args.rules,
            index_dir=args.index,
            index_kind=args.kind,
        )
        return cmd_index(config)
    if args.command == "query":
        config = PipelineConfig(index_dir=args.index, output_format=args.format)
        return cmd_query(config, args.query)
    if args.command == "repl":
        config = PipelineConfig(index_dir=args.index, output_format=args.format)
        return cmd_repl(config)
    if args.command == "eval":
        config = PipelineConfig(index_dir=args.index)
        return cmd_eval(config, args.queries, args.qrels)
    raise AssertionError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ParseError, RuleSafetyError, NotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, IndexFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SemSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
