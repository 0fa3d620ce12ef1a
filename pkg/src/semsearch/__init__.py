"""Entity-retrieval semantic search over RDF-style triples.

The pipeline: parse N-Triples into a labeled directed graph, close it
under Horn rules, build inverted indexes over statement and journey-pattern
documents, evaluate keyword queries through a selection/projection algebra,
and score runs with Precision / Recall / F-measure.
"""

from .errors import (
    DivergenceError,
    EmptyQueryError,
    IndexFormatError,
    IndexVersionError,
    NotFoundError,
    NTriplesError,
    ParseError,
    QueryParseError,
    RuleParseError,
    RuleSafetyError,
    SemSearchError,
    UnknownFieldError,
)
from .evaluation import (
    EvalReport,
    Metrics,
    Qrels,
    RunResult,
    evaluate_run,
    f_measure,
    precision,
    recall,
    run_eval,
)
from .graph import (
    Dataset,
    Edge,
    EntityDescription,
    Graph,
    Node,
    Triple,
    build_graph,
    datasets,
    entity_description,
    local_name,
    parse_ntriples,
    to_ntriples,
)
from .index import (
    Index,
    IndexedDoc,
    StatementDoc,
    doc_fingerprint,
    doc_rows,
    index_basic,
    index_rules,
    read_index,
    tokenize,
    write_index,
)
from .inference import (
    Block,
    CompositeDoc,
    PatternConfig,
    Rule,
    TriplePattern,
    apply_rules,
    materialize_journey_patterns,
    parse_rules,
)
from .query import (
    And,
    Cond,
    Condition,
    Not,
    Or,
    QueryAst,
    Relation,
    Row,
    evaluate,
    parse_query,
    project,
    rank,
    select,
)

__version__ = "0.1.0"
