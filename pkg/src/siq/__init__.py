"""Semantic image querying over object-detector output.

Detections (labeled bounding boxes per video frame or image) are ingested
into a deduplicating hypergraph store; spatial-relational queries such as
``FIND FRAMES WHERE person INSIDE car`` are answered by compiling the query
to a subgraph pattern, backward-chaining the spatial-relation rules the
pattern needs, and matching.  A brute-force oracle evaluates the same
queries straight over the detection lists to cross-check the engine.
"""

from .atomese import AtomTree
from .chainer import ChainSession, LogEntry, backward_chain, forward_chain
from .engine import BoxInfo, Engine, QueryResult, load_goal, natural_key
from .errors import (
    AliasClassMismatchError,
    AtomeseError,
    CyclicRulesError,
    EmptyLinkError,
    EmptyQueryError,
    FixpointLimitError,
    FormatError,
    GeometryError,
    IllFormedPatternError,
    IndentError,
    NodeNameError,
    NotNumericError,
    QuerySyntaxError,
    RangeError,
    SiqError,
    UnknownAtomError,
    UnknownRelationError,
)
from .ingest import (
    BBox,
    Detection,
    DetectionFile,
    build_graph,
    decode_graph,
    ingest_file,
    parse_detections,
    read_detection_file,
)
from .matcher import (
    BindRule,
    EvalArg,
    Grounding,
    NumericEvaluator,
    Pattern,
    as_number,
    eval_clause,
    execute_bind,
    match,
    not_identical,
)
from .oracle import bb_names, oracle_relation, oracle_retrieve
from .rules import (
    EVALUATORS,
    PREDICATE_NAME,
    ClassRef,
    CompiledQuery,
    QueryAST,
    QueryClause,
    RelKind,
    RelParams,
    builtin_rules,
    compile_query,
    load_rules,
    parse_query,
)
from .store import Atom, AtomId, AtomStore, canonical_number

__version__ = "0.1.0"

__all__ = [
    "Atom", "AtomId", "AtomStore", "canonical_number",
    "AtomTree", "BBox", "Detection", "DetectionFile",
    "parse_detections", "read_detection_file", "build_graph", "ingest_file",
    "decode_graph",
    "Pattern", "Grounding", "BindRule", "EvalArg", "as_number",
    "NumericEvaluator", "not_identical",
    "match", "eval_clause", "execute_bind",
    "RelKind", "RelParams", "PREDICATE_NAME", "EVALUATORS",
    "ClassRef", "QueryClause", "QueryAST", "CompiledQuery",
    "builtin_rules", "load_rules", "parse_query", "compile_query",
    "forward_chain", "backward_chain", "ChainSession", "LogEntry",
    "oracle_relation", "oracle_retrieve", "bb_names",
    "Engine", "QueryResult", "BoxInfo", "load_goal", "natural_key",
    "SiqError", "UnknownAtomError", "AtomeseError", "IndentError",
    "NodeNameError", "EmptyLinkError", "FormatError", "GeometryError",
    "RangeError", "IllFormedPatternError", "NotNumericError",
    "FixpointLimitError", "CyclicRulesError", "QuerySyntaxError",
    "UnknownRelationError", "AliasClassMismatchError", "EmptyQueryError",
]
