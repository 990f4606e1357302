"""sparqlkit: SPARQL corpus engineering and evaluation toolkit.

Pipeline stages: parse/canonicalize a practical SPARQL subset, generate
order-sensitive denoising pretraining pairs (TOC/MLM/TFC/SOC), verbalize
IRIs to readable labels and back, build fine-tuning inputs, and score
predictions (query match, answer F1, triplet-level error taxonomy).
"""

from .core import (
    QueryAst,
    Style,
    Term,
    TriplePattern,
    expand_abbreviations,
    extract_triples,
    parse,
    rewrite_triple,
    serialize,
    tokenize,
)
from .corruption import (
    CorruptionConfig,
    Objective,
    PretrainPair,
    corrupt_mlm,
    corrupt_soc,
    corrupt_tfc,
    corrupt_toc,
    line_rng,
    reconstruct_mlm,
    sample_permutation,
)
from .corpus import Example, Scenario, build_input, build_pretrain_corpus, read_dataset
from .evaluate import (
    EvalRecord,
    EvalReport,
    ErrorClass,
    MatchMode,
    aggregate_report,
    answer_f1,
    classify_error,
    query_match,
)
from .labels import LabelMap, load_label_map, normalize_label, verbalize, deverbalize

__version__ = "0.1.0"

__all__ = [
    "CorruptionConfig",
    "ErrorClass",
    "EvalRecord",
    "EvalReport",
    "Example",
    "LabelMap",
    "MatchMode",
    "Objective",
    "PretrainPair",
    "QueryAst",
    "Scenario",
    "Style",
    "Term",
    "TriplePattern",
    "aggregate_report",
    "answer_f1",
    "build_input",
    "build_pretrain_corpus",
    "classify_error",
    "corrupt_mlm",
    "corrupt_soc",
    "corrupt_tfc",
    "corrupt_toc",
    "deverbalize",
    "expand_abbreviations",
    "extract_triples",
    "line_rng",
    "load_label_map",
    "normalize_label",
    "parse",
    "query_match",
    "read_dataset",
    "reconstruct_mlm",
    "rewrite_triple",
    "sample_permutation",
    "serialize",
    "tokenize",
    "verbalize",
]
