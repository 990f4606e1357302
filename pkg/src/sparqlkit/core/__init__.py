"""Tokenizer, parser, serializer, and triple rewriting for the SPARQL subset."""

from .errors import (
    IllegalCharacter,
    InvalidPath,
    ParseError,
    SparqlKitError,
    TokenizeError,
    UnsupportedFeature,
    UnterminatedLiteral,
)
from .parser import parse
from .rewrite import TriplePath, expand_abbreviations, extract_triples, rewrite_triple
from .serialize import Style, serialize, to_tokens
from .syntax import (
    CountAggregate,
    Filter,
    OptionalGroup,
    OrderBy,
    PatternGroup,
    QueryAst,
    QueryForm,
    SolutionModifiers,
    SubGroup,
    Term,
    TermKind,
    TripleBlock,
    TriplePattern,
    UnionGroup,
)
from .tokens import Token, TokenKind, is_pname, join_tokens, token_texts, tokenize

__all__ = [
    "CountAggregate",
    "Filter",
    "IllegalCharacter",
    "InvalidPath",
    "OptionalGroup",
    "OrderBy",
    "ParseError",
    "PatternGroup",
    "QueryAst",
    "QueryForm",
    "SolutionModifiers",
    "SparqlKitError",
    "Style",
    "SubGroup",
    "Term",
    "TermKind",
    "Token",
    "TokenKind",
    "TokenizeError",
    "TripleBlock",
    "TriplePath",
    "TriplePattern",
    "UnionGroup",
    "UnsupportedFeature",
    "UnterminatedLiteral",
    "expand_abbreviations",
    "extract_triples",
    "is_pname",
    "join_tokens",
    "parse",
    "rewrite_triple",
    "serialize",
    "to_tokens",
    "token_texts",
    "tokenize",
]
