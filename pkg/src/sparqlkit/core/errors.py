"""Exception types raised by the tokenizer, parser, and triple rewriting."""

from __future__ import annotations


class SparqlKitError(Exception):
    """Base class for all errors raised by this package."""


class TokenizeError(SparqlKitError):
    """Lexical error. ``byte_offset`` locates the problem in the UTF-8 encoding."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class IllegalCharacter(TokenizeError):
    pass


class UnterminatedLiteral(TokenizeError):
    pass


class ParseError(SparqlKitError):
    """Syntax error. ``token_index`` points at the offending token."""

    def __init__(self, message: str, token_index: int, expected: str | None = None):
        detail = f"{message} at token {token_index}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.token_index = token_index
        self.expected = expected


class UnsupportedFeature(ParseError):
    """Recognized SPARQL syntax that lies outside the supported subset."""

    def __init__(self, feature: str, token_index: int):
        super().__init__(f"unsupported feature: {feature}", token_index)
        self.feature = feature


class InvalidPath(SparqlKitError):
    """A triple location handle does not address a triple in this AST."""
