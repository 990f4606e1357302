"""Regex-based tokenizer for the SPARQL subset.

Token classes: keyword (any bare word), variable, prefixed name, IRI
reference, literal (strings with optional language/datatype suffix,
numbers), punctuation. Comments (``#`` to end of line) are dropped.

Joining the token surfaces with single spaces and re-tokenizing yields the
same token sequence; that normal form ("token join") is the comparison
surface used by the corruption and verbalization stages.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import IllegalCharacter, UnterminatedLiteral


class TokenKind(Enum):
    KEYWORD = "keyword"
    VARIABLE = "variable"
    PNAME = "prefixed-name"
    IRI = "iri-ref"
    LITERAL = "literal"
    PUNCT = "punctuation"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    offset: int  # character offset into the source text

    def __repr__(self) -> str:  # compact, for parser error messages
        return f"Token({self.kind.value}, {self.text!r})"


# Prefixed-name pieces are shared with the verbalizer, which must know
# whether a substituted label still lexes as a single prefixed name.
PN_PREFIX = r"(?:[^\W\d][\w.-]*)?"
PN_LOCAL = r"(?:[\w-](?:[\w.-]*[\w-])?)?"
PNAME_RE = re.compile(rf"{PN_PREFIX}:{PN_LOCAL}")

_STRING = r"""(?:"(?:\\.|[^"\\])*"|'(?:\\.|[^'\\])*')"""
_LANGTAG = r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"
_DTYPE = rf"\^\^(?:<[^<>\s]*>|{PN_PREFIX}:{PN_LOCAL})"

_MASTER_RE = re.compile(
    "|".join(
        f"(?P<{name}>{pattern})"
        for name, pattern in [
            ("WS", r"\s+"),
            ("COMMENT", r"#[^\n]*"),
            ("STRING", rf"{_STRING}(?:{_LANGTAG}|{_DTYPE})?"),
            ("IRI", r"<[^<>\s]*>"),
            ("VAR", r"[?$]\w+"),
            ("NUMBER", r"[+-]?(?:\d+\.\d+|\.\d+|\d+)(?:[eE][+-]?\d+)?"),
            ("PNAME", rf"{PN_PREFIX}:{PN_LOCAL}"),
            ("WORD", r"[^\W\d]\w*"),
            ("PUNCT", r"<=|>=|!=|&&|\|\||[{}()\[\].,;=<>!+\-*/^?|]"),
        ]
    )
)

_KIND_BY_GROUP = {
    "STRING": TokenKind.LITERAL,
    "IRI": TokenKind.IRI,
    "VAR": TokenKind.VARIABLE,
    "NUMBER": TokenKind.LITERAL,
    "PNAME": TokenKind.PNAME,
    "WORD": TokenKind.KEYWORD,
    "PUNCT": TokenKind.PUNCT,
}


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def tokenize(query_text: str) -> list[Token]:
    """Split ``query_text`` into classified tokens.

    Raises IllegalCharacter (with byte offset) on unexpected input, including
    empty/whitespace-only text, and UnterminatedLiteral on an unclosed quote.
    """
    tokens: list[Token] = []
    pos = 0
    n = len(query_text)
    while pos < n:
        m = _MASTER_RE.match(query_text, pos)
        if m is None:
            ch = query_text[pos]
            if ch in "\"'":
                raise UnterminatedLiteral(
                    "unterminated string literal", _byte_offset(query_text, pos)
                )
            raise IllegalCharacter(
                f"illegal character {ch!r}", _byte_offset(query_text, pos)
            )
        group = m.lastgroup
        assert group is not None
        if group not in ("WS", "COMMENT"):
            tokens.append(Token(_KIND_BY_GROUP[group], m.group(), pos))
        pos = m.end()
    if not tokens:
        raise IllegalCharacter("query text is empty", 0)
    return tokens


def token_texts(query_text: str) -> list[str]:
    return [t.text for t in tokenize(query_text)]


def join_tokens(tokens: list[Token] | list[str]) -> str:
    """Single-space token join; the tokenizer's normal form."""
    return " ".join(t.text if isinstance(t, Token) else t for t in tokens)


def is_pname(text: str) -> bool:
    return PNAME_RE.fullmatch(text) is not None
