"""AST node types for the supported SPARQL subset.

Everything is a frozen dataclass holding tuples, so parsed queries are
immutable, hashable, and safe to share across threads. Rewrites produce new
trees (see ``rewrite``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union


class TermKind(Enum):
    VARIABLE = "variable"
    PNAME = "prefixed-iri"
    IRI = "full-iri"
    LITERAL = "literal"


_ECHAR_DECODE = {
    "t": "\t",
    "n": "\n",
    "r": "\r",
    "b": "\b",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}
_ECHAR_ENCODE = {"\t": "\\t", "\n": "\\n", "\r": "\\r", "\b": "\\b", "\f": "\\f", '"': '\\"', "\\": "\\\\"}


def unescape_string(raw: str) -> str:
    """Decode the SPARQL escape sequences of a quoted string body."""
    out: list[str] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            if nxt in _ECHAR_DECODE:
                out.append(_ECHAR_DECODE[nxt])
                i += 2
                continue
            if nxt in ("u", "U"):
                width = 4 if nxt == "u" else 8
                hexpart = raw[i + 2 : i + 2 + width]
                if len(hexpart) == width:
                    try:
                        out.append(chr(int(hexpart, 16)))
                        i += 2 + width
                        continue
                    except ValueError:
                        pass
            # unknown escape: keep the backslash literally
        out.append(ch)
        i += 1
    return "".join(out)


def escape_string(value: str) -> str:
    return "".join(_ECHAR_ENCODE.get(ch, ch) for ch in value)


@dataclass(frozen=True)
class Term:
    """One atom of a triple pattern: variable, prefixed IRI, full IRI, or literal.

    ``text`` holds the variable name (without sigil), the whole prefixed name,
    the IRI (without angle brackets), or the literal's lexical value
    (unescaped for quoted strings). ``suffix`` carries a literal's language
    tag or datatype annotation verbatim (``@en`` / ``^^xsd:integer``).
    The variable sigil is kept for display but ignored in comparisons:
    ``?x`` and ``$x`` are the same variable.
    """

    kind: TermKind
    text: str
    suffix: str | None = None
    quoted: bool = False
    sigil: str = field(default="?", compare=False)

    @staticmethod
    def variable(name: str, sigil: str = "?") -> "Term":
        return Term(TermKind.VARIABLE, name, sigil=sigil)

    @staticmethod
    def pname(text: str) -> "Term":
        return Term(TermKind.PNAME, text)

    @staticmethod
    def iri(text: str) -> "Term":
        return Term(TermKind.IRI, text)

    @staticmethod
    def literal(lexical: str, suffix: str | None = None, quoted: bool = True) -> "Term":
        return Term(TermKind.LITERAL, lexical, suffix=suffix, quoted=quoted)

    @property
    def prefix(self) -> str:
        if self.kind is not TermKind.PNAME:
            raise ValueError(f"not a prefixed name: {self}")
        return self.text.split(":", 1)[0]

    @property
    def local(self) -> str:
        if self.kind is not TermKind.PNAME:
            raise ValueError(f"not a prefixed name: {self}")
        return self.text.split(":", 1)[1]

    def surface(self) -> str:
        """The term as a single token of query text."""
        if self.kind is TermKind.VARIABLE:
            return self.sigil + self.text
        if self.kind is TermKind.IRI:
            return f"<{self.text}>"
        if self.kind is TermKind.LITERAL:
            body = f'"{escape_string(self.text)}"' if self.quoted else self.text
            return body + (self.suffix or "")
        return self.text


@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: Term
    object: Term

    def terms(self) -> tuple[Term, Term, Term]:
        return (self.subject, self.predicate, self.object)

    def permuted(self, order: tuple[int, int, int]) -> "TriplePattern":
        t = self.terms()
        return TriplePattern(t[order[0]], t[order[1]], t[order[2]])


# Links tie a triple to the previous row of its block: "." starts a fresh
# triple, ";" shared the subject in the source text, "," shared subject and
# predicate. Patterns always store the full (s, p, o); links only record how
# the source abbreviated them, so expansion is just link normalization.
LINK_FULL = "."
LINK_SEMI = ";"
LINK_COMMA = ","


@dataclass(frozen=True)
class TripleBlock:
    patterns: tuple[TriplePattern, ...]
    links: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.links:
            object.__setattr__(self, "links", (LINK_FULL,) * len(self.patterns))
        if len(self.links) != len(self.patterns):
            raise ValueError("links and patterns must have equal length")
        if self.patterns and self.links[0] != LINK_FULL:
            raise ValueError("first triple of a block cannot be abbreviated")

    @property
    def abbreviated(self) -> bool:
        return any(link != LINK_FULL for link in self.links)


@dataclass(frozen=True)
class Filter:
    """Opaque, balanced token span of a FILTER constraint (keywords lowercased)."""

    tokens: tuple[str, ...]


@dataclass(frozen=True)
class OptionalGroup:
    group: "PatternGroup"


@dataclass(frozen=True)
class UnionGroup:
    left: "PatternGroup"
    right: "PatternGroup"


@dataclass(frozen=True)
class SubGroup:
    group: "PatternGroup"


GroupItem = Union[TripleBlock, Filter, OptionalGroup, UnionGroup, SubGroup]


@dataclass(frozen=True)
class PatternGroup:
    items: tuple[GroupItem, ...] = ()


class QueryForm(Enum):
    SELECT = "select"
    ASK = "ask"


@dataclass(frozen=True)
class CountAggregate:
    var: Term
    distinct: bool = False
    alias: Term | None = None


ProjectionItem = Union[Term, CountAggregate]


@dataclass(frozen=True)
class OrderBy:
    key: Term
    direction: str | None = None  # None (unspecified), "asc", or "desc"


@dataclass(frozen=True)
class SolutionModifiers:
    order_by: OrderBy | None = None
    limit: int | None = None
    offset: int | None = None


@dataclass(frozen=True)
class QueryAst:
    form: QueryForm
    where: PatternGroup
    distinct: bool = False
    projection: tuple[ProjectionItem, ...] = ()
    modifiers: SolutionModifiers = SolutionModifiers()
