"""Recursive-descent parser for the SPARQL subset.

Supported: SELECT/ASK, DISTINCT, COUNT aggregates (optionally aliased via
AS), WHERE groups with triple blocks (``;``/``,`` abbreviations retained as
link flags), FILTER (kept as an opaque balanced token span), OPTIONAL,
UNION, nested groups, ORDER BY, LIMIT, OFFSET. PREFIX declarations are
accepted and discarded. Anything else raises UnsupportedFeature.
"""

from __future__ import annotations

from .errors import ParseError, UnsupportedFeature
from .syntax import (
    LINK_COMMA,
    LINK_FULL,
    LINK_SEMI,
    CountAggregate,
    Filter,
    OptionalGroup,
    OrderBy,
    PatternGroup,
    ProjectionItem,
    QueryAst,
    QueryForm,
    SolutionModifiers,
    SubGroup,
    Term,
    TermKind,
    TriplePattern,
    TripleBlock,
    UnionGroup,
    unescape_string,
)
from .tokens import Token, TokenKind, tokenize

# Keywords that belong to real SPARQL but not to this subset. Naming them
# yields a clearer error than a generic syntax failure.
_UNSUPPORTED_KEYWORDS = {
    "construct", "describe", "insert", "delete", "load", "clear", "create",
    "drop", "copy", "move", "add", "with", "using", "service", "graph",
    "bind", "values", "minus", "exists", "reduced", "group", "having",
    "from", "named",
}

_PATH_PUNCT = {"/", "^", "+", "*", "?", "|"}


def _split_literal(text: str) -> Term:
    """Build a literal Term from a STRING token's raw surface."""
    quote = text[0]
    # find the closing quote: scan past escapes
    i = 1
    while i < len(text):
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == quote:
            break
        i += 1
    body = text[1:i]
    suffix = text[i + 1 :] or None
    return Term.literal(unescape_string(body), suffix=suffix, quoted=True)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # --- token stream helpers -------------------------------------------

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return (
            tok is not None
            and tok.kind is TokenKind.KEYWORD
            and tok.text.lower() in words
        )

    def at_punct(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind is TokenKind.PUNCT and tok.text == text

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of query", self.i)
        self.i += 1
        return tok

    def expect_punct(self, text: str) -> None:
        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.PUNCT or tok.text != text:
            raise ParseError(
                f"unexpected {tok!r}" if tok else "unexpected end of query",
                self.i,
                expected=repr(text),
            )
        self.i += 1

    def expect_keyword(self, word: str) -> None:
        if not self.at_keyword(word):
            tok = self.peek()
            raise ParseError(
                f"unexpected {tok!r}" if tok else "unexpected end of query",
                self.i,
                expected=word.upper(),
            )
        self.i += 1

    def fail_unsupported_here(self) -> None:
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.KEYWORD:
            word = tok.text.lower()
            if word in _UNSUPPORTED_KEYWORDS:
                raise UnsupportedFeature(word.upper(), self.i)
            if word == "a":
                raise UnsupportedFeature("rdf:type shorthand 'a'", self.i)

    # --- grammar ---------------------------------------------------------

    def parse_query(self) -> QueryAst:
        self.skip_prefix_decls()
        if self.at_keyword("select"):
            ast = self.select_query()
        elif self.at_keyword("ask"):
            ast = self.ask_query()
        else:
            self.fail_unsupported_here()
            tok = self.peek()
            raise ParseError(
                f"unexpected {tok!r}" if tok else "empty query",
                self.i,
                expected="SELECT or ASK",
            )
        if self.peek() is not None:
            self.fail_unsupported_here()
            raise ParseError(f"trailing input {self.peek()!r}", self.i)
        self.check_variable_scope(ast)
        return ast

    def skip_prefix_decls(self) -> None:
        while self.at_keyword("prefix", "base"):
            if self.at_keyword("base"):
                raise UnsupportedFeature("BASE", self.i)
            self.take()
            ns = self.take()
            if ns.kind is not TokenKind.PNAME or ns.text.split(":", 1)[1]:
                raise ParseError(
                    f"bad prefix declaration {ns!r}", self.i - 1, expected="prefix:"
                )
            iri = self.take()
            if iri.kind is not TokenKind.IRI:
                raise ParseError(
                    f"bad prefix declaration {iri!r}", self.i - 1, expected="<iri>"
                )

    def select_query(self) -> QueryAst:
        self.take()  # select
        distinct = False
        if self.at_keyword("distinct"):
            distinct = True
            self.take()
        elif self.at_keyword("reduced"):
            raise UnsupportedFeature("REDUCED", self.i)
        projection = self.projection()
        if self.at_keyword("where"):
            self.take()
        self.fail_unsupported_here()
        group = self.group()
        modifiers = self.solution_modifiers()
        return QueryAst(
            form=QueryForm.SELECT,
            where=group,
            distinct=distinct,
            projection=projection,
            modifiers=modifiers,
        )

    def ask_query(self) -> QueryAst:
        self.take()  # ask
        if self.at_keyword("where"):
            self.take()
        self.fail_unsupported_here()
        group = self.group()
        modifiers = self.solution_modifiers()
        return QueryAst(form=QueryForm.ASK, where=group, modifiers=modifiers)

    def projection(self) -> tuple[ProjectionItem, ...]:
        items: list[ProjectionItem] = []
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.kind is TokenKind.VARIABLE:
                items.append(Term.variable(tok.text[1:], sigil=tok.text[0]))
                self.take()
            elif self.at_punct("(") or self.at_keyword("count"):
                items.append(self.count_expression())
            elif self.at_punct("*"):
                raise UnsupportedFeature("SELECT *", self.i)
            else:
                break
        if not items:
            raise ParseError(
                f"projection expected, got {self.peek()!r}", self.i, expected="?var"
            )
        return tuple(items)

    def count_expression(self) -> CountAggregate:
        aliased = self.at_punct("(")
        if aliased:
            self.take()
        tok = self.peek()
        if not self.at_keyword("count"):
            if tok is not None and tok.kind is TokenKind.KEYWORD and tok.text.lower() in (
                "sum", "avg", "min", "max", "sample", "group_concat",
            ):
                raise UnsupportedFeature(f"aggregate {tok.text.upper()}", self.i)
            raise ParseError(f"unexpected {tok!r}", self.i, expected="COUNT")
        self.take()
        self.expect_punct("(")
        distinct = False
        if self.at_keyword("distinct"):
            distinct = True
            self.take()
        var_tok = self.take()
        if var_tok.kind is not TokenKind.VARIABLE:
            if var_tok.kind is TokenKind.PUNCT and var_tok.text == "*":
                raise UnsupportedFeature("COUNT(*)", self.i - 1)
            raise ParseError(f"unexpected {var_tok!r}", self.i - 1, expected="?var")
        var = Term.variable(var_tok.text[1:], sigil=var_tok.text[0])
        self.expect_punct(")")
        alias = None
        if aliased:
            self.expect_keyword("as")
            alias_tok = self.take()
            if alias_tok.kind is not TokenKind.VARIABLE:
                raise ParseError(
                    f"unexpected {alias_tok!r}", self.i - 1, expected="?alias"
                )
            alias = Term.variable(alias_tok.text[1:], sigil=alias_tok.text[0])
            self.expect_punct(")")
        return CountAggregate(var=var, distinct=distinct, alias=alias)

    def group(self) -> PatternGroup:
        self.expect_punct("{")
        items: list = []
        while not self.at_punct("}"):
            if self.peek() is None:
                raise ParseError("unclosed group", self.i, expected="'}'")
            if self.at_keyword("filter"):
                items.append(self.filter_item())
            elif self.at_keyword("optional"):
                self.take()
                items.append(OptionalGroup(self.group()))
            elif self.at_punct("{"):
                items.append(self.group_or_union())
            elif self.at_keyword("select"):
                raise UnsupportedFeature("subselect", self.i)
            elif self.at_punct("."):
                # stray dot between items; legal separator, carries nothing
                self.take()
            else:
                self.fail_unsupported_here()
                items.append(self.triple_block())
        self.take()  # }
        return PatternGroup(tuple(items))

    def group_or_union(self) -> SubGroup | UnionGroup:
        first = self.group()
        if not self.at_keyword("union"):
            return SubGroup(first)
        node = first
        while self.at_keyword("union"):
            self.take()
            right = self.group()
            if isinstance(node, PatternGroup):
                node = UnionGroup(node, right)
            else:
                node = UnionGroup(PatternGroup((node,)), right)
        return node  # type: ignore[return-value]

    def triple_block(self) -> TripleBlock:
        patterns: list[TriplePattern] = []
        links: list[str] = []
        link = LINK_FULL
        subject = self.term("subject")
        while True:
            predicate = self.term("predicate")
            self.reject_property_path()
            while True:
                obj = self.term("object")
                patterns.append(TriplePattern(subject, predicate, obj))
                links.append(link)
                if self.at_punct(","):
                    self.take()
                    link = LINK_COMMA
                    continue
                break
            if self.at_punct(";"):
                self.take()
                # tolerate "; }" and ";." tails
                if self.at_punct("}") or self.at_punct("."):
                    continue_block = False
                else:
                    link = LINK_SEMI
                    continue_block = True
                if continue_block:
                    continue
            break
        # a "." may close the row and start an unrelated triple, which still
        # belongs to the same block
        if self.at_punct("."):
            self.take()
            if self.starts_term():
                link = LINK_FULL
                rest = self.triple_block()
                return TripleBlock(
                    tuple(patterns) + rest.patterns, tuple(links) + rest.links
                )
        return TripleBlock(tuple(patterns), tuple(links))

    def starts_term(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind in (TokenKind.VARIABLE, TokenKind.PNAME, TokenKind.IRI):
            return True
        if tok.kind is TokenKind.LITERAL:
            return True
        if tok.kind is TokenKind.KEYWORD and tok.text.lower() in ("true", "false"):
            return True
        return False

    def reject_property_path(self) -> None:
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.PUNCT and tok.text in _PATH_PUNCT:
            raise UnsupportedFeature("property path", self.i)

    def term(self, position: str) -> Term:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of query", self.i, expected=position)
        if tok.kind is TokenKind.VARIABLE:
            self.take()
            return Term.variable(tok.text[1:], sigil=tok.text[0])
        if tok.kind is TokenKind.PNAME:
            self.take()
            return Term.pname(tok.text)
        if tok.kind is TokenKind.IRI:
            self.take()
            return Term.iri(tok.text[1:-1])
        if tok.kind is TokenKind.LITERAL:
            self.take()
            if tok.text[0] in "\"'":
                return _split_literal(tok.text)
            return Term.literal(tok.text, quoted=False)
        if tok.kind is TokenKind.KEYWORD and tok.text.lower() in ("true", "false"):
            self.take()
            return Term.literal(tok.text.lower(), quoted=False)
        if tok.kind is TokenKind.PUNCT and tok.text == "[":
            raise UnsupportedFeature("blank node", self.i)
        self.fail_unsupported_here()
        raise ParseError(f"unexpected {tok!r}", self.i, expected=position)

    def filter_item(self) -> Filter:
        self.take()  # filter
        tokens: list[str] = []
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.KEYWORD:
            word = tok.text.lower()
            if word in ("exists", "not"):
                raise UnsupportedFeature(f"FILTER {word.upper()}", self.i)
            # builtin-call form: regex(...), lang(...), contains(...)
            tokens.append(word)
            self.take()
        if not self.at_punct("("):
            raise ParseError(
                f"unexpected {self.peek()!r}", self.i, expected="'(' after FILTER"
            )
        depth = 0
        while True:
            tok = self.peek()
            if tok is None:
                raise ParseError("unclosed FILTER expression", self.i, expected="')'")
            self.take()
            if tok.kind is TokenKind.PUNCT and tok.text == "(":
                depth += 1
            elif tok.kind is TokenKind.PUNCT and tok.text == ")":
                depth -= 1
            tokens.append(
                tok.text.lower() if tok.kind is TokenKind.KEYWORD else tok.text
            )
            if depth == 0:
                break
        return Filter(tuple(tokens))

    def solution_modifiers(self) -> SolutionModifiers:
        order_by = None
        limit = None
        offset = None
        while True:
            if self.at_keyword("order"):
                if order_by is not None:
                    raise ParseError("duplicate ORDER BY", self.i)
                self.take()
                self.expect_keyword("by")
                order_by = self.order_key()
            elif self.at_keyword("limit"):
                if limit is not None:
                    raise ParseError("duplicate LIMIT", self.i)
                self.take()
                limit = self.non_negative_int()
            elif self.at_keyword("offset"):
                if offset is not None:
                    raise ParseError("duplicate OFFSET", self.i)
                self.take()
                offset = self.non_negative_int()
            else:
                break
        return SolutionModifiers(order_by=order_by, limit=limit, offset=offset)

    def order_key(self) -> OrderBy:
        tok = self.peek()
        direction = None
        if self.at_keyword("asc", "desc"):
            direction = tok.text.lower()  # type: ignore[union-attr]
            self.take()
            self.expect_punct("(")
            var_tok = self.take()
            if var_tok.kind is not TokenKind.VARIABLE:
                raise ParseError(f"unexpected {var_tok!r}", self.i - 1, expected="?var")
            self.expect_punct(")")
            key = Term.variable(var_tok.text[1:], sigil=var_tok.text[0])
        elif tok is not None and tok.kind is TokenKind.VARIABLE:
            self.take()
            key = Term.variable(tok.text[1:], sigil=tok.text[0])
        else:
            raise ParseError(
                f"unexpected {tok!r}", self.i, expected="?var or ASC/DESC(?var)"
            )
        nxt = self.peek()
        if nxt is not None and (
            nxt.kind is TokenKind.VARIABLE or self.at_keyword("asc", "desc")
        ):
            raise UnsupportedFeature("multiple ORDER BY keys", self.i)
        return OrderBy(key=key, direction=direction)

    def non_negative_int(self) -> int:
        tok = self.take()
        if tok.kind is not TokenKind.LITERAL or not tok.text.isdigit():
            raise ParseError(
                f"unexpected {tok!r}", self.i - 1, expected="non-negative integer"
            )
        return int(tok.text)

    # --- scope check -----------------------------------------------------

    def check_variable_scope(self, ast: QueryAst) -> None:
        bound = _group_variables(ast.where)
        aliases = {
            item.alias.text
            for item in ast.projection
            if isinstance(item, CountAggregate) and item.alias is not None
        }
        for item in ast.projection:
            name = item.text if isinstance(item, Term) else item.var.text
            if name not in bound:
                raise ParseError(
                    f"projected variable ?{name} is not bound in WHERE", self.i
                )
        ob = ast.modifiers.order_by
        if ob is not None and ob.key.text not in bound and ob.key.text not in aliases:
            raise ParseError(
                f"ORDER BY variable ?{ob.key.text} is not bound in WHERE", self.i
            )


def _group_variables(group: PatternGroup) -> set[str]:
    names: set[str] = set()
    for item in group.items:
        if isinstance(item, TripleBlock):
            for pat in item.patterns:
                for term in pat.terms():
                    if term.kind is TermKind.VARIABLE:
                        names.add(term.text)
        elif isinstance(item, Filter):
            for tok in item.tokens:
                if tok[:1] in ("?", "$"):
                    names.add(tok[1:])
        elif isinstance(item, OptionalGroup):
            names |= _group_variables(item.group)
        elif isinstance(item, SubGroup):
            names |= _group_variables(item.group)
        elif isinstance(item, UnionGroup):
            names |= _group_variables(item.left)
            names |= _group_variables(item.right)
    return names


def parse(query_text: str) -> QueryAst:
    """Parse ``query_text`` into a QueryAst.

    Raises TokenizeError on lexical problems, ParseError on syntax errors,
    and UnsupportedFeature for SPARQL outside the subset.
    """
    return _Parser(tokenize(query_text)).parse_query()
