"""AST serialization.

Canonical style is the comparison surface used throughout the toolkit:
lowercase keywords, one space between tokens, one space inside braces.
``parse(serialize(ast))`` is structurally equal to ``ast`` for both styles.
"""

from __future__ import annotations

from enum import Enum

from .syntax import (
    LINK_COMMA,
    LINK_FULL,
    LINK_SEMI,
    CountAggregate,
    Filter,
    OptionalGroup,
    PatternGroup,
    QueryAst,
    QueryForm,
    SubGroup,
    Term,
    TripleBlock,
    UnionGroup,
)


class Style(Enum):
    CANONICAL = "canonical"
    COMPACT = "compact"


def to_tokens(ast: QueryAst) -> list[str]:
    """Flatten an AST to its canonical token surfaces."""
    out: list[str] = []
    if ast.form is QueryForm.SELECT:
        out.append("select")
        if ast.distinct:
            out.append("distinct")
        for item in ast.projection:
            if isinstance(item, Term):
                out.append(item.surface())
            else:
                out.extend(_count_tokens(item))
    else:
        out.append("ask")
    out.append("where")
    _group_tokens(ast.where, out)
    mods = ast.modifiers
    if mods.order_by is not None:
        out.extend(["order", "by"])
        if mods.order_by.direction is None:
            out.append(mods.order_by.key.surface())
        else:
            out.extend([mods.order_by.direction, "(", mods.order_by.key.surface(), ")"])
    if mods.limit is not None:
        out.extend(["limit", str(mods.limit)])
    if mods.offset is not None:
        out.extend(["offset", str(mods.offset)])
    return out


def _count_tokens(agg: CountAggregate) -> list[str]:
    inner = ["count", "("]
    if agg.distinct:
        inner.append("distinct")
    inner.extend([agg.var.surface(), ")"])
    if agg.alias is not None:
        return ["("] + inner + ["as", agg.alias.surface(), ")"]
    return inner


def _group_tokens(group: PatternGroup, out: list[str]) -> None:
    out.append("{")
    previous_was_block = False
    for item in group.items:
        if isinstance(item, TripleBlock):
            if previous_was_block:
                out.append(LINK_FULL)
            _block_tokens(item, out)
            previous_was_block = True
            continue
        previous_was_block = False
        if isinstance(item, Filter):
            out.append("filter")
            out.extend(item.tokens)
        elif isinstance(item, OptionalGroup):
            out.append("optional")
            _group_tokens(item.group, out)
        elif isinstance(item, SubGroup):
            _group_tokens(item.group, out)
        elif isinstance(item, UnionGroup):
            _group_tokens(item.left, out)
            out.append("union")
            _group_tokens(item.right, out)
        else:  # pragma: no cover - exhaustive over GroupItem
            raise TypeError(f"unknown group item {item!r}")
    out.append("}")


def _block_tokens(block: TripleBlock, out: list[str]) -> None:
    for i, (pat, link) in enumerate(zip(block.patterns, block.links)):
        if i > 0:
            out.append(link)
        if i == 0 or link == LINK_FULL:
            out.extend([pat.subject.surface(), pat.predicate.surface(), pat.object.surface()])
        elif link == LINK_SEMI:
            out.extend([pat.predicate.surface(), pat.object.surface()])
        elif link == LINK_COMMA:
            out.append(pat.object.surface())


_NO_SPACE_BEFORE = {"}", ")", ".", ",", ";"}
_NO_SPACE_AFTER = {"{", "("}


def serialize(ast: QueryAst, style: Style = Style.CANONICAL) -> str:
    tokens = to_tokens(ast)
    if style is Style.CANONICAL:
        return " ".join(tokens)
    parts: list[str] = []
    for i, tok in enumerate(tokens):
        if i > 0 and tok not in _NO_SPACE_BEFORE and tokens[i - 1] not in _NO_SPACE_AFTER:
            parts.append(" ")
        parts.append(tok)
    return "".join(parts)
