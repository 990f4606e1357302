"""Abbreviation expansion and in-place triple rewriting.

A triple's location handle is a tuple of integers: item indices walking
down nested pattern groups (with 0/1 selecting a union branch) and, as the
final element, the triple's index inside its block. Handles stay valid as
long as the tree shape is unchanged, which is what lets the corruption
stage permute one triple at a time.
"""

from __future__ import annotations

from dataclasses import replace

from .errors import InvalidPath
from .syntax import (
    LINK_FULL,
    OptionalGroup,
    PatternGroup,
    QueryAst,
    SubGroup,
    TripleBlock,
    TriplePattern,
    UnionGroup,
)

TriplePath = tuple[int, ...]


def expand_abbreviations(ast: QueryAst) -> QueryAst:
    """Normalize every ``;``/``,`` triple row to its full (s, p, o) form.

    Patterns already store complete triples, so this only rewrites the link
    flags; the triple multiset is untouched. Idempotent.
    """
    return replace(ast, where=_expand_group(ast.where))


def _expand_group(group: PatternGroup) -> PatternGroup:
    items = []
    for item in group.items:
        if isinstance(item, TripleBlock):
            items.append(TripleBlock(item.patterns, (LINK_FULL,) * len(item.patterns)))
        elif isinstance(item, OptionalGroup):
            items.append(OptionalGroup(_expand_group(item.group)))
        elif isinstance(item, SubGroup):
            items.append(SubGroup(_expand_group(item.group)))
        elif isinstance(item, UnionGroup):
            items.append(UnionGroup(_expand_group(item.left), _expand_group(item.right)))
        else:
            items.append(item)
    return PatternGroup(tuple(items))


def extract_triples(ast: QueryAst) -> list[tuple[TriplePath, TriplePattern]]:
    """All triple patterns in depth-first, left-to-right order with handles."""
    found: list[tuple[TriplePath, TriplePattern]] = []
    _collect(ast.where, (), found)
    return found


def _collect(
    group: PatternGroup, prefix: TriplePath, found: list[tuple[TriplePath, TriplePattern]]
) -> None:
    for idx, item in enumerate(group.items):
        if isinstance(item, TripleBlock):
            for t_idx, pat in enumerate(item.patterns):
                found.append((prefix + (idx, t_idx), pat))
        elif isinstance(item, OptionalGroup):
            _collect(item.group, prefix + (idx,), found)
        elif isinstance(item, SubGroup):
            _collect(item.group, prefix + (idx,), found)
        elif isinstance(item, UnionGroup):
            _collect(item.left, prefix + (idx, 0), found)
            _collect(item.right, prefix + (idx, 1), found)


def rewrite_triple(ast: QueryAst, path: TriplePath, new_triple: TriplePattern) -> QueryAst:
    """Replace exactly the triple addressed by ``path``.

    The enclosing block must be abbreviation-free (see expand_abbreviations):
    splicing a triple into a ``;``/``,`` row could silently re-attach its
    neighbours to a different subject.
    """
    if not path:
        raise InvalidPath("empty path")
    return replace(ast, where=_rewrite_group(ast.where, path, new_triple))


def _rewrite_group(
    group: PatternGroup, path: TriplePath, new_triple: TriplePattern
) -> PatternGroup:
    idx = path[0]
    rest = path[1:]
    if not (0 <= idx < len(group.items)):
        raise InvalidPath(f"item index {idx} out of range")
    item = group.items[idx]
    if isinstance(item, TripleBlock):
        if len(rest) != 1 or not (0 <= rest[0] < len(item.patterns)):
            raise InvalidPath(f"bad triple index in {path}")
        if item.abbreviated:
            raise InvalidPath("block contains ;/, abbreviations; expand first")
        patterns = list(item.patterns)
        patterns[rest[0]] = new_triple
        new_item: object = TripleBlock(tuple(patterns), item.links)
    elif isinstance(item, OptionalGroup):
        new_item = OptionalGroup(_rewrite_group(item.group, rest, new_triple))
    elif isinstance(item, SubGroup):
        new_item = SubGroup(_rewrite_group(item.group, rest, new_triple))
    elif isinstance(item, UnionGroup):
        if not rest or rest[0] not in (0, 1):
            raise InvalidPath(f"missing union branch in {path}")
        if rest[0] == 0:
            new_item = UnionGroup(_rewrite_group(item.left, rest[1:], new_triple), item.right)
        else:
            new_item = UnionGroup(item.left, _rewrite_group(item.right, rest[1:], new_triple))
    else:
        raise InvalidPath(f"path descends into non-group item at {idx}")
    items = list(group.items)
    items[idx] = new_item
    return PatternGroup(tuple(items))
