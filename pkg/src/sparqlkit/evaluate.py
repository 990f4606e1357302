"""Query Match, answer F1, and the triplet-level error taxonomy.

Error classes: a prediction is Unparsable, Correct (AST match), a
TripletFlip (same tree skeleton, triples pair up as element permutations of
the gold triples, at least one actually permuted), a TripletOther (same
skeleton but a triple differs beyond permutation, e.g. a wrong entity), or
Structural (anything that changes the tree shape, filters, modifiers, or
projection). TripletFlip and TripletOther together form the "triplet
errors" bucket in reports.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Union

from .core import (
    Filter,
    OptionalGroup,
    PatternGroup,
    QueryAst,
    SubGroup,
    Term,
    TermKind,
    TripleBlock,
    TriplePattern,
    UnionGroup,
    expand_abbreviations,
    parse,
    serialize,
    to_tokens,
)
from .core.errors import SparqlKitError

Answers = Union[frozenset, bool]


class GoldUnparsable(SparqlKitError):
    """The gold query does not parse; that is a configuration error."""


class MatchMode(Enum):
    TEXT_CANONICAL = "text"
    AST = "ast"
    AST_ALPHA_RENAMED = "ast-renamed"


class ErrorClass(Enum):
    CORRECT = "correct"
    TRIPLET_FLIP = "triplet-flip"
    TRIPLET_OTHER = "triplet-other"
    STRUCTURAL = "structural"
    UNPARSABLE = "unparsable"


TRIPLET_ERROR_CLASSES = (ErrorClass.TRIPLET_FLIP, ErrorClass.TRIPLET_OTHER)


# --- answer F1 -------------------------------------------------------------


def answer_f1(
    pred: Answers, gold: Answers, *, both_empty_score: float = 1.0
) -> tuple[float, float, float]:
    """Precision, recall, and F1 of a predicted answer set.

    Boolean (ASK) answers score all-1 on match, all-0 otherwise; comparing a
    boolean against a binding set scores 0. Two empty sets score
    ``both_empty_score`` (1 by default, set 0 for strict grading).
    """
    if isinstance(pred, bool) or isinstance(gold, bool):
        if isinstance(pred, bool) and isinstance(gold, bool):
            return (1.0, 1.0, 1.0) if pred == gold else (0.0, 0.0, 0.0)
        return (0.0, 0.0, 0.0)
    if not pred and not gold:
        return (both_empty_score,) * 3
    inter = len(frozenset(pred) & frozenset(gold))
    precision = inter / len(pred) if pred else 0.0
    recall = inter / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return (precision, recall, f1)


# --- query match -----------------------------------------------------------


def _parse_gold(gold: str) -> QueryAst:
    try:
        return expand_abbreviations(parse(gold))
    except SparqlKitError as exc:
        raise GoldUnparsable(f"gold query does not parse: {exc}") from exc


def _try_parse(text: str) -> QueryAst | None:
    try:
        return expand_abbreviations(parse(text))
    except SparqlKitError:
        return None


def _comparison_key(ast: QueryAst) -> QueryAst:
    """Order-insensitive normal form: triples within a block sorted."""
    return replace(ast, where=_sort_group(ast.where))


def _sort_group(group: PatternGroup) -> PatternGroup:
    items = []
    for item in group.items:
        if isinstance(item, TripleBlock):
            patterns = tuple(
                sorted(item.patterns, key=lambda p: tuple(t.surface() for t in p.terms()))
            )
            items.append(TripleBlock(patterns))
        elif isinstance(item, OptionalGroup):
            items.append(OptionalGroup(_sort_group(item.group)))
        elif isinstance(item, SubGroup):
            items.append(SubGroup(_sort_group(item.group)))
        elif isinstance(item, UnionGroup):
            items.append(UnionGroup(_sort_group(item.left), _sort_group(item.right)))
        else:
            items.append(item)
    return PatternGroup(tuple(items))


def _rename_term(term: Term, mapping: dict[str, str]) -> Term:
    if term.kind is TermKind.VARIABLE:
        return Term.variable(mapping[term.text])
    return term


def _alpha_rename(ast: QueryAst) -> QueryAst:
    """Rename variables to v0, v1, ... by first occurrence in canonical order."""
    mapping: dict[str, str] = {}
    for tok in to_tokens(ast):
        if tok[:1] in ("?", "$") and tok[1:] not in mapping:
            mapping[tok[1:]] = f"v{len(mapping)}"

    def rename_group(group: PatternGroup) -> PatternGroup:
        items = []
        for item in group.items:
            if isinstance(item, TripleBlock):
                patterns = tuple(
                    TriplePattern(*(_rename_term(t, mapping) for t in p.terms()))
                    for p in item.patterns
                )
                items.append(TripleBlock(patterns, item.links))
            elif isinstance(item, Filter):
                toks = tuple(
                    "?" + mapping[t[1:]] if t[:1] in ("?", "$") and t[1:] in mapping else t
                    for t in item.tokens
                )
                items.append(Filter(toks))
            elif isinstance(item, OptionalGroup):
                items.append(OptionalGroup(rename_group(item.group)))
            elif isinstance(item, SubGroup):
                items.append(SubGroup(rename_group(item.group)))
            elif isinstance(item, UnionGroup):
                items.append(UnionGroup(rename_group(item.left), rename_group(item.right)))
            else:
                items.append(item)
        return PatternGroup(tuple(items))

    projection = tuple(
        _rename_term(p, mapping)
        if isinstance(p, Term)
        else replace(
            p,
            var=_rename_term(p.var, mapping),
            alias=_rename_term(p.alias, mapping) if p.alias is not None else None,
        )
        for p in ast.projection
    )
    modifiers = ast.modifiers
    if modifiers.order_by is not None:
        modifiers = replace(
            modifiers,
            order_by=replace(modifiers.order_by, key=_rename_term(modifiers.order_by.key, mapping)),
        )
    return replace(ast, projection=projection, where=rename_group(ast.where), modifiers=modifiers)


def query_match(pred: str, gold: str, mode: MatchMode = MatchMode.AST) -> bool:
    """Consistency between a predicted query and the gold query.

    TEXT_CANONICAL compares whitespace-collapsed token sequences with
    keywords lowercased; AST compares parsed, abbreviation-expanded trees
    with triple order inside each block ignored; AST_ALPHA_RENAMED
    additionally renames variables by first occurrence. An unparsable
    prediction never matches.
    """
    if mode is MatchMode.TEXT_CANONICAL:
        from .core.tokens import TokenKind, tokenize

        try:
            gold_tokens = tokenize(gold)
        except SparqlKitError as exc:
            raise GoldUnparsable(f"gold query does not tokenize: {exc}") from exc
        try:
            pred_tokens = tokenize(pred)
        except SparqlKitError:
            return False

        def norm(tokens):
            return [
                t.text.lower() if t.kind is TokenKind.KEYWORD else t.text for t in tokens
            ]

        return norm(pred_tokens) == norm(gold_tokens)

    gold_ast = _parse_gold(gold)
    pred_ast = _try_parse(pred)
    if pred_ast is None:
        return False
    if mode is MatchMode.AST_ALPHA_RENAMED:
        gold_ast = _alpha_rename(gold_ast)
        pred_ast = _alpha_rename(pred_ast)
    return _comparison_key(pred_ast) == _comparison_key(gold_ast)


# --- error classification ----------------------------------------------------

_PLACEHOLDER = TriplePattern(Term.variable("_"), Term.variable("_"), Term.variable("_"))


def _skeleton_group(group: PatternGroup) -> PatternGroup:
    items = []
    for item in group.items:
        if isinstance(item, TripleBlock):
            items.append(TripleBlock((_PLACEHOLDER,) * len(item.patterns)))
        elif isinstance(item, OptionalGroup):
            items.append(OptionalGroup(_skeleton_group(item.group)))
        elif isinstance(item, SubGroup):
            items.append(SubGroup(_skeleton_group(item.group)))
        elif isinstance(item, UnionGroup):
            items.append(UnionGroup(_skeleton_group(item.left), _skeleton_group(item.right)))
        else:
            items.append(item)  # filters compared verbatim
    return PatternGroup(tuple(items))


def _skeleton(ast: QueryAst) -> QueryAst:
    """Tree shape with every triple replaced by a placeholder; filters,
    modifiers, and projection kept."""
    return replace(ast, where=_skeleton_group(ast.where))


def _paired_blocks(
    pred: PatternGroup, gold: PatternGroup
) -> list[tuple[TripleBlock, TripleBlock]]:
    pairs: list[tuple[TripleBlock, TripleBlock]] = []
    for p_item, g_item in zip(pred.items, gold.items):
        if isinstance(p_item, TripleBlock):
            pairs.append((p_item, g_item))
        elif isinstance(p_item, OptionalGroup):
            pairs.extend(_paired_blocks(p_item.group, g_item.group))
        elif isinstance(p_item, SubGroup):
            pairs.extend(_paired_blocks(p_item.group, g_item.group))
        elif isinstance(p_item, UnionGroup):
            pairs.extend(_paired_blocks(p_item.left, g_item.left))
            pairs.extend(_paired_blocks(p_item.right, g_item.right))
    return pairs


def _has_perfect_matching(adjacency: list[list[int]], n_right: int) -> bool:
    """Kuhn's augmenting-path bipartite matching; blocks are tiny."""
    match_right: list[int | None] = [None] * n_right

    def try_assign(left: int, visited: set[int]) -> bool:
        for right in adjacency[left]:
            if right in visited:
                continue
            visited.add(right)
            if match_right[right] is None or try_assign(match_right[right], visited):
                match_right[right] = left
                return True
        return False

    return all(try_assign(left, set()) for left in range(len(adjacency)))


def _blocks_match_as_permutations(pred: TripleBlock, gold: TripleBlock) -> bool:
    """Perfect matching where each pred triple is an element permutation of
    its matched gold triple."""
    gold_multisets = [Counter(p.terms()) for p in gold.patterns]
    adjacency = []
    for p in pred.patterns:
        p_multiset = Counter(p.terms())
        adjacency.append([j for j, g in enumerate(gold_multisets) if p_multiset == g])
    return _has_perfect_matching(adjacency, len(gold.patterns))


def classify_error(pred: str, gold: str) -> ErrorClass:
    """Assign one error class to a prediction (see module docstring)."""
    gold_ast = _parse_gold(gold)
    pred_ast = _try_parse(pred)
    if pred_ast is None:
        return ErrorClass.UNPARSABLE
    if _comparison_key(pred_ast) == _comparison_key(gold_ast):
        return ErrorClass.CORRECT
    if _skeleton(pred_ast) != _skeleton(gold_ast):
        return ErrorClass.STRUCTURAL
    for pred_block, gold_block in _paired_blocks(pred_ast.where, gold_ast.where):
        if not _blocks_match_as_permutations(pred_block, gold_block):
            return ErrorClass.TRIPLET_OTHER
    return ErrorClass.TRIPLET_FLIP


# --- aggregation -------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    id: str
    error_class: ErrorClass
    qm: bool
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    execution_error: str | None = None


@dataclass
class EvalReport:
    n: int = 0
    qm_rate: float = 0.0
    macro_f1: float = 0.0
    f1_evaluated: int = 0
    error_counts: dict[str, int] = field(default_factory=dict)
    empty: bool = False

    @property
    def triplet_errors(self) -> int:
        return sum(self.error_counts.get(c.value, 0) for c in TRIPLET_ERROR_CLASSES)


def aggregate_report(records: Iterable[EvalRecord]) -> EvalReport:
    """Corpus-level QM rate, macro-F1 (over records that have an F1), and the
    error-class histogram. Order-insensitive; an empty stream is flagged."""
    counts = {c.value: 0 for c in ErrorClass}
    n = 0
    qm_true = 0
    f1_sum = 0.0
    f1_n = 0
    for rec in records:
        n += 1
        counts[rec.error_class.value] += 1
        if rec.qm:
            qm_true += 1
        if rec.f1 is not None:
            f1_sum += rec.f1
            f1_n += 1
    if n == 0:
        return EvalReport(error_counts=counts, empty=True)
    return EvalReport(
        n=n,
        qm_rate=qm_true / n,
        macro_f1=f1_sum / f1_n if f1_n else 0.0,
        f1_evaluated=f1_n,
        error_counts=counts,
    )
