"""IRI <-> label mapping inside query token streams.

Verbalization swaps a prefixed IRI's local part for the entity/relation's
normalized label (``wd:Q25356`` -> ``wd:Populus``); deverbalization maps the
labels back so the query is executable again. Both operate on token streams,
never on parsed ASTs, so they also apply to model outputs that do not parse.
Replacements are spliced at the original token offsets, leaving all other
bytes untouched; on a collision-free map the two operations are exact
inverses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core.errors import SparqlKitError
from .core.tokens import PN_LOCAL, TokenKind, tokenize

_LOCAL_RE = re.compile(PN_LOCAL)


class EmptyLabel(SparqlKitError):
    pass


class MalformedLine(SparqlKitError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def normalize_label(raw_label: str) -> str:
    """Strip and replace interior whitespace runs with ``_``; case preserved."""
    stripped = raw_label.strip()
    if not stripped:
        raise EmptyLabel("label is empty")
    return re.sub(r"\s+", "_", stripped)


def _label_is_token_safe(label: str) -> bool:
    """True if ``prefix:label`` still lexes as one prefixed-name token."""
    return _LOCAL_RE.fullmatch(label) is not None


@dataclass(frozen=True)
class Collision:
    prefix: str
    label: str
    iris: tuple[str, ...]  # first-seen IRI first


@dataclass
class LabelMap:
    """Bidirectional prefixed-IRI <-> normalized-label dictionary.

    ``forward`` maps the full prefixed IRI to its normalized label;
    ``reverse`` maps (prefix, label) back to the IRI. On duplicate labels the
    first-seen entry wins the reverse direction and the clash is recorded in
    ``collisions``. Treated as immutable once loaded.
    """

    forward: dict[str, str] = field(default_factory=dict)
    reverse: dict[tuple[str, str], str] = field(default_factory=dict)
    collisions: list[Collision] = field(default_factory=list)
    skipped_unsafe: int = 0  # labels that would not re-lex as one token
    duplicate_iris: int = 0

    def __len__(self) -> int:
        return len(self.forward)

    def add(self, iri: str, raw_label: str) -> None:
        if iri in self.forward:
            self.duplicate_iris += 1
            return
        label = normalize_label(raw_label)
        if not _label_is_token_safe(label):
            self.skipped_unsafe += 1
            return
        prefix = iri.split(":", 1)[0]
        key = (prefix, label)
        if key in self.reverse:
            existing = self.reverse[key]
            for i, coll in enumerate(self.collisions):
                if (coll.prefix, coll.label) == key:
                    self.collisions[i] = Collision(prefix, label, coll.iris + (iri,))
                    break
            else:
                self.collisions.append(Collision(prefix, label, (existing, iri)))
            self.forward[iri] = label
            return
        self.forward[iri] = label
        self.reverse[key] = iri

    def collision_keys(self) -> set[tuple[str, str]]:
        return {(c.prefix, c.label) for c in self.collisions}


_PNAME_LINE_RE = re.compile(r"\S+:\S*")


def load_label_map(path: str) -> LabelMap:
    """Load a UTF-8 TSV of ``<prefixed-iri><TAB><raw label>`` lines.

    ``#`` comment lines and blank lines are ignored. Raises MalformedLine
    with the 1-based line number on anything else that does not split into
    two fields or whose first field is not a prefixed name.
    """
    label_map = LabelMap()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise MalformedLine("missing tab separator", lineno)
            iri, raw_label = line.split("\t", 1)
            iri = iri.strip()
            if not _PNAME_LINE_RE.fullmatch(iri) or iri.startswith("<"):
                raise MalformedLine(f"not a prefixed IRI: {iri!r}", lineno)
            if not raw_label.strip():
                raise MalformedLine("empty label", lineno)
            label_map.add(iri, raw_label)
    return label_map


@dataclass
class SubstitutionStats:
    replaced: int = 0
    unknown: int = 0  # prefixed names with no map entry (verbalize)
    unresolved: int = 0  # labels with no reverse entry (deverbalize)
    collisions: int = 0  # labels resolved through a recorded collision


def _splice(text: str, replacements: list[tuple[int, int, str]]) -> str:
    out: list[str] = []
    pos = 0
    for start, end, new in replacements:
        out.append(text[pos:start])
        out.append(new)
        pos = end
    out.append(text[pos:])
    return "".join(out)


def verbalize_with_stats(query_text: str, label_map: LabelMap) -> tuple[str, SubstitutionStats]:
    stats = SubstitutionStats()
    replacements: list[tuple[int, int, str]] = []
    for tok in tokenize(query_text):
        if tok.kind is not TokenKind.PNAME:
            continue
        label = label_map.forward.get(tok.text)
        if label is None:
            stats.unknown += 1
            continue
        prefix = tok.text.split(":", 1)[0]
        replacements.append((tok.offset, tok.offset + len(tok.text), f"{prefix}:{label}"))
        stats.replaced += 1
    return _splice(query_text, replacements), stats


def verbalize(query_text: str, label_map: LabelMap) -> str:
    """Replace every mapped prefixed IRI with ``prefix:normalized_label``."""
    return verbalize_with_stats(query_text, label_map)[0]


def deverbalize_with_stats(query_text: str, label_map: LabelMap) -> tuple[str, SubstitutionStats]:
    stats = SubstitutionStats()
    collision_keys = label_map.collision_keys()
    replacements: list[tuple[int, int, str]] = []
    for tok in tokenize(query_text):
        if tok.kind is not TokenKind.PNAME:
            continue
        prefix, local = tok.text.split(":", 1)
        iri = label_map.reverse.get((prefix, local))
        if iri is not None:
            replacements.append((tok.offset, tok.offset + len(tok.text), iri))
            stats.replaced += 1
            if (prefix, local) in collision_keys:
                stats.collisions += 1
        elif tok.text in label_map.forward:
            pass  # already a raw IRI; leave it alone
        else:
            stats.unresolved += 1
    return _splice(query_text, replacements), stats


def deverbalize(query_text: str, label_map: LabelMap) -> str:
    """Map ``prefix:label`` tokens back to their IRIs (first-seen on collision)."""
    return deverbalize_with_stats(query_text, label_map)[0]
