"""Dataset ingestion, fine-tuning input construction, and pretraining-corpus
emission.

Fine-tuning inputs follow the segmented format
``question | iri1 label1, iri2 label2 | iri label, ...`` with entity and
relation segments separated by ``|`` and items by ``,``; labels are
normalized (whitespace -> ``_``) so the delimiters stay unambiguous. The
"gold entities only" scenario drops the relation segment entirely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .core import parse
from .core.errors import SparqlKitError
from .corruption import (
    CorruptionConfig,
    PretrainPair,
    corrupt_mlm,
    corrupt_toc,
    line_rng,
    reconstruct_mlm,
)
from .core.tokens import join_tokens, token_texts
from .evaluate import Answers
from .labels import LabelMap, normalize_label, verbalize


class MalformedRecord(SparqlKitError):
    def __init__(self, message: str, where: str):
        super().__init__(f"{where}: {message}")
        self.where = where


class UnknownSchema(SparqlKitError):
    pass


class Scenario(Enum):
    GOLD_BOTH = "gold-both"
    GOLD_ENTITIES_ONLY = "gold-entities"


class Schema(Enum):
    GENERIC = "generic"
    LCQUAD2 = "lcquad2"
    QALD = "qald"


@dataclass(frozen=True)
class Example:
    id: str
    question: str
    gold_query: str
    entities: tuple[tuple[str, str], ...] = ()  # (iri, raw label)
    relations: tuple[tuple[str, str], ...] = ()
    answers: Answers | None = None


def build_input(example: Example, scenario: Scenario = Scenario.GOLD_BOTH) -> str:
    """Assemble the model input for one example.

    GOLD_BOTH has exactly two top-level ``|`` delimiters, GOLD_ENTITIES_ONLY
    exactly one; empty entity/relation lists leave an empty segment.
    """
    def segment(pairs: tuple[tuple[str, str], ...]) -> str:
        return ", ".join(f"{iri} {normalize_label(label)}" for iri, label in pairs)

    parts = [example.question, segment(example.entities)]
    if scenario is Scenario.GOLD_BOTH:
        parts.append(segment(example.relations))
    return " ".join(" | ".join(parts).split())


@dataclass
class ReadResult:
    examples: list[Example] = field(default_factory=list)
    skipped_missing_query: int = 0
    skipped_unparsable: int = 0

    @property
    def skipped(self) -> int:
        return self.skipped_missing_query + self.skipped_unparsable


def _pair_list(value) -> tuple[tuple[str, str], ...]:
    pairs = []
    for item in value or []:
        if isinstance(item, dict):
            iri = item.get("iri") or item.get("uri") or ""
            label = item.get("label") or ""
        else:
            iri, label = item[0], item[1]
        pairs.append((str(iri), str(label)))
    return tuple(pairs)


def _answers_value(value) -> Answers | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    return frozenset(str(v) for v in value)


def read_dataset(path: str, schema: Schema = Schema.GENERIC) -> ReadResult:
    """Read a dataset file into normalized Examples.

    Records without a gold query are skipped and counted, as are records
    whose gold query does not parse. Structurally broken input raises
    MalformedRecord.
    """
    if schema is Schema.GENERIC:
        raw = list(_generic_records(path))
    elif schema is Schema.LCQUAD2:
        raw = list(_lcquad2_records(path))
    elif schema is Schema.QALD:
        raw = list(_qald_records(path))
    else:
        raise UnknownSchema(f"unknown schema {schema!r}")

    result = ReadResult()
    for where, record in raw:
        query = record.get("query")
        if not query:
            result.skipped_missing_query += 1
            continue
        try:
            parse(query)
        except SparqlKitError:
            result.skipped_unparsable += 1
            continue
        try:
            example = Example(
                id=str(record.get("id", where)),
                question=str(record.get("question", "")),
                gold_query=query,
                entities=_pair_list(record.get("entities")),
                relations=_pair_list(record.get("relations")),
                answers=_answers_value(record.get("answers")),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedRecord(f"bad field shape: {exc}", where) from exc
        result.examples.append(example)
    return result


def _generic_records(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc}", where) from exc
            if not isinstance(record, dict):
                raise MalformedRecord("record is not an object", where)
            yield where, record


def _lcquad2_records(path: str):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc}", path) from exc
    if not isinstance(data, list):
        raise MalformedRecord("expected a JSON array of records", path)
    for i, record in enumerate(data):
        where = f"{path}#{i}"
        if not isinstance(record, dict):
            raise MalformedRecord("record is not an object", where)
        yield where, {
            "id": record.get("uid", i),
            "question": record.get("question") or record.get("NNQT_question") or "",
            "query": record.get("sparql_wikidata"),
        }


def _qald_records(path: str):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc}", path) from exc
    questions = data.get("questions")
    if not isinstance(questions, list):
        raise MalformedRecord("expected a 'questions' array", path)
    for i, record in enumerate(questions):
        where = f"{path}#{i}"
        if not isinstance(record, dict):
            raise MalformedRecord("record is not an object", where)
        question = ""
        for lang_entry in record.get("question", []):
            if lang_entry.get("language") == "en":
                question = lang_entry.get("string", "")
                break
        else:
            entries = record.get("question", [])
            if entries:
                question = entries[0].get("string", "")
        answers = None
        answer_docs = record.get("answers") or []
        if answer_docs:
            doc = answer_docs[0]
            if "boolean" in doc:
                answers = bool(doc["boolean"])
            else:
                values = set()
                for binding in doc.get("results", {}).get("bindings", []):
                    for cell in binding.values():
                        if cell.get("value") is not None:
                            values.add(str(cell["value"]))
                answers = frozenset(values)
        yield where, {
            "id": record.get("id", i),
            "question": question,
            "query": (record.get("query") or {}).get("sparql"),
            "answers": answers,
        }


class CorruptionInvariantError(SparqlKitError):
    """An emitted pretraining pair violated its construction contract."""


def build_pretrain_corpus(
    queries: Iterable[str],
    config: CorruptionConfig,
    seed: int,
    *,
    label_map: LabelMap | None = None,
    verbalize_iris: bool = True,
) -> tuple[list[PretrainPair], int]:
    """Emit one TOC pair and one MLM pair per parseable query (1:1 interleave).

    Queries are verbalized first when a label map is given and
    ``verbalize_iris`` is on. Per-line RNGs are derived from (seed, index),
    so output is deterministic and independent of batching. Returns the pair
    list and the count of skipped (unparseable) queries. Every emitted pair
    is re-checked against its invariants.
    """
    pairs: list[PretrainPair] = []
    skipped = 0
    for index, query in enumerate(queries):
        try:
            parse(query)
        except SparqlKitError:
            skipped += 1
            continue
        text = query
        if verbalize_iris and label_map is not None:
            text = verbalize(text, label_map)
        toc = corrupt_toc(text, line_rng(seed, index, "toc"), config)
        mlm = corrupt_mlm(text, line_rng(seed, index, "mlm"), config)
        try:
            parse(toc.target)
        except SparqlKitError as exc:
            raise CorruptionInvariantError(
                f"TOC target does not parse for input line {index}"
            ) from exc
        original = join_tokens(token_texts(text))
        if reconstruct_mlm(mlm.input, mlm.target) != original:
            raise CorruptionInvariantError(
                f"MLM pair does not reconstruct for input line {index}"
            )
        pairs.append(toc)
        pairs.append(mlm)
    return pairs, skipped
