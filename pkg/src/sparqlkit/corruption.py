"""Denoising corruption generators for pretraining pairs.

Four objectives over a SPARQL query:

* TOC  - independently permute (subject, relation, object) within each
  triple; the model must restore the original order.
* MLM  - T5-style span masking: spans of the token sequence are replaced by
  ``<extra_id_k>`` sentinels and the target concatenates the sentinels with
  the masked spans, ending with a terminal sentinel.
* TFC  - variant of TOC that only swaps subject and object, each triple
  independently with a fixed probability.
* SOC  - shuffle a fraction of token positions uniformly.

All generators are pure given an explicit ``random.Random``; batch drivers
derive a per-line RNG from (seed, line index) via ``line_rng`` so parallel
and serial runs produce identical output.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from dataclasses import dataclass
from enum import Enum
from itertools import permutations

from .core import expand_abbreviations, extract_triples, parse, rewrite_triple, serialize
from .core.tokens import join_tokens, token_texts


class Objective(Enum):
    TOC = "toc"
    MLM = "mlm"
    TFC = "tfc"
    SOC = "soc"


@dataclass(frozen=True)
class CorruptionConfig:
    """Knobs for the corruption generators.

    ``toc_identity_probability`` is the mass given to the unchanged ordering;
    the remaining mass is split uniformly over the five non-identity
    orderings, so the default 1/6 makes all six orderings equally likely.
    MLM defaults (15% corruption, mean span 3) follow the usual T5 setup.
    """

    toc_identity_probability: float = 1.0 / 6.0
    mlm_corruption_rate: float = 0.15
    mlm_mean_span_length: float = 3.0
    soc_shuffle_fraction: float = 0.15
    tfc_flip_probability: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        for name in (
            "toc_identity_probability",
            "mlm_corruption_rate",
            "soc_shuffle_fraction",
            "tfc_flip_probability",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")
        if self.mlm_mean_span_length < 1.0:
            raise ValueError(
                f"mlm_mean_span_length must be >= 1, got {self.mlm_mean_span_length}"
            )


@dataclass(frozen=True)
class PretrainPair:
    objective: Objective
    input: str
    target: str


IDENTITY_ORDER = (0, 1, 2)
_NON_IDENTITY_ORDERS = tuple(p for p in permutations(range(3)) if p != IDENTITY_ORDER)


def line_rng(seed: int, index: int, salt: str = "") -> random.Random:
    """Deterministic per-line RNG, stable across platforms and runs."""
    digest = hashlib.sha256(f"{seed}:{index}:{salt}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def sample_permutation(rng: random.Random, config: CorruptionConfig) -> tuple[int, int, int]:
    """Draw an ordering of the three triple positions.

    Returns indices into the original (s, p, o): the permuted triple is
    ``(t[p[0]], t[p[1]], t[p[2]])``. Exactly one uniform draw decides
    identity-vs-not; a second picks among the five rearrangements.
    """
    if rng.random() < config.toc_identity_probability:
        return IDENTITY_ORDER
    return _NON_IDENTITY_ORDERS[rng.randrange(len(_NON_IDENTITY_ORDERS))]


def corrupt_toc(query_text: str, rng: random.Random, config: CorruptionConfig) -> PretrainPair:
    """Permute each triple's element order independently; target is the
    canonical serialization of the abbreviation-expanded original."""
    original = expand_abbreviations(parse(query_text))
    corrupted = original
    for path, pattern in extract_triples(original):
        order = sample_permutation(rng, config)
        if order != IDENTITY_ORDER:
            corrupted = rewrite_triple(corrupted, path, pattern.permuted(order))
    return PretrainPair(Objective.TOC, serialize(corrupted), serialize(original))


def corrupt_tfc(query_text: str, rng: random.Random, config: CorruptionConfig) -> PretrainPair:
    """Swap subject and object of each triple with ``tfc_flip_probability``."""
    original = expand_abbreviations(parse(query_text))
    corrupted = original
    for path, pattern in extract_triples(original):
        if rng.random() < config.tfc_flip_probability:
            corrupted = rewrite_triple(corrupted, path, pattern.permuted((2, 1, 0)))
    return PretrainPair(Objective.TFC, serialize(corrupted), serialize(original))


def corrupt_soc(query_text: str, rng: random.Random, config: CorruptionConfig) -> PretrainPair:
    """Shuffle ceil(fraction * n) token positions among themselves.

    Works on the token stream only (the query need not parse); the target is
    the single-space token join of the original.
    """
    tokens = token_texts(query_text)
    n = len(tokens)
    k = min(n, math.ceil(config.soc_shuffle_fraction * n))
    target = join_tokens(tokens)
    if k < 2:
        return PretrainPair(Objective.SOC, target, target)
    positions = sorted(rng.sample(range(n), k))
    values = [tokens[i] for i in positions]
    rng.shuffle(values)
    shuffled = list(tokens)
    for pos, value in zip(positions, values):
        shuffled[pos] = value
    return PretrainPair(Objective.SOC, join_tokens(shuffled), target)


SENTINEL_FORMAT = "<extra_id_{}>"
SENTINEL_RE = re.compile(r"<extra_id_(\d+)>")


def corrupt_mlm(query_text: str, rng: random.Random, config: CorruptionConfig) -> PretrainPair:
    """Span-mask the token stream with sentinel markers.

    Spans are chosen non-adjacent and non-overlapping until at least
    ``mlm_corruption_rate`` of the tokens are covered (or no further span
    fits); lengths follow a geometric distribution with the configured mean,
    truncated to the remaining budget. Queries shorter than 2 tokens yield a
    maskless pair whose target is the lone terminal sentinel.
    """
    tokens = token_texts(query_text)
    n = len(tokens)
    if n < 2:
        return PretrainPair(Objective.MLM, join_tokens(tokens), SENTINEL_FORMAT.format(0))
    need = math.ceil(config.mlm_corruption_rate * n) if config.mlm_corruption_rate > 0 else 0
    spans = _choose_spans(rng, n, need, config.mlm_mean_span_length)
    input_tokens, target_tokens = apply_span_mask(tokens, spans)
    return PretrainPair(Objective.MLM, join_tokens(input_tokens), join_tokens(target_tokens))


def _choose_spans(
    rng: random.Random, n: int, need: int, mean_span: float
) -> list[tuple[int, int]]:
    """Non-adjacent, non-overlapping (start, length) spans covering >= need tokens."""
    masked = [False] * n
    spans: list[tuple[int, int]] = []
    covered = 0
    while covered < need:
        remaining = need - covered
        length = min(_geometric(rng, mean_span), remaining, n)
        start = _place_span(rng, masked, length)
        while start is None and length > 1:
            length -= 1
            start = _place_span(rng, masked, length)
        if start is None:
            break  # nothing fits anymore; coverage stays short
        for i in range(start, start + length):
            masked[i] = True
        spans.append((start, length))
        covered += length
    spans.sort()
    return spans


def _geometric(rng: random.Random, mean: float) -> int:
    if mean <= 1.0:
        return 1
    p = 1.0 / mean
    u = rng.random()
    return 1 + int(math.log(1.0 - u) / math.log(1.0 - p))


def _place_span(rng: random.Random, masked: list[bool], length: int) -> int | None:
    """Uniformly pick a start where the span fits without touching a mask."""
    n = len(masked)
    candidates = [
        start
        for start in range(n - length + 1)
        if not any(masked[start : start + length])
        and (start == 0 or not masked[start - 1])
        and (start + length == n or not masked[start + length])
    ]
    if not candidates:
        return None
    return candidates[rng.randrange(len(candidates))]


def apply_span_mask(
    tokens: list[str], spans: list[tuple[int, int]]
) -> tuple[list[str], list[str]]:
    """Replace each (start, length) span with a sentinel; build the target.

    Input gets ``<extra_id_k>`` for span k in order; the target is
    ``<extra_id_0> span0 <extra_id_1> span1 ... <extra_id_n>`` with a
    terminal sentinel after the last span.
    """
    input_tokens: list[str] = []
    target_tokens: list[str] = []
    pos = 0
    for k, (start, length) in enumerate(spans):
        input_tokens.extend(tokens[pos:start])
        input_tokens.append(SENTINEL_FORMAT.format(k))
        target_tokens.append(SENTINEL_FORMAT.format(k))
        target_tokens.extend(tokens[start : start + length])
        pos = start + length
    input_tokens.extend(tokens[pos:])
    target_tokens.append(SENTINEL_FORMAT.format(len(spans)))
    return input_tokens, target_tokens


def reconstruct_mlm(input_text: str, target_text: str) -> str:
    """Substitute the target's spans back into the masked input.

    Independent inverse of the masking construction, used to check the
    reconstruction invariant: the result must equal the original token join.
    """
    spans: dict[int, list[str]] = {}
    current: list[str] | None = None
    for tok in target_text.split(" "):
        m = SENTINEL_RE.fullmatch(tok)
        if m:
            current = []
            spans[int(m.group(1))] = current
        elif current is not None:
            current.append(tok)
        else:
            raise ValueError("target does not start with a sentinel")
    out: list[str] = []
    for tok in input_text.split(" "):
        m = SENTINEL_RE.fullmatch(tok)
        if m:
            out.extend(spans.get(int(m.group(1)), []))
        else:
            out.append(tok)
    return " ".join(out)


def corrupt(
    query_text: str, objective: Objective, rng: random.Random, config: CorruptionConfig
) -> PretrainPair:
    """Dispatch by objective."""
    fn = {
        Objective.TOC: corrupt_toc,
        Objective.MLM: corrupt_mlm,
        Objective.TFC: corrupt_tfc,
        Objective.SOC: corrupt_soc,
    }[objective]
    return fn(query_text, rng, config)
