"""Rank predicates by how categorical their value distribution looks.

A categorical property (Gender-like) concentrates on a few repeated value
strings built from a few repeated word-pieces, so both the value-distribution
entropy and the word-piece-distribution entropy are small.  A relation or
quantitative property (Address-, Birthday-like) spreads over many one-off
strings and scores high on both.  The PCP score divides the property's total
character volume by the product of the two entropies; higher means more
categorical.

Entropy is reported in bits.  The base cancels in rankings, which is all the
score is used for.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from synmine.errors import ConfigError, DomainError
from synmine.ingest import PropertyIndex, ValueMultiset

# Guards the entropy product when one factor underflows but is not exactly 0.
ENTROPY_EPSILON = 1e-9

DEFAULT_TOP_K = 5000
DEFAULT_MAX_WORDPIECE_LEN = 6


@dataclass(frozen=True)
class PropertyScore:
    predicate: str
    value_entropy: float
    wordpiece_entropy: float
    char_count: int
    pcp: float


def shannon_entropy(dist: Mapping[object, float]) -> float:
    """Shannon entropy in bits of a frequency map; zero-frequency entries contribute 0."""
    total = 0.0
    clogc = 0.0
    for freq in dist.values():
        if freq < 0:
            raise DomainError("negative frequency in distribution")
        if freq == 0:
            continue
        total += freq
        clogc += freq * math.log2(freq)
    if total == 0.0:
        raise DomainError("entropy of an empty or all-zero distribution is undefined")
    # -sum(q log2 q) with q = freq/total, rearranged to a single pass
    return max(0.0, math.log2(total) - clogc / total)


def iter_wordpieces(value: str, max_len: int):
    """All contiguous substrings of 1..max_len characters, one per occurrence."""
    n = len(value)
    for i in range(n):
        for j in range(i + 1, min(i + max_len, n) + 1):
            yield value[i:j]


def wordpiece_distribution(values: ValueMultiset, max_len: int = DEFAULT_MAX_WORDPIECE_LEN) -> Counter:
    """Word-piece frequency map of a value multiset.

    Every substring occurrence of 1..max_len characters counts, weighted by
    the frequency of the value it occurs in.
    """
    if max_len < 1:
        raise DomainError(f"max_len must be >= 1, got {max_len}")
    dist: Counter = Counter()
    for value, freq in values.entries.items():
        for piece in iter_wordpieces(value, max_len):
            dist[piece] += freq
    return dist


def pcp_score(
    values: ValueMultiset,
    max_len: int = DEFAULT_MAX_WORDPIECE_LEN,
    predicate: str = "",
) -> PropertyScore:
    """Score one property: char volume over the entropy product.

    A degenerate property (single repeated value: both entropies 0) gets the
    +inf sentinel so it ranks first when selecting the most categorical.
    """
    if not values.entries:
        raise DomainError("cannot score a property with no values")
    value_entropy = shannon_entropy(values.entries)
    wordpiece_entropy = shannon_entropy(wordpiece_distribution(values, max_len))
    char_count = sum(len(v) * f for v, f in values.entries.items())
    product = value_entropy * wordpiece_entropy
    if product == 0.0:
        pcp = math.inf
    else:
        pcp = char_count / max(ENTROPY_EPSILON, product)
    return PropertyScore(predicate, value_entropy, wordpiece_entropy, char_count, pcp)


def score_properties(index: PropertyIndex, max_len: int = DEFAULT_MAX_WORDPIECE_LEN) -> list[PropertyScore]:
    """PCP scores for every predicate, in deterministic predicate order."""
    return [
        pcp_score(index.properties[pred], max_len, predicate=pred)
        for pred in index.predicates()
    ]


def rank_scores(scores: list[PropertyScore], direction: str = "highest_pcp") -> list[PropertyScore]:
    """Order scores by PCP per direction; ties break lexicographically.

    ``direction`` selects the most categorical end (``highest_pcp``, default)
    or the opposite (``lowest_pcp``).  Both are exposed on purpose: the score's
    semantics say categorical properties sit at the high end, but some
    workflows want the other tail; the caller decides.
    """
    if direction not in ("highest_pcp", "lowest_pcp"):
        raise ConfigError(f"unknown direction: {direction!r}")
    if direction == "highest_pcp":
        return sorted(scores, key=lambda s: (-s.pcp, s.predicate))
    return sorted(scores, key=lambda s: (s.pcp, s.predicate))


def select_properties(
    index: PropertyIndex,
    k: int = DEFAULT_TOP_K,
    direction: str = "highest_pcp",
    max_len: int = DEFAULT_MAX_WORDPIECE_LEN,
) -> list[str]:
    """Deterministic top-k predicates by PCP, most categorical first by default."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    ranked = rank_scores(score_properties(index, max_len), direction)
    return [s.predicate for s in ranked[:k]]
