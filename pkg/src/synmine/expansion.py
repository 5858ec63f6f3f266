"""Grow synsets by swapping core word-pieces between their members.

A member's core parts are the substrings that carry its meaning: frequent,
internally cohesive (weakest-split PMI), and free on both flanks (neighbor
entropy).  The product of the three factors scores each candidate piece,
and the top non-overlapping pieces per value are its cores.  Replacing a
host's core with a donor's core, one site at a time, yields candidate
synonymous expressions that were never observed in the source triples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from synmine.clustering import Synset
from synmine.errors import ConfigError, DomainError
from synmine.wordpieces import WordPieceTable, lr_entropy, min_split_pmi

DEFAULT_CORES_PER_VALUE = 2
DEFAULT_MIN_PCS = 0.0
DEFAULT_EXPANSION_CAP = 64


@dataclass(frozen=True)
class PCSEntry:
    """Core-semantics score of one word-piece and its three factors."""

    piece: str
    freq: int
    pmi_min: float
    lrent: float
    pcs: float


@dataclass(frozen=True)
class ExpandedExpression:
    """One generated expression: donor_core spliced into host_value."""

    text: str
    donor_core: str
    host_value: str
    synset_id: str


def pcs_score(
    piece: str,
    table: WordPieceTable,
    lrent_mode: str = "min",
    pmi_normalization: str = "length_class",
) -> PCSEntry:
    """Score a piece as frequency x weakest-split PMI x neighbor entropy.

    Single characters have no internal split and cannot be scored; any
    zero factor (constant neighbors, for instance) zeroes the product.
    """
    if len(piece) < 2:
        raise DomainError(f"core-semantics score needs a piece of >= 2 characters, got {piece!r}")
    freq = table.require_piece(piece)
    pmi_min = min_split_pmi(piece, table, pmi_normalization)
    lrent = lr_entropy(piece, table, mode=lrent_mode)
    return PCSEntry(piece=piece, freq=freq, pmi_min=pmi_min, lrent=lrent, pcs=freq * pmi_min * lrent)


def _core_spans(
    value: str,
    table: WordPieceTable,
    k: int,
    min_pcs: float,
    lrent_mode: str = "min",
    pmi_normalization: str = "length_class",
) -> list[tuple[str, int, int]]:
    """Greedy non-overlapping core pieces of value as (piece, start, end).

    Candidates are every substring of 2..max_len characters that the table
    knows, ranked by score descending with ties to the longer piece, then
    the leftmost position.
    """
    if k < 1:
        raise ConfigError(f"core part count must be >= 1, got {k}")
    scores: dict[str, float] = {}
    candidates: list[tuple[float, int, int, str]] = []
    n = len(value)
    for start in range(n):
        for end in range(start + 2, min(start + table.max_len, n) + 1):
            piece = value[start:end]
            if piece not in scores:
                if table.piece_freq.get(piece, 0) <= 0:
                    scores[piece] = float("-inf")
                else:
                    scores[piece] = pcs_score(piece, table, lrent_mode, pmi_normalization).pcs
            if scores[piece] >= min_pcs:
                candidates.append((scores[piece], end - start, start, piece))
    candidates.sort(key=lambda c: (-c[0], -c[1], c[2]))
    chosen: list[tuple[str, int, int]] = []
    for _, length, start, piece in candidates:
        end = start + length
        if any(not (end <= s or start >= e) for _, s, e in chosen):
            continue
        chosen.append((piece, start, end))
        if len(chosen) == k:
            break
    return chosen


def core_parts(
    value: str,
    table: WordPieceTable,
    k: int = DEFAULT_CORES_PER_VALUE,
    min_pcs: float = DEFAULT_MIN_PCS,
    lrent_mode: str = "min",
    pmi_normalization: str = "length_class",
) -> list[str]:
    """The up-to-k core word-pieces of a value, best first."""
    return [
        piece
        for piece, _, _ in _core_spans(value, table, k, min_pcs, lrent_mode, pmi_normalization)
    ]


def expand_synset(
    synset: Synset,
    table: WordPieceTable,
    k: int = DEFAULT_CORES_PER_VALUE,
    min_pcs: float = DEFAULT_MIN_PCS,
    cap: int = DEFAULT_EXPANSION_CAP,
    donors: Sequence[tuple[str, int]] | None = None,
    exclude: set[str] | None = None,
    lrent_mode: str = "min",
    pmi_normalization: str = "length_class",
) -> list[ExpandedExpression]:
    """Generate expansions by splicing donor cores into host core sites.

    Every ordered (host, donor) pair of distinct values contributes one
    candidate per host core site per donor core; identical swaps, repeats,
    existing members, and anything in the caller's exclude set are
    dropped.  The survivors are ordered by (host frequency desc, host
    value, text) and cut to the cap.
    """
    if cap < 0:
        raise ConfigError(f"expansion cap must be >= 0, got {cap}")
    if cap == 0:
        return []
    donor_pool = list(donors) if donors is not None else list(synset.members)
    donor_pool.sort(key=lambda m: (-m[1], m[0]))
    member_values = {value for value, _ in synset.members}
    blocked = set(member_values)
    if exclude:
        blocked |= exclude
    span_cache: dict[str, list[tuple[str, int, int]]] = {}
    core_cache: dict[str, list[str]] = {}

    def spans_of(value: str) -> list[tuple[str, int, int]]:
        if value not in span_cache:
            span_cache[value] = _core_spans(value, table, k, min_pcs, lrent_mode, pmi_normalization)
        return span_cache[value]

    def cores_of(value: str) -> list[str]:
        if value not in core_cache:
            core_cache[value] = [piece for piece, _, _ in spans_of(value)]
        return core_cache[value]

    emitted: list[tuple[int, str, ExpandedExpression]] = []
    seen: set[str] = set()
    for host, host_freq in synset.members:
        host_spans = spans_of(host)
        if not host_spans:
            continue
        for donor, _ in donor_pool:
            if donor == host:
                continue
            for donor_core in cores_of(donor):
                for host_piece, start, end in host_spans:
                    if donor_core == host_piece:
                        continue
                    text = host[:start] + donor_core + host[end:]
                    if text == host or text in blocked or text in seen:
                        continue
                    seen.add(text)
                    emitted.append(
                        (
                            host_freq,
                            host,
                            ExpandedExpression(
                                text=text,
                                donor_core=donor_core,
                                host_value=host,
                                synset_id=synset.synset_id,
                            ),
                        )
                    )
    emitted.sort(key=lambda item: (-item[0], item[1], item[2].text))
    return [expression for _, _, expression in emitted[:cap]]
