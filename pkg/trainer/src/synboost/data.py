"""Load mined synsets and a sentence corpus; mine training pairs from them.

The synset file is the miner's JSONL output, read verbatim: mined records
carry the expressions and their corpus frequencies, expanded records carry
generated expressions and share the synset_id of the mined record they
grew from.  Token pairs come from mined members only; expansion texts
join the substitution pool for sentence pairs when the caller opted in
at load time.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import torch

from synboost.errors import InputError
from synboost.losses import cosine_distance
from synboost.model import CharSentenceEncoder, ExpressionSpace

ORIGINS = ("mined", "expanded")


@dataclass
class SynsetMember:
    value: str
    freq: int


@dataclass
class Synset:
    """One mined synonym group, with any expansion texts grafted back on."""

    synset_id: str
    property: str
    members: list[SynsetMember]
    expansion_texts: list[str] = field(default_factory=list)


@dataclass
class TokenPair:
    """Pull the other expression toward the synset's most common one."""

    anchor: str
    other: str
    anchor_index: int
    other_index: int
    d0: float
    latched: bool = False
    latch_distance: float | None = None
    latch_epoch: int | None = None
    final_distance: float | None = None


@dataclass
class SentencePair:
    """A sentence and its copy with one synset-member substitution."""

    source: str
    variant: str
    replaced: str
    replacement: str
    d0: float
    latched: bool = False
    latch_distance: float | None = None
    latch_epoch: int | None = None
    final_distance: float | None = None


def _parse_member(raw: object, line_number: int) -> SynsetMember:
    if not isinstance(raw, dict) or not isinstance(raw.get("value"), str):
        raise InputError(f"synset file line {line_number}: member needs a string 'value'")
    freq = raw.get("freq")
    if not isinstance(freq, int) or isinstance(freq, bool) or freq < 0:
        raise InputError(f"synset file line {line_number}: member freq must be an integer >= 0")
    return SynsetMember(value=raw["value"], freq=freq)


def load_synsets(path: str, include_expanded: bool = False) -> list[Synset]:
    """Read the miner's synset JSONL, in file order.

    Expanded records are folded into the mined synset with the same id as
    extra expansion texts (kept only when include_expanded is set); an
    expanded record with no mined counterpart is an error.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise InputError(f"cannot read synsets {path}: {exc}") from exc

    synsets: list[Synset] = []
    by_id: dict[str, Synset] = {}
    pending: list[tuple[int, dict]] = []
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"synset file line {line_number}: not valid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise InputError(f"synset file line {line_number}: record must be a JSON object")
        synset_id = record.get("synset_id")
        origin = record.get("origin")
        if not isinstance(synset_id, str) or not synset_id:
            raise InputError(f"synset file line {line_number}: synset_id missing")
        if origin not in ORIGINS:
            raise InputError(f"synset file line {line_number}: unknown origin {origin!r}")
        members = record.get("members")
        if not isinstance(members, list) or not members:
            raise InputError(f"synset file line {line_number}: members must be a non-empty list")
        parsed = [_parse_member(m, line_number) for m in members]
        if origin == "mined":
            if synset_id in by_id:
                raise InputError(f"synset file line {line_number}: duplicate synset_id {synset_id!r}")
            values = [m.value for m in parsed]
            if len(set(values)) != len(values):
                raise InputError(f"synset file line {line_number}: duplicate member value")
            prop = record.get("property")
            if not isinstance(prop, str):
                raise InputError(f"synset file line {line_number}: property missing")
            synset = Synset(synset_id=synset_id, property=prop, members=parsed)
            synsets.append(synset)
            by_id[synset_id] = synset
        else:
            pending.append((line_number, record))

    for line_number, record in pending:
        synset = by_id.get(record["synset_id"])
        if synset is None:
            raise InputError(
                f"synset file line {line_number}: expanded record for unknown synset "
                f"{record['synset_id']!r}"
            )
        if include_expanded:
            texts = [m["value"] for m in record["members"]]
            synset.expansion_texts.extend(texts)
    return synsets


def load_corpus(path: str) -> list[str]:
    """One sentence per line, blank lines skipped."""
    try:
        with open(path, encoding="utf-8") as handle:
            return [line.strip() for line in handle if line.strip()]
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc


def make_token_pairs(synsets: list[Synset], space: ExpressionSpace) -> list[TokenPair]:
    """One pair per non-anchor member; the anchor is the most frequent member.

    Frequency ties break lexicographically.  Size-one synsets have nothing
    to pull and are skipped.  d0 is the distance under the space's current
    rows, so pairs should be mined before any training step.
    """
    pairs: list[TokenPair] = []
    for synset in synsets:
        if len(synset.members) < 2:
            continue
        ordered = sorted(synset.members, key=lambda m: (-m.freq, m.value))
        anchor = ordered[0]
        for other in ordered[1:]:
            pairs.append(
                TokenPair(
                    anchor=anchor.value,
                    other=other.value,
                    anchor_index=space.index_of(anchor.value),
                    other_index=space.index_of(other.value),
                    d0=0.0,
                )
            )
    if pairs:
        with torch.no_grad():
            anchors = space.representation([p.anchor_index for p in pairs])
            others = space.representation([p.other_index for p in pairs])
            for pair, d in zip(pairs, cosine_distance(others, anchors).tolist()):
                pair.d0 = d
    return pairs


def _leftmost_match(sentence: str, pool: list[str]) -> tuple[int, str] | None:
    best: tuple[int, int, str] | None = None
    for text in pool:
        position = sentence.find(text)
        if position < 0:
            continue
        key = (position, -len(text), text)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return best[0], best[2]


def make_sentence_pairs(
    corpus: list[str],
    synsets: list[Synset],
    encoder: CharSentenceEncoder,
    seed: int = 0,
) -> list[SentencePair]:
    """Substitute one synset member per matching sentence, per synset.

    The leftmost occurrence of any pool text is the substitution site
    (longest text wins a shared start); the replacement is a seeded random
    draw from the rest of the pool.  Each emitted pair differs from its
    source by exactly that one span.
    """
    rng = random.Random(seed)
    pairs: list[SentencePair] = []
    for sentence in corpus:
        for synset in synsets:
            pool = [m.value for m in synset.members] + synset.expansion_texts
            match = _leftmost_match(sentence, pool)
            if match is None:
                continue
            position, matched = match
            candidates = sorted(t for t in pool if t != matched)
            if not candidates:
                continue
            replacement = rng.choice(candidates)
            variant = sentence[:position] + replacement + sentence[position + len(matched):]
            pairs.append(
                SentencePair(
                    source=sentence,
                    variant=variant,
                    replaced=matched,
                    replacement=replacement,
                    d0=0.0,
                )
            )
    if pairs:
        with torch.no_grad():
            sources = encoder.encode([p.source for p in pairs])
            variants = encoder.encode([p.variant for p in pairs])
            for pair, d in zip(pairs, cosine_distance(sources, variants).tolist()):
                pair.d0 = d
    return pairs
