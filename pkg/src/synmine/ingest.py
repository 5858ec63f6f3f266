"""Stream-parse KG triple dumps and build the per-predicate value index.

Two input formats are supported:

* ``tsv`` — UTF-8, one triple per line, ``subject<TAB>predicate<TAB>object``;
  extra fields are ignored.  TSV carries no literal marking, so objects are
  recorded as literals.
* ``ntriples_subset`` — lines of ``<iri> <iri> (<iri>|"literal") .``.  Full
  N-Triples (datatypes, language tags, blank nodes) is deliberately not
  implemented; crowd-sourced dumps reduce to plain s/p/o strings for this
  pipeline.

Malformed lines never abort the stream: they are counted and skipped, and the
count is surfaced in the final report.
"""

from __future__ import annotations

import io
import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator

from synmine.errors import ConfigError, InputError


class ObjectKind(str, Enum):
    ENTITY_REF = "entity_ref"
    LITERAL = "literal"


@dataclass(frozen=True)
class Triple:
    """One subject/predicate/object fact. Fields are NFC-normalized and trimmed."""

    subject: str
    predicate: str
    object: str
    object_kind: ObjectKind = ObjectKind.LITERAL


@dataclass
class ParseStats:
    """Line accounting for one parse run; malformed lines are skipped, never fatal."""

    total_lines: int = 0
    parsed: int = 0
    malformed: int = 0


@dataclass
class ValueMultiset:
    """Multiset of value strings observed under one predicate."""

    entries: dict[str, int] = field(default_factory=dict)

    def add(self, value: str, count: int = 1) -> None:
        self.entries[value] = self.entries.get(value, 0) + count

    @property
    def distinct_count(self) -> int:
        return len(self.entries)

    def total(self) -> int:
        return sum(self.entries.values())

    def items_by_frequency(self) -> list[tuple[str, int]]:
        """Values ordered by (frequency desc, value lexicographic) — the canonical node order."""
        return sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass
class PropertyIndex:
    """Per-predicate value multisets; the substrate every downstream stage reads.

    Immutable once built (by convention); safe for concurrent reads.
    """

    properties: dict[str, ValueMultiset] = field(default_factory=dict)
    total_triples: int = 0

    def add(self, predicate: str, value: str, count: int = 1) -> None:
        ms = self.properties.get(predicate)
        if ms is None:
            ms = self.properties[predicate] = ValueMultiset()
        ms.add(value, count)
        self.total_triples += count

    def predicates(self) -> list[str]:
        """Deterministic (lexicographic) predicate order."""
        return sorted(self.properties)

    def merge(self, other: "PropertyIndex") -> "PropertyIndex":
        """Merge a per-shard partial index into this one; commutative and associative."""
        for pred in other.properties:
            for value, count in other.properties[pred].entries.items():
                self.add(pred, value, count)
        return self

    def to_json_dict(self) -> dict[str, dict[str, int]]:
        return {
            pred: dict(sorted(self.properties[pred].entries.items()))
            for pred in self.predicates()
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, ensure_ascii=False, indent=0, sort_keys=True)

    @classmethod
    def from_json_dict(cls, data: dict[str, dict[str, int]]) -> "PropertyIndex":
        index = cls()
        for pred, entries in data.items():
            for value, count in entries.items():
                index.add(pred, value, int(count))
        return index

    @classmethod
    def load(cls, path: str) -> "PropertyIndex":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load property index from {path}: {exc}") from exc


_NT_LINE = re.compile(
    r'^<([^<>]*)>\s+<([^<>]*)>\s+(?:<([^<>]*)>|"((?:[^"\\]|\\.)*)")\s*\.\s*$'
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def _decode_literal(raw: str) -> str:
    """Decode \\n, \\t, \\" and \\\\; any other escape keeps its backslash."""
    if "\\" not in raw:
        return raw
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _canon(s: str) -> str:
    return unicodedata.normalize("NFC", s).strip()


def _lines(stream: IO | Iterable[str] | Iterable[bytes]) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            yield line.decode("utf-8", errors="replace")
        else:
            yield line


def parse_triples(
    stream: IO | Iterable[str] | Iterable[bytes],
    fmt: str = "tsv",
    stats: ParseStats | None = None,
) -> Iterator[Triple]:
    """Yield one Triple per well-formed line, in input order.

    ``stream`` is any iterable of text or byte lines (an open file works).
    Malformed lines bump ``stats.malformed`` and are skipped.  I/O errors from
    the stream propagate; an unknown ``fmt`` raises ConfigError before any
    line is read.
    """
    if fmt not in ("tsv", "ntriples_subset"):
        raise ConfigError(f"unknown triple format: {fmt!r}")
    if stats is None:
        stats = ParseStats()

    for line in _lines(stream):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        stats.total_lines += 1
        triple = _parse_line(line, fmt)
        if triple is None:
            stats.malformed += 1
            continue
        stats.parsed += 1
        yield triple


def _parse_line(line: str, fmt: str) -> Triple | None:
    if fmt == "tsv":
        fields = line.split("\t")
        if len(fields) < 3:
            return None
        subject = _canon(fields[0])
        predicate = _canon(fields[1])
        obj = _canon(fields[2])
        if not subject or not predicate:
            return None
        # TSV has no literal marking; objects are value strings.
        return Triple(subject, predicate, obj, ObjectKind.LITERAL)

    m = _NT_LINE.match(line.strip())
    if m is None:
        return None
    subject = _canon(m.group(1))
    predicate = _canon(m.group(2))
    if not subject or not predicate:
        return None
    if m.group(3) is not None:
        return Triple(subject, predicate, _canon(m.group(3)), ObjectKind.ENTITY_REF)
    return Triple(subject, predicate, _canon(_decode_literal(m.group(4))), ObjectKind.LITERAL)


def parse_triples_path(path: str, fmt: str = "tsv", stats: ParseStats | None = None) -> Iterator[Triple]:
    """parse_triples over a file path; the file handle closes with the iterator."""
    try:
        fh: IO = open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        yield from parse_triples(io.TextIOWrapper(fh, encoding="utf-8"), fmt, stats)


def build_property_index(triples: Iterable[Triple]) -> PropertyIndex:
    """Record every object string under its predicate with multiplicity.

    Subjects are discarded: mining uses only predicate-to-object distributions.
    Both literals and entity references are kept as candidate values.
    """
    index = PropertyIndex()
    for t in triples:
        index.add(t.predicate, t.object)
    return index
