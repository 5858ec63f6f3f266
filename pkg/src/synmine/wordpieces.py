"""Per-property word-piece statistics: frequencies, neighbors, PMI, entropies.

One WordPieceTable is built per selected property and never mutated after.
It records, for every contiguous substring of 1..max_len characters, how
often it occurs (weighted by value frequency) and which single characters
flank each occurrence.  Occurrences at a value boundary record the sentinel
character instead; neighbor contexts never cross from one value into another.

PMI and neighbor entropy queries on the table feed both the similarity
weighting and the core-part scoring used during expansion.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
import math

from synmine.errors import ConfigError, DomainError
from synmine.ingest import ValueMultiset
from synmine.selection import iter_wordpieces, shannon_entropy

# Marks a missing neighbor at the start or end of a value string.
BOUNDARY_CHAR = "⟂"  # ⟂

LR_ENTROPY_MODES = ("min", "avg")
PMI_NORMALIZATIONS = ("length_class", "all_pieces")


@dataclass
class WordPieceTable:
    property: str
    max_len: int
    piece_freq: Counter = field(default_factory=Counter)
    left_neighbors: dict[str, Counter] = field(default_factory=dict)
    right_neighbors: dict[str, Counter] = field(default_factory=dict)
    # piece length -> summed frequency of all pieces of that length; the
    # length-1 entry doubles as the total character occurrence count.
    length_class_totals: dict[int, int] = field(default_factory=dict)

    @property
    def total_char_occurrences(self) -> int:
        return self.length_class_totals.get(1, 0)

    def require_piece(self, piece: str) -> int:
        freq = self.piece_freq.get(piece, 0)
        if freq <= 0:
            raise DomainError(f"word-piece {piece!r} not recorded for property {self.property!r}")
        return freq

    def pieces_of(self, value: str) -> set[str]:
        """The set of this value's word-pieces that the table knows about."""
        return {p for p in iter_wordpieces(value, self.max_len) if p in self.piece_freq}


def build_table(values: ValueMultiset, max_len: int, property: str = "") -> WordPieceTable:
    """Scan every value once, recording piece counts and flanking characters.

    All counts are weighted by the value's frequency, so a value seen 25
    times contributes 25 to each of its piece and neighbor entries.
    """
    if max_len < 1:
        raise DomainError(f"max_len must be >= 1, got {max_len}")
    table = WordPieceTable(property=property, max_len=max_len)
    freq_map = table.piece_freq
    left = table.left_neighbors
    right = table.right_neighbors
    for value, freq in values.entries.items():
        n = len(value)
        for i in range(n):
            upper = min(i + max_len, n)
            left_char = value[i - 1] if i > 0 else BOUNDARY_CHAR
            for j in range(i + 1, upper + 1):
                piece = value[i:j]
                freq_map[piece] += freq
                right_char = value[j] if j < n else BOUNDARY_CHAR
                if piece not in left:
                    left[piece] = Counter()
                    right[piece] = Counter()
                left[piece][left_char] += freq
                right[piece][right_char] += freq
    totals: dict[int, int] = {}
    for piece, freq in freq_map.items():
        totals[len(piece)] = totals.get(len(piece), 0) + freq
    table.length_class_totals = totals
    return table


def pmi(
    x: str,
    y: str,
    table: WordPieceTable,
    normalization: str = "length_class",
) -> float:
    """PMI in bits of the pieces x and y forming the whole piece x+y.

    Probabilities are normalized within length classes by default, which
    keeps independent pieces near 0; ``all_pieces`` divides everything by
    the grand total instead.
    """
    if normalization not in PMI_NORMALIZATIONS:
        raise ConfigError(f"unknown pmi normalization: {normalization!r}")
    f_x = table.require_piece(x)
    f_y = table.require_piece(y)
    f_xy = table.require_piece(x + y)
    if normalization == "length_class":
        t_x = table.length_class_totals[len(x)]
        t_y = table.length_class_totals[len(y)]
        t_xy = table.length_class_totals[len(x) + len(y)]
        p_x = f_x / t_x
        p_y = f_y / t_y
        p_xy = f_xy / t_xy
    else:
        grand = sum(table.length_class_totals.values())
        p_x = f_x / grand
        p_y = f_y / grand
        p_xy = f_xy / grand
    return math.log2(p_xy / (p_x * p_y))


def min_split_pmi(piece: str, table: WordPieceTable, normalization: str = "length_class") -> float:
    """Cohesion of a multi-character piece: the weakest internal split.

    Every split point must be scorable; a piece recorded by build_table
    always has all its substrings recorded too, so a missing half means
    the piece and table do not belong together.
    """
    if len(piece) < 2:
        raise DomainError("single characters have no internal split")
    best = math.inf
    for cut in range(1, len(piece)):
        score = pmi(piece[:cut], piece[cut:], table, normalization)
        if score < best:
            best = score
    return best


def lr_entropy(w: str, table: WordPieceTable, mode: str = "min") -> float:
    """Neighbor-character entropy of a piece, in bits.

    ``min`` (default) takes the more constrained side: a piece is only as
    free as its tighter flank.  The boundary sentinel participates as an
    ordinary symbol.
    """
    if mode not in LR_ENTROPY_MODES:
        raise ConfigError(f"unknown lr-entropy mode: {mode!r}")
    table.require_piece(w)
    h_left = shannon_entropy(table.left_neighbors[w])
    h_right = shannon_entropy(table.right_neighbors[w])
    if mode == "min":
        return min(h_left, h_right)
    return (h_left + h_right) / 2.0


def dump_tsv(table: WordPieceTable, stream) -> None:
    """Debug dump: piece, frequency, and both neighbor entropies per line."""
    for piece in sorted(table.piece_freq):
        h_l = shannon_entropy(table.left_neighbors[piece])
        h_r = shannon_entropy(table.right_neighbors[piece])
        stream.write(f"{piece}\t{table.piece_freq[piece]}\t{h_l:.6f}\t{h_r:.6f}\n")
