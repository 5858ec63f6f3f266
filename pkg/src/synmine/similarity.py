"""Pairwise similarity of value objects under one property.

Two signals are combined: a frequency-weighted Jaccard over the values'
word-piece sets (textual), and cosine similarity of frequency-weighted
word-piece embedding sums (distributed).  The final score is 0 for values
of different properties and otherwise the product of every configured
textual and embedding factor, with negative cosines clamped to 0 so the
product stays in [0, 1].

Embeddings come from a provider behind a small interface.  The default is
a deterministic character-trigram hashing provider that needs no model and
no network; an HTTP client provider with batching, retries, and an on-disk
cache is available for real embedding services.
"""

from __future__ import annotations

import abc
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import httpx
import numpy as np

from synmine.errors import (
    ConfigError,
    DegenerateEmbeddingError,
    DomainError,
    InputError,
    TransportError,
)
from synmine.wordpieces import WordPieceTable

DEFAULT_EMBEDDING_DIM = 256
DEFAULT_BATCH_SIZE = 128
DEFAULT_MAX_ATTEMPTS = 3
ENDPOINT_ENV_VAR = "SYNSET_EMBED_ENDPOINT"

TEXTUAL_METHODS = ("weighted_jaccard", "char_jaccard")

_CACHE_HEADER = {"format": "synmine-embedding-cache", "version": 1}


@dataclass(frozen=True)
class SimilarityConfig:
    """Which textual and embedding factors enter the similarity product.

    At least one textual method is required; the embedding list may be
    empty for offline runs, in which case the product is textual-only.
    """

    textual_methods: tuple[str, ...] = ("weighted_jaccard",)
    embedding_methods: tuple[str, ...] = (f"hash-trigram-{DEFAULT_EMBEDDING_DIM}",)

    def validate(self) -> None:
        if len(self.textual_methods) < 1:
            raise ConfigError("at least one textual similarity method is required")
        for method in self.textual_methods:
            if method not in TEXTUAL_METHODS:
                raise ConfigError(f"unknown textual method: {method!r}")


class EmbeddingProvider(abc.ABC):
    """Maps batches of strings to unit-norm vectors of a fixed dimension."""

    tag: str
    dim: int

    @abc.abstractmethod
    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dim) with unit-norm rows."""


class HashingEmbeddingProvider(EmbeddingProvider):
    """Deterministic fallback: character trigrams hashed into a fixed space.

    Each text is padded with ^ and $ markers, every 3-character window is
    hashed to a (dimension, sign) pair, and the signed counts are
    L2-normalized.  No randomness, no state, same output on every run.
    """

    def __init__(self, dim: int = DEFAULT_EMBEDDING_DIM):
        if dim < 1:
            raise ConfigError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim
        self.tag = f"hash-trigram-{dim}"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            padded = f"^{text}$"
            for i in range(len(padded) - 2):
                trigram = padded[i : i + 3]
                digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
                h = int.from_bytes(digest, "big")
                sign = 1.0 if h & 1 == 0 else -1.0
                out[row, (h >> 1) % self.dim] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm == 0.0:
                raise DegenerateEmbeddingError(f"text {text!r} hashed to the zero vector")
            out[row] /= norm
        return out


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for an embedding service speaking the POST /embed contract.

    Requests are chunked to batch_size texts, each chunk retried with
    exponential backoff before a transport error is raised.  Returned
    vectors are re-normalized defensively; a zero vector from the service
    is a domain problem, not a transport one.
    """

    def __init__(
        self,
        endpoint: str,
        batch_size: int = DEFAULT_BATCH_SIZE,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff_base: float = 0.5,
        timeout: float = 30.0,
    ):
        if batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {batch_size}")
        if max_attempts < 1:
            raise ConfigError(f"max attempts must be >= 1, got {max_attempts}")
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.tag = f"http:{self.endpoint}"
        self.dim = 0  # discovered from the first response

    def _post_chunk(self, chunk: list[str]) -> list[list[float]]:
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt > 0:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                response = httpx.post(
                    f"{self.endpoint}/embed",
                    json={"texts": chunk},
                    timeout=self.timeout,
                )
                response.raise_for_status()
                payload = response.json()
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
                continue
            vectors = payload.get("vectors")
            dim = payload.get("dim")
            if not isinstance(vectors, list) or len(vectors) != len(chunk):
                raise TransportError(
                    f"embedding service returned {len(vectors) if isinstance(vectors, list) else 'no'}"
                    f" vectors for {len(chunk)} texts"
                )
            if self.dim == 0:
                if not isinstance(dim, int) or dim < 1:
                    raise TransportError(f"embedding service reported invalid dim: {dim!r}")
                self.dim = dim
            elif dim != self.dim:
                raise TransportError(f"embedding dim changed mid-run: {self.dim} -> {dim}")
            return vectors
        raise TransportError(
            f"embedding service unreachable after {self.max_attempts} attempts: {last_error}"
        )

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        rows: list[list[float]] = []
        texts = list(texts)
        for start in range(0, len(texts), self.batch_size):
            rows.extend(self._post_chunk(texts[start : start + self.batch_size]))
        out = np.asarray(rows, dtype=np.float64)
        if out.shape != (len(texts), self.dim):
            raise TransportError(f"embedding service returned shape {out.shape}")
        norms = np.linalg.norm(out, axis=1)
        if np.any(norms == 0.0):
            bad = texts[int(np.argmin(norms))]
            raise DegenerateEmbeddingError(f"service returned a zero vector for {bad!r}")
        return out / norms[:, np.newaxis]


class EmbeddingCache:
    """Append-only JSONL store of vectors keyed by (provider tag, text).

    The first line is a versioned header; each following line is one entry.
    Reads are lock-free against the in-memory map, writes are serialized.
    """

    def __init__(self, path: str):
        self.path = path
        self._entries: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()
        if os.path.exists(path):
            self._load()
        else:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(json.dumps(_CACHE_HEADER) + "\n")

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as handle:
            header_line = handle.readline()
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as exc:
                raise InputError(f"embedding cache {self.path}: unreadable header") from exc
            if header != _CACHE_HEADER:
                raise InputError(f"embedding cache {self.path}: unsupported header {header!r}")
            for lineno, line in enumerate(handle, start=2):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    key = (entry["provider"], entry["text"])
                    vector = np.asarray(entry["vector"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise InputError(f"embedding cache {self.path}: bad entry at line {lineno}") from exc
                self._entries[key] = vector

    def get(self, tag: str, text: str) -> np.ndarray | None:
        return self._entries.get((tag, text))

    def put_many(self, tag: str, texts: Sequence[str], vectors: np.ndarray) -> None:
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                for text, vector in zip(texts, vectors):
                    self._entries[(tag, text)] = np.asarray(vector, dtype=np.float64)
                    handle.write(
                        json.dumps(
                            {"provider": tag, "text": text, "vector": [float(x) for x in vector]},
                            ensure_ascii=False,
                        )
                        + "\n"
                    )


class CachingProvider(EmbeddingProvider):
    """Wraps any provider with an EmbeddingCache; only misses hit the inner one."""

    def __init__(self, inner: EmbeddingProvider, cache: EmbeddingCache):
        self.inner = inner
        self.cache = cache
        self.tag = inner.tag

    @property
    def dim(self) -> int:
        return self.inner.dim

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        hits: dict[int, np.ndarray] = {}
        misses: list[str] = []
        miss_rows: list[int] = []
        for row, text in enumerate(texts):
            cached = self.cache.get(self.tag, text)
            if cached is None:
                misses.append(text)
                miss_rows.append(row)
            else:
                hits[row] = cached
        if misses:
            fresh = self.inner.embed_batch(misses)
            self.cache.put_many(self.tag, misses, fresh)
            for row, vector in zip(miss_rows, fresh):
                hits[row] = vector
        return np.vstack([hits[row] for row in range(len(texts))])


def weighted_jaccard(pieces_m: set[str], pieces_n: set[str], freq: Mapping[str, int]) -> float:
    """Frequency-weighted Jaccard of two piece sets: shared mass over union mass."""
    union_mass = sum(freq.get(p, 0) for p in pieces_m | pieces_n)
    if union_mass == 0:
        raise DomainError("weighted Jaccard over pieces with no recorded frequency")
    shared_mass = sum(freq.get(p, 0) for p in pieces_m & pieces_n)
    return shared_mass / union_mass


def _piece_set(value: str, table: WordPieceTable, chars_only: bool) -> set[str]:
    pieces = table.pieces_of(value)
    if chars_only:
        pieces = {p for p in pieces if len(p) == 1}
    if not pieces:
        raise DomainError(f"value {value!r} has no word-pieces in the table for {table.property!r}")
    return pieces


def textual_similarity(
    o_m: str,
    o_n: str,
    table: WordPieceTable,
    method: str = "weighted_jaccard",
) -> float:
    """Weighted Jaccard of two values' word-piece sets under one property.

    ``char_jaccard`` restricts the sets to single characters; the default
    uses every recorded piece length.
    """
    if method not in TEXTUAL_METHODS:
        raise ConfigError(f"unknown textual method: {method!r}")
    if not o_m or not o_n:
        raise DomainError("textual similarity of an empty value is undefined")
    chars_only = method == "char_jaccard"
    pieces_m = _piece_set(o_m, table, chars_only)
    pieces_n = _piece_set(o_n, table, chars_only)
    return weighted_jaccard(pieces_m, pieces_n, table.piece_freq)


def embed_value(o: str, table: WordPieceTable, provider: EmbeddingProvider) -> np.ndarray:
    """Unit-norm frequency-weighted sum of a value's word-piece embeddings."""
    pieces = sorted(table.pieces_of(o))
    if not pieces:
        raise DomainError(f"value {o!r} has no word-pieces in the table for {table.property!r}")
    vectors = provider.embed_batch(pieces)
    weights = np.array([table.piece_freq[p] for p in pieces], dtype=np.float64)
    summed = weights @ vectors
    norm = float(np.linalg.norm(summed))
    if norm == 0.0:
        raise DegenerateEmbeddingError(f"weighted embedding sum of {o!r} is the zero vector")
    return summed / norm


def drs(o_m: str, o_n: str, table: WordPieceTable, provider: EmbeddingProvider) -> float:
    """Cosine similarity of the two values' aggregate embeddings, in [-1, 1]."""
    cosine = float(np.dot(embed_value(o_m, table, provider), embed_value(o_n, table, provider)))
    return max(-1.0, min(1.0, cosine))


class PairScorer:
    """Scores value pairs of one property, memoizing per-value state.

    Piece sets and aggregate embeddings are computed once per value, so an
    all-pairs sweep costs one embedding pass instead of one per pair.
    """

    def __init__(
        self,
        table: WordPieceTable,
        config: SimilarityConfig,
        providers: Mapping[str, EmbeddingProvider],
    ):
        config.validate()
        for tag in config.embedding_methods:
            if tag not in providers:
                raise ConfigError(f"no provider registered for embedding method {tag!r}")
        self.table = table
        self.config = config
        self.providers = providers
        self._piece_sets: dict[tuple[str, bool], set[str]] = {}
        self._embeddings: dict[tuple[str, str], np.ndarray] = {}

    def _pieces(self, value: str, chars_only: bool) -> set[str]:
        key = (value, chars_only)
        if key not in self._piece_sets:
            self._piece_sets[key] = _piece_set(value, self.table, chars_only)
        return self._piece_sets[key]

    def _embedding(self, value: str, tag: str) -> np.ndarray:
        key = (tag, value)
        if key not in self._embeddings:
            self._embeddings[key] = embed_value(value, self.table, self.providers[tag])
        return self._embeddings[key]

    def score(self, o_m: str, o_n: str) -> float:
        if not o_m or not o_n:
            raise DomainError("similarity of an empty value is undefined")
        product = 1.0
        for method in self.config.textual_methods:
            chars_only = method == "char_jaccard"
            product *= weighted_jaccard(
                self._pieces(o_m, chars_only),
                self._pieces(o_n, chars_only),
                self.table.piece_freq,
            )
        for tag in self.config.embedding_methods:
            e_m = self._embedding(o_m, tag)
            e_n = self._embedding(o_n, tag)
            cosine = float(np.dot(e_m, e_n))
            product *= max(0.0, min(1.0, cosine))
        return product


def semantic_similarity(
    pair_m: tuple[str, str],
    pair_n: tuple[str, str],
    config: SimilarityConfig,
    tables: Mapping[str, WordPieceTable],
    providers: Mapping[str, EmbeddingProvider],
) -> float:
    """Similarity of two (property, value) pairs; 0 when properties differ."""
    prop_m, o_m = pair_m
    prop_n, o_n = pair_n
    if prop_m != prop_n:
        return 0.0
    if prop_m not in tables:
        raise DomainError(f"no word-piece table for property {prop_m!r}")
    scorer = PairScorer(tables[prop_m], config, providers)
    return scorer.score(o_m, o_n)


def provider_from_env(
    endpoint: str | None = None,
    dim: int = DEFAULT_EMBEDDING_DIM,
    cache_path: str | None = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> EmbeddingProvider:
    """The standard provider: HTTP when an endpoint is configured, hashing otherwise."""
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    provider: EmbeddingProvider
    if endpoint:
        provider = HttpEmbeddingProvider(endpoint, batch_size=batch_size)
    else:
        provider = HashingEmbeddingProvider(dim=dim)
    if cache_path:
        provider = CachingProvider(provider, EmbeddingCache(cache_path))
    return provider
