import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synmine.errors import (
    ConfigError,
    DegenerateEmbeddingError,
    DomainError,
    InputError,
    TransportError,
)
from synmine.ingest import ValueMultiset
from synmine.similarity import (
    CachingProvider,
    EmbeddingCache,
    EmbeddingProvider,
    HashingEmbeddingProvider,
    HttpEmbeddingProvider,
    PairScorer,
    SimilarityConfig,
    drs,
    embed_value,
    provider_from_env,
    semantic_similarity,
    textual_similarity,
    weighted_jaccard,
)
from synmine.wordpieces import build_table


class CountingStubProvider(EmbeddingProvider):
    """Fixed per-text vectors, plus a call log for cache and memo tests."""

    def __init__(self, vectors, dim):
        self.vectors = vectors
        self.dim = dim
        self.tag = "stub"
        self.calls = []

    def embed_batch(self, texts):
        self.calls.append(list(texts))
        return np.array([self.vectors[t] for t in texts], dtype=np.float64)


def gender_subtable():
    return build_table(ValueMultiset({"男": 25, "男性": 8, "女": 24, "女性": 7}), 6)


class TestWeightedJaccard:
    def test_identical_sets(self):
        assert weighted_jaccard({"a", "b"}, {"a", "b"}, {"a": 3, "b": 1}) == 1.0

    def test_disjoint_sets(self):
        assert weighted_jaccard({"a"}, {"b"}, {"a": 3, "b": 1}) == 0.0

    def test_hand_summed_fixture(self):
        table = gender_subtable()
        # shared {男} mass 33; union {男, 性, 男性} mass 33 + 15 + 8
        assert textual_similarity("男性", "男", table) == pytest.approx(33 / 56)

    def test_unrecorded_pieces_are_massless(self):
        assert weighted_jaccard({"a", "x"}, {"a"}, {"a": 2}) == 1.0

    def test_zero_union_mass_rejected(self):
        with pytest.raises(DomainError):
            weighted_jaccard({"x"}, {"y"}, {"a": 2})

    @settings(max_examples=200, deadline=None)
    @given(
        shared=st.sets(st.integers(0, 20), min_size=1, max_size=6),
        only_m=st.sets(st.integers(21, 40), max_size=6),
        only_n=st.sets(st.integers(41, 60), max_size=6),
        freqs=st.dictionaries(st.integers(0, 61), st.integers(1, 50)),
        extra=st.integers(1, 50),
    )
    def test_new_shared_piece_never_lowers_score(self, shared, only_m, only_n, freqs, extra):
        m = {str(p) for p in shared | only_m}
        n = {str(p) for p in shared | only_n}
        freq = {str(p): f for p, f in freqs.items()}
        freq.update({p: freq.get(p, 1) for p in m | n})
        base = weighted_jaccard(m, n, freq)
        freq["fresh"] = extra
        grown = weighted_jaccard(m | {"fresh"}, n | {"fresh"}, freq)
        assert grown >= base - 1e-12

    def test_char_jaccard_ignores_longer_pieces(self):
        table = gender_subtable()
        # single-char sets: {男, 性} vs {男}; shared 33, union 33 + 15
        assert textual_similarity("男性", "男", table, "char_jaccard") == pytest.approx(33 / 48)

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigError):
            textual_similarity("男", "女", gender_subtable(), "levenshtein")

    def test_empty_value_rejected(self):
        with pytest.raises(DomainError):
            textual_similarity("", "男", gender_subtable())


class TestHashingProvider:
    def test_deterministic_and_unit_norm(self):
        provider = HashingEmbeddingProvider(dim=64)
        a = provider.embed_batch(["连载", "完结"])
        b = provider.embed_batch(["连载", "完结"])
        assert np.array_equal(a, b)
        assert np.allclose(np.linalg.norm(a, axis=1), 1.0)

    def test_distinct_texts_get_distinct_vectors(self):
        provider = HashingEmbeddingProvider(dim=256)
        out = provider.embed_batch(["男", "女"])
        assert not np.allclose(out[0], out[1])

    def test_tag_names_dimension(self):
        assert HashingEmbeddingProvider(dim=32).tag == "hash-trigram-32"

    def test_bad_dim_rejected(self):
        with pytest.raises(ConfigError):
            HashingEmbeddingProvider(dim=0)


class TestEmbedValue:
    def test_single_piece_value_is_its_own_embedding(self):
        table = build_table(ValueMultiset({"男": 3}), 6)
        provider = HashingEmbeddingProvider(dim=64)
        expected = provider.embed_batch(["男"])[0]
        assert np.allclose(embed_value("男", table, provider), expected)

    def test_weighted_sum_recomputed_by_hand(self):
        table = gender_subtable()
        provider = HashingEmbeddingProvider(dim=64)
        pieces = sorted(table.pieces_of("男性"))
        vectors = provider.embed_batch(pieces)
        summed = sum(table.piece_freq[p] * vectors[i] for i, p in enumerate(pieces))
        expected = summed / np.linalg.norm(summed)
        assert np.allclose(embed_value("男性", table, provider), expected)

    def test_scaling_weights_changes_nothing_after_norm(self):
        provider = HashingEmbeddingProvider(dim=64)
        t1 = build_table(ValueMultiset({"男性": 8, "男": 25}), 6)
        t2 = build_table(ValueMultiset({"男性": 16, "男": 50}), 6)
        assert np.allclose(
            embed_value("男性", t1, provider), embed_value("男性", t2, provider)
        )

    def test_cancelling_pieces_raise_degenerate(self):
        table = build_table(ValueMultiset({"ab": 1}), 6)
        stub = CountingStubProvider({"a": [1.0, 0.0], "b": [-1.0, 0.0], "ab": [0.0, 0.0]}, 2)
        with pytest.raises(DegenerateEmbeddingError):
            embed_value("ab", table, stub)


class TestDrs:
    def test_self_similarity_is_one(self):
        table = gender_subtable()
        provider = HashingEmbeddingProvider(dim=64)
        assert drs("男性", "男性", table, provider) == pytest.approx(1.0)

    def test_matches_dot_product_oracle(self):
        table = gender_subtable()
        provider = HashingEmbeddingProvider(dim=64)
        expected = float(
            np.dot(embed_value("男", table, provider), embed_value("女", table, provider))
        )
        assert drs("男", "女", table, provider) == pytest.approx(expected)

    def test_orthogonal_vectors_score_zero(self):
        table = build_table(ValueMultiset({"a": 1, "b": 1}), 6)
        stub = CountingStubProvider({"a": [1.0, 0.0], "b": [0.0, 1.0]}, 2)
        assert drs("a", "b", table, stub) == 0.0

    def test_opposed_vectors_clamp_to_minus_one(self):
        table = build_table(ValueMultiset({"a": 1, "b": 1}), 6)
        stub = CountingStubProvider(
            {"a": [1.0, 0.0], "b": [-1.0 - 1e-15, 0.0]}, 2
        )
        assert drs("a", "b", table, stub) >= -1.0


class TestPairScorer:
    def make_scorer(self, table, provider=None, embedding_methods=None):
        provider = provider or HashingEmbeddingProvider(dim=64)
        if embedding_methods is None:
            embedding_methods = (provider.tag,)
        config = SimilarityConfig(embedding_methods=embedding_methods)
        return PairScorer(table, config, {provider.tag: provider})

    def test_product_of_both_factors(self):
        table = gender_subtable()
        provider = HashingEmbeddingProvider(dim=64)
        scorer = self.make_scorer(table, provider)
        ts = textual_similarity("男性", "男", table)
        cos = drs("男性", "男", table, provider)
        assert scorer.score("男性", "男") == pytest.approx(ts * max(0.0, cos))

    def test_symmetry(self):
        scorer = self.make_scorer(gender_subtable())
        assert scorer.score("男", "女") == pytest.approx(scorer.score("女", "男"))

    def test_textual_only_when_no_embedding_methods(self):
        table = gender_subtable()
        scorer = self.make_scorer(table, embedding_methods=())
        assert scorer.score("男性", "男") == pytest.approx(33 / 56)

    def test_negative_cosine_clamps_to_zero(self):
        table = build_table(ValueMultiset({"a": 2, "b": 1}), 6)
        stub = CountingStubProvider({"a": [1.0, 0.0], "b": [-1.0, 0.0]}, 2)
        scorer = self.make_scorer(table, stub)
        assert scorer.score("a", "b") == 0.0

    def test_embeddings_computed_once_per_value(self):
        table = build_table(ValueMultiset({"a": 1, "b": 1, "c": 1}), 6)
        stub = CountingStubProvider(
            {"a": [1.0, 0.0], "b": [0.8, 0.6], "c": [0.6, 0.8]}, 2
        )
        scorer = self.make_scorer(table, stub)
        for m, n in [("a", "b"), ("a", "c"), ("b", "c")]:
            scorer.score(m, n)
        assert len(stub.calls) == 3

    def test_missing_provider_rejected(self):
        config = SimilarityConfig(embedding_methods=("absent",))
        with pytest.raises(ConfigError):
            PairScorer(gender_subtable(), config, {})

    def test_no_textual_method_rejected(self):
        config = SimilarityConfig(textual_methods=())
        with pytest.raises(ConfigError):
            PairScorer(gender_subtable(), config, {})


class TestSemanticSimilarity:
    def test_different_properties_score_zero(self, default_sim_config, hash_provider):
        tables = {"性别": gender_subtable()}
        score = semantic_similarity(
            ("性别", "男"),
            ("状态", "男"),
            default_sim_config,
            tables,
            {hash_provider.tag: hash_provider},
        )
        assert score == 0.0

    def test_same_property_delegates_to_scorer(self, default_sim_config, hash_provider):
        table = gender_subtable()
        providers = {hash_provider.tag: hash_provider}
        scorer = PairScorer(table, default_sim_config, providers)
        assert semantic_similarity(
            ("性别", "男性"), ("性别", "男"), default_sim_config, {"性别": table}, providers
        ) == pytest.approx(scorer.score("男性", "男"))

    def test_unknown_property_rejected(self, default_sim_config, hash_provider):
        with pytest.raises(DomainError):
            semantic_similarity(
                ("性别", "男"),
                ("性别", "女"),
                default_sim_config,
                {},
                {hash_provider.tag: hash_provider},
            )


class _EmbedHandler(BaseHTTPRequestHandler):
    """Scripted embedding endpoint; behavior list lives on the server object."""

    def do_POST(self):
        server = self.server
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        server.requests.append(body["texts"])
        action = server.script[min(len(server.requests) - 1, len(server.script) - 1)]
        if action == "fail":
            self.send_response(500)
            self.end_headers()
            return
        if action == "short":
            payload = {"vectors": [[1.0, 0.0]], "dim": 2}
        elif action == "zero":
            payload = {"vectors": [[0.0, 0.0] for _ in body["texts"]], "dim": 2}
        elif action == "dim3":
            payload = {"vectors": [[1.0, 0.0, 0.0] for _ in body["texts"]], "dim": 3}
        else:
            payload = {"vectors": [[2.0, 0.0] for _ in body["texts"]], "dim": 2}
        data = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def embed_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _EmbedHandler)
    server.script = ["ok"]
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join()


def _client(server, **kwargs):
    kwargs.setdefault("backoff_base", 0.0)
    return HttpEmbeddingProvider(f"http://127.0.0.1:{server.server_address[1]}", **kwargs)


class TestHttpProvider:
    def test_batching_and_normalization(self, embed_server):
        provider = _client(embed_server, batch_size=2)
        out = provider.embed_batch(["a", "b", "c", "d", "e"])
        assert [len(r) for r in embed_server.requests] == [2, 2, 1]
        assert out.shape == (5, 2)
        assert np.allclose(out[:, 0], 1.0)  # 2.0 rows re-normalized
        assert provider.dim == 2

    def test_recovers_after_transient_failures(self, embed_server):
        embed_server.script = ["fail", "fail", "ok"]
        provider = _client(embed_server, max_attempts=3)
        out = provider.embed_batch(["a"])
        assert out.shape == (1, 2)
        assert len(embed_server.requests) == 3

    def test_exhausted_retries_raise_transport_error(self, embed_server):
        embed_server.script = ["fail"]
        provider = _client(embed_server, max_attempts=2)
        with pytest.raises(TransportError) as info:
            provider.embed_batch(["a"])
        assert info.value.exit_code == 5
        assert len(embed_server.requests) == 2

    def test_wrong_vector_count_fails_without_retry(self, embed_server):
        embed_server.script = ["short"]
        provider = _client(embed_server, max_attempts=3)
        with pytest.raises(TransportError):
            provider.embed_batch(["a", "b"])
        assert len(embed_server.requests) == 1

    def test_dim_change_mid_run_rejected(self, embed_server):
        embed_server.script = ["ok", "dim3"]
        provider = _client(embed_server, batch_size=1)
        with pytest.raises(TransportError):
            provider.embed_batch(["a", "b"])

    def test_zero_vector_is_domain_not_transport(self, embed_server):
        embed_server.script = ["zero"]
        provider = _client(embed_server)
        with pytest.raises(DegenerateEmbeddingError):
            provider.embed_batch(["a"])

    def test_unreachable_endpoint(self):
        provider = HttpEmbeddingProvider(
            "http://127.0.0.1:9", max_attempts=2, backoff_base=0.0, timeout=0.5
        )
        with pytest.raises(TransportError):
            provider.embed_batch(["a"])


class TestEmbeddingCache:
    def test_round_trip_through_fresh_instance(self, tmp_path):
        path = str(tmp_path / "cache.jsonl")
        cache = EmbeddingCache(path)
        cache.put_many("stub", ["男", "女"], np.array([[1.0, 0.0], [0.0, 1.0]]))
        reloaded = EmbeddingCache(path)
        assert np.array_equal(reloaded.get("stub", "男"), [1.0, 0.0])
        assert reloaded.get("stub", "missing") is None
        assert reloaded.get("other-tag", "男") is None

    def test_header_written_on_create(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        EmbeddingCache(str(path))
        header = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert header == {"format": "synmine-embedding-cache", "version": 1}

    def test_foreign_header_rejected(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        path.write_text('{"format": "something-else", "version": 9}\n', encoding="utf-8")
        with pytest.raises(InputError):
            EmbeddingCache(str(path))

    def test_corrupt_entry_rejected(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        path.write_text(
            json.dumps({"format": "synmine-embedding-cache", "version": 1})
            + '\n{"provider": "stub"}\n',
            encoding="utf-8",
        )
        with pytest.raises(InputError) as info:
            EmbeddingCache(str(path))
        assert "line 2" in str(info.value)


class TestCachingProvider:
    def test_only_misses_reach_inner_provider(self, tmp_path):
        stub = CountingStubProvider({"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [1.0, 1.0]}, 2)
        cached = CachingProvider(stub, EmbeddingCache(str(tmp_path / "c.jsonl")))
        cached.embed_batch(["a", "b"])
        out = cached.embed_batch(["b", "c", "a"])
        assert stub.calls == [["a", "b"], ["c"]]
        assert np.array_equal(out, [[0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])

    def test_cache_survives_provider_restart(self, tmp_path):
        path = str(tmp_path / "c.jsonl")
        stub = CountingStubProvider({"a": [1.0, 0.0]}, 2)
        CachingProvider(stub, EmbeddingCache(path)).embed_batch(["a"])
        stub2 = CountingStubProvider({}, 2)  # would KeyError on any call
        out = CachingProvider(stub2, EmbeddingCache(path)).embed_batch(["a"])
        assert stub2.calls == []
        assert np.array_equal(out, [[1.0, 0.0]])

    def test_tag_and_dim_pass_through(self, tmp_path):
        stub = CountingStubProvider({}, 7)
        cached = CachingProvider(stub, EmbeddingCache(str(tmp_path / "c.jsonl")))
        assert cached.tag == "stub"
        assert cached.dim == 7


class TestProviderFromEnv:
    def test_defaults_to_hashing(self, monkeypatch):
        monkeypatch.delenv("SYNSET_EMBED_ENDPOINT", raising=False)
        provider = provider_from_env(dim=32)
        assert isinstance(provider, HashingEmbeddingProvider)
        assert provider.dim == 32

    def test_env_endpoint_selects_http(self, monkeypatch):
        monkeypatch.setenv("SYNSET_EMBED_ENDPOINT", "http://example:9000")
        provider = provider_from_env()
        assert isinstance(provider, HttpEmbeddingProvider)
        assert provider.endpoint == "http://example:9000"

    def test_explicit_endpoint_beats_env(self, monkeypatch):
        monkeypatch.setenv("SYNSET_EMBED_ENDPOINT", "http://env:9000")
        provider = provider_from_env(endpoint="http://arg:9000")
        assert provider.endpoint == "http://arg:9000"

    def test_cache_path_wraps_provider(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SYNSET_EMBED_ENDPOINT", raising=False)
        provider = provider_from_env(cache_path=str(tmp_path / "c.jsonl"))
        assert isinstance(provider, CachingProvider)
