import io
import json
import unicodedata
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synmine.errors import ConfigError, InputError
from synmine.ingest import (
    ObjectKind,
    ParseStats,
    PropertyIndex,
    Triple,
    ValueMultiset,
    build_property_index,
    parse_triples,
    parse_triples_path,
)


def parse_tsv(text):
    stats = ParseStats()
    triples = list(parse_triples(io.StringIO(text), "tsv", stats))
    return triples, stats


class TestTsvParsing:
    def test_basic_line(self):
        triples, stats = parse_tsv("e1\t性别\t男\n")
        assert triples == [Triple("e1", "性别", "男", ObjectKind.LITERAL)]
        assert stats.parsed == 1 and stats.malformed == 0

    def test_extra_fields_ignored(self):
        triples, _ = parse_tsv("e1\tp\tv\tcomment\tmore\n")
        assert triples[0].object == "v"

    def test_too_few_fields_is_malformed(self):
        triples, stats = parse_tsv("just_one\ntwo\tfields\n")
        assert triples == []
        assert stats.malformed == 2

    def test_empty_subject_or_predicate_is_malformed(self):
        _, stats = parse_tsv("\tp\tv\ne1\t\tv\n")
        assert stats.malformed == 2

    def test_blank_lines_skipped_without_counting(self):
        triples, stats = parse_tsv("\n\ne1\tp\tv\n\n")
        assert len(triples) == 1
        assert stats.malformed == 0

    def test_values_are_nfc_normalized_and_trimmed(self):
        # e + combining acute composes to the single code point
        decomposed = "Café"
        triples, _ = parse_tsv(f"e1\tp\t  {decomposed} \n")
        assert triples[0].object == unicodedata.normalize("NFC", decomposed)

    def test_unknown_format_rejected(self):
        with pytest.raises(ConfigError):
            list(parse_triples(io.StringIO(""), "csv"))


class TestNtriplesParsing:
    def parse(self, text):
        stats = ParseStats()
        return list(parse_triples(io.StringIO(text), "ntriples_subset", stats)), stats

    def test_entity_object(self):
        triples, _ = self.parse("<http://e/1> <http://p/rel> <http://e/2> .\n")
        assert triples[0].object_kind is ObjectKind.ENTITY_REF
        assert triples[0].object == "http://e/2"

    def test_literal_object_with_escapes(self):
        triples, _ = self.parse('<e> <p> "line\\nbreak\\ttab\\"q\\\\s" .\n')
        assert triples[0].object == 'line\nbreak\ttab"q\\s'
        assert triples[0].object_kind is ObjectKind.LITERAL

    def test_unknown_escape_keeps_backslash(self):
        triples, _ = self.parse('<e> <p> "a\\xb" .\n')
        assert triples[0].object == "a\\xb"

    def test_missing_dot_is_malformed(self):
        _, stats = self.parse('<e> <p> "v"\n')
        assert stats.malformed == 1


class TestValueMultiset:
    def test_ranking_by_frequency_then_value(self):
        vm = ValueMultiset({})
        vm.add("b", 2)
        vm.add("a", 2)
        vm.add("c", 5)
        assert vm.items_by_frequency() == [("c", 5), ("a", 2), ("b", 2)]
        assert vm.distinct_count == 3
        assert vm.total() == 9


class TestPropertyIndex:
    def test_build_from_triples_discards_subjects(self):
        triples = [
            Triple("e1", "p", "x"),
            Triple("e2", "p", "x"),
            Triple("e3", "q", "y"),
        ]
        index = build_property_index(triples)
        assert index.properties["p"].entries == {"x": 2}
        assert index.properties["q"].entries == {"y": 1}
        assert index.total_triples == 3

    def test_round_trip_through_json(self, tmp_path):
        index = build_property_index([Triple("e", "性别", "男"), Triple("f", "性别", "女")])
        path = str(tmp_path / "index.json")
        index.save(path)
        loaded = PropertyIndex.load(path)
        assert loaded.properties["性别"].entries == index.properties["性别"].entries
        assert loaded.total_triples == index.total_triples

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json at all", encoding="utf-8")
        with pytest.raises(InputError):
            PropertyIndex.load(str(path))

    def test_merge_is_commutative(self):
        # merge folds into self, so build fresh shards for each direction
        t_a = [Triple("e", "p", "x"), Triple("e", "q", "z")]
        t_b = [Triple("f", "p", "x"), Triple("f", "p", "y")]
        ab = build_property_index(t_a).merge(build_property_index(t_b))
        ba = build_property_index(t_b).merge(build_property_index(t_a))
        assert ab.to_json_dict() == ba.to_json_dict()
        assert ab.total_triples == ba.total_triples == 4

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["p1", "p2", "p3"]),
                st.text(alphabet="abc男女", min_size=1, max_size=3),
            ),
            max_size=30,
        ),
        st.randoms(use_true_random=False),
    )
    def test_index_invariant_under_triple_order(self, pairs, rnd):
        triples = [Triple(f"e{i}", p, v) for i, (p, v) in enumerate(pairs)]
        shuffled = list(triples)
        rnd.shuffle(shuffled)
        a = build_property_index(triples)
        b = build_property_index(shuffled)
        assert a.to_json_dict() == b.to_json_dict()


class TestAgainstCountingOracle:
    def test_large_generated_file_matches_oracle(self, tmp_path):
        # independent oracle: plain Counters over the raw rows we wrote
        import random

        rng = random.Random(42)
        props = [f"p{i}" for i in range(8)]
        values = [f"值{i}" for i in range(40)]
        oracle = {p: Counter() for p in props}
        path = tmp_path / "big.tsv"
        with open(path, "w", encoding="utf-8") as handle:
            for i in range(10_000):
                p = rng.choice(props)
                v = rng.choice(values)
                oracle[p][v] += 1
                handle.write(f"e{i}\t{p}\t{v}\n")
        stats = ParseStats()
        index = build_property_index(parse_triples_path(str(path), "tsv", stats))
        assert stats.parsed == 10_000 and stats.malformed == 0
        for p in props:
            assert index.properties[p].entries == dict(oracle[p])

    def test_mini_kg_counts(self, mini_kg_path):
        stats = ParseStats()
        index = build_property_index(parse_triples_path(mini_kg_path, "tsv", stats))
        assert stats.parsed == 207
        assert stats.malformed == 2
        assert index.properties["性别"].entries["男"] == 25
        assert index.properties["性别"].entries["♀女"] == 1
        assert index.properties["状态"].total() == 52

    def test_unreadable_path_raises_input_error(self):
        with pytest.raises(InputError):
            list(parse_triples_path("/nonexistent/nowhere.tsv", "tsv", ParseStats()))
