import os

import pytest

from synmine.ingest import ParseStats, build_property_index, parse_triples_path
from synmine.similarity import HashingEmbeddingProvider, SimilarityConfig
from synmine.wordpieces import build_table

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def mini_kg_path():
    return os.path.join(DATA_DIR, "mini_kg.tsv")


@pytest.fixture(scope="session")
def gold_path():
    return os.path.join(DATA_DIR, "mini_kg_gold.json")


@pytest.fixture(scope="session")
def lexicon_path():
    return os.path.join(DATA_DIR, "lexicon.jsonl")


@pytest.fixture(scope="session")
def mini_index(mini_kg_path):
    return build_property_index(parse_triples_path(mini_kg_path, "tsv", ParseStats()))


@pytest.fixture(scope="session")
def gender_table(mini_index):
    return build_table(mini_index.properties["性别"], 6, property="性别")


@pytest.fixture(scope="session")
def status_table(mini_index):
    return build_table(mini_index.properties["状态"], 6, property="状态")


@pytest.fixture(scope="session")
def hash_provider():
    return HashingEmbeddingProvider()


@pytest.fixture(scope="session")
def default_sim_config(hash_provider):
    return SimilarityConfig(embedding_methods=(hash_provider.tag,))
