import os
import sys

import pytest

from synboost.config import BoostConfig
from synboost.data import load_corpus, load_synsets
from synboost.train import build_model

sys.path.insert(0, os.path.dirname(__file__))

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def synsets_path():
    return os.path.join(DATA_DIR, "synsets.jsonl")


@pytest.fixture(scope="session")
def corpus_path():
    return os.path.join(DATA_DIR, "corpus.txt")


@pytest.fixture(scope="session")
def fixture_synsets(synsets_path):
    return load_synsets(synsets_path)


@pytest.fixture(scope="session")
def fixture_corpus(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture()
def fixture_model(fixture_synsets, fixture_corpus):
    return build_model(fixture_synsets, fixture_corpus, BoostConfig())
