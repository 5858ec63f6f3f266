"""Synonym-boosting trainer: pull mined synonyms together in a toy encoder."""

from synboost.config import BoostConfig
from synboost.data import (
    SentencePair,
    Synset,
    SynsetMember,
    TokenPair,
    load_corpus,
    load_synsets,
    make_sentence_pairs,
    make_token_pairs,
)
from synboost.errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    InputError,
    SynboostError,
)
from synboost.losses import (
    GateStats,
    cosine_distance,
    measure_final_distances,
    refresh_gates,
    sentence_boost_loss,
    token_boost_loss,
)
from synboost.model import BoostModel, CharSentenceEncoder, ExpressionSpace
from synboost.train import TrainResult, build_model, run_training, save_weights, train

__all__ = [
    "BoostConfig",
    "BoostModel",
    "CharSentenceEncoder",
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "ExpressionSpace",
    "GateStats",
    "InputError",
    "SentencePair",
    "SynboostError",
    "Synset",
    "SynsetMember",
    "TokenPair",
    "TrainResult",
    "build_model",
    "cosine_distance",
    "load_corpus",
    "load_synsets",
    "make_sentence_pairs",
    "make_token_pairs",
    "measure_final_distances",
    "refresh_gates",
    "run_training",
    "save_weights",
    "sentence_boost_loss",
    "token_boost_loss",
    "train",
]
