"""Training loop: plain SGD over the two gated objectives, metrics per epoch.

Training ends early once every participating pair has latched, because
the loss is identically zero from then on and no parameter can move.
A non-finite loss aborts the run instead of silently training on garbage.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import torch

from synboost.config import BoostConfig
from synboost.data import (
    SentencePair,
    Synset,
    TokenPair,
    load_corpus,
    load_synsets,
    make_sentence_pairs,
    make_token_pairs,
)
from synboost.errors import DivergenceError
from synboost.losses import measure_final_distances, sentence_boost_loss, token_boost_loss
from synboost.model import BoostModel, CharSentenceEncoder, ExpressionSpace


@dataclass
class TrainResult:
    """What a run did, pair states included."""

    epochs_run: int
    all_closed: bool
    metrics: list[dict] = field(default_factory=list)


def build_model(synsets: list[Synset], corpus: list[str], config: BoostConfig) -> BoostModel:
    """Seeded random weights sized to the loaded data.

    The expression vocabulary covers every mined member; the character
    alphabet covers the corpus plus all synset texts, so substituted
    sentences always encode.
    """
    expressions = sorted({m.value for s in synsets for m in s.members})
    texts = [m.value for s in synsets for m in s.members]
    texts += [t for s in synsets for t in s.expansion_texts]
    alphabet = sorted(set("".join(corpus) + "".join(texts)))
    space = ExpressionSpace(expressions, config.expression_dim, seed=config.seed)
    encoder = CharSentenceEncoder(alphabet, config.char_dim, config.hidden_dim, seed=config.seed + 1)
    return BoostModel(space, encoder)


def train(
    model: BoostModel,
    token_pairs: list[TokenPair],
    sentence_pairs: list[SentencePair],
    config: BoostConfig,
    metrics_path: str | None = None,
) -> TrainResult:
    """Optimize token loss + weight * sentence loss until done or out of epochs.

    With sentence_loss_weight 0 the sentence pairs sit the run out
    entirely: no gradients, no gate updates, no say in the early stop.
    After the loop every pair's final_distance is measured once under the
    finished weights.
    """
    config.validate()
    optimizer = torch.optim.SGD(model.parameters(), lr=config.learning_rate, momentum=0.0)
    sentence_active = sentence_pairs if config.sentence_loss_weight > 0.0 else []
    result = TrainResult(epochs_run=0, all_closed=False)

    for epoch in range(config.epochs):
        optimizer.zero_grad()
        token_loss, token_stats = token_boost_loss(token_pairs, model.expressions, config, epoch=epoch)
        sentence_loss, sentence_stats = sentence_boost_loss(
            sentence_active, model.encoder, config, epoch=epoch
        )
        total = token_loss + config.sentence_loss_weight * sentence_loss
        token_value = float(token_loss.detach())
        sentence_value = float(sentence_loss.detach())
        total_value = token_value + config.sentence_loss_weight * sentence_value
        if not math.isfinite(total_value):
            raise DivergenceError(
                f"non-finite loss at epoch {epoch}: token={token_value} sentence={sentence_value}"
            )
        if total.requires_grad:
            total.backward()
            optimizer.step()
        result.epochs_run = epoch + 1

        participating = token_stats.total_pairs + sentence_stats.total_pairs
        closed = participating - token_stats.active_pairs - sentence_stats.active_pairs
        distance_mass = (
            token_stats.mean_distance * token_stats.total_pairs
            + sentence_stats.mean_distance * sentence_stats.total_pairs
        )
        record = {
            "epoch": epoch,
            "loss": total_value,
            "token_loss": token_value,
            "sentence_loss": sentence_value,
            "mean_distance": distance_mass / participating if participating else 0.0,
            "gate_closed_fraction": closed / participating if participating else 1.0,
            "active_pairs": token_stats.active_pairs + sentence_stats.active_pairs,
        }
        result.metrics.append(record)
        if record["active_pairs"] == 0:
            result.all_closed = True
            break

    measure_final_distances(token_pairs, sentence_pairs, model.expressions, model.encoder)
    if metrics_path is not None:
        with open(metrics_path, "w", encoding="utf-8") as handle:
            for record in result.metrics:
                handle.write(json.dumps(record) + "\n")
    return result


def save_weights(model: BoostModel, path: str) -> None:
    torch.save(model.state_dict(), path)


def run_training(
    synsets_path: str,
    corpus_path: str,
    config: BoostConfig,
    metrics_path: str | None = None,
    weights_path: str | None = None,
) -> tuple[BoostModel, list[TokenPair], list[SentencePair], TrainResult]:
    """Load, mine pairs, train, save: the whole job behind the CLI."""
    config.validate()
    synsets = load_synsets(synsets_path, include_expanded=config.include_expanded)
    corpus = load_corpus(corpus_path)
    model = build_model(synsets, corpus, config)
    token_pairs = make_token_pairs(synsets, model.expressions)
    sentence_pairs = make_sentence_pairs(corpus, synsets, model.encoder, seed=config.seed)
    result = train(model, token_pairs, sentence_pairs, config, metrics_path=metrics_path)
    if weights_path is not None:
        save_weights(model, weights_path)
    return model, token_pairs, sentence_pairs, result
