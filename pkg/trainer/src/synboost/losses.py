"""The two boosting objectives and their shared stop-gate bookkeeping.

Each pair records its distance at mining time (d0) and is pulled until
the distance falls to (1 - stop_ratio) * d0.  Crossing that line closes
the pair's gate for the rest of training: the latch never reopens, and a
latched pair contributes nothing.  Token-level pulling is one-sided (the
anchor's row is excluded from gradient flow); sentence-level pulling is
symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn.functional as F

from synboost.config import BoostConfig
from synboost.model import CharSentenceEncoder, ExpressionSpace


def cosine_distance(u: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """1 - cosine similarity along the last dimension."""
    return 1.0 - F.cosine_similarity(u, v, dim=-1)


@dataclass(frozen=True)
class GateStats:
    """What the gates looked like when a loss was evaluated."""

    total_pairs: int
    active_pairs: int
    mean_distance: float
    closed_fraction: float


def refresh_gates(pairs: Sequence, distances: Sequence[float], config: BoostConfig, epoch: int) -> None:
    """Latch every open pair whose current distance crossed its stop line."""
    threshold_factor = config.stop_threshold_factor
    for pair, distance in zip(pairs, distances):
        if pair.latched:
            continue
        if distance <= threshold_factor * pair.d0:
            pair.latched = True
            pair.latch_distance = distance
            pair.latch_epoch = epoch


def _stats(pairs: Sequence, distances: Sequence[float]) -> GateStats:
    total = len(pairs)
    active = sum(1 for p in pairs if not p.latched)
    mean = sum(distances) / total if total else 0.0
    return GateStats(
        total_pairs=total,
        active_pairs=active,
        mean_distance=mean,
        closed_fraction=(total - active) / total if total else 0.0,
    )


def token_boost_loss(
    pairs: Sequence,
    space: ExpressionSpace,
    config: BoostConfig,
    refresh: bool = True,
    epoch: int = 0,
) -> tuple[torch.Tensor, GateStats]:
    """Sum of gated distances from each member row to its anchor row.

    The anchor side is detached, so anchor rows receive no gradient from
    this loss.  With refresh off, the latch state is read but not written:
    the loss is then a plain differentiable function of the open pairs,
    which is what a finite-difference probe needs.
    """
    if not pairs:
        return torch.zeros(()), _stats(pairs, [])
    with torch.no_grad():
        anchors = space.representation([p.anchor_index for p in pairs])
        others = space.representation([p.other_index for p in pairs])
        measured = cosine_distance(others, anchors).tolist()
    if refresh:
        refresh_gates(pairs, measured, config, epoch)
    stats = _stats(pairs, measured)
    open_pairs = [p for p in pairs if not p.latched]
    if not open_pairs:
        return torch.zeros(()), stats
    anchors = space.representation([p.anchor_index for p in open_pairs]).detach()
    others = space.representation([p.other_index for p in open_pairs])
    return cosine_distance(others, anchors).sum(), stats


def sentence_boost_loss(
    pairs: Sequence,
    encoder: CharSentenceEncoder,
    config: BoostConfig,
    refresh: bool = True,
    epoch: int = 0,
) -> tuple[torch.Tensor, GateStats]:
    """Sum of gated distances between each sentence and its substituted copy.

    Both sides stay in the graph: there is no anchor at the sentence level,
    the two representations are pulled toward each other.
    """
    if not pairs:
        return torch.zeros(()), _stats(pairs, [])
    with torch.no_grad():
        sources = encoder.encode([p.source for p in pairs])
        variants = encoder.encode([p.variant for p in pairs])
        measured = cosine_distance(sources, variants).tolist()
    if refresh:
        refresh_gates(pairs, measured, config, epoch)
    stats = _stats(pairs, measured)
    open_pairs = [p for p in pairs if not p.latched]
    if not open_pairs:
        return torch.zeros(()), stats
    sources = encoder.encode([p.source for p in open_pairs])
    variants = encoder.encode([p.variant for p in open_pairs])
    return cosine_distance(sources, variants).sum(), stats


def measure_final_distances(
    token_pairs: Sequence,
    sentence_pairs: Sequence,
    space: ExpressionSpace,
    encoder: CharSentenceEncoder,
) -> None:
    """Record each pair's distance under the current weights, touching no gate."""
    with torch.no_grad():
        if token_pairs:
            anchors = space.representation([p.anchor_index for p in token_pairs])
            others = space.representation([p.other_index for p in token_pairs])
            for pair, d in zip(token_pairs, cosine_distance(others, anchors).tolist()):
                pair.final_distance = d
        if sentence_pairs:
            sources = encoder.encode([p.source for p in sentence_pairs])
            variants = encoder.encode([p.variant for p in sentence_pairs])
            for pair, d in zip(sentence_pairs, cosine_distance(sources, variants).tolist()):
                pair.final_distance = d
