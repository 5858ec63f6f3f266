"""Toy trainable representations: private rows per expression, a shared char encoder.

Token-level boosting pulls on one embedding row per expression, so each
expression's representation is its own parameter and nothing else.  The
sentence side is a small character encoder: every sentence is padded with
a boundary sentinel, adjacent character pairs pass through two linear
layers, and the window outputs are mean-pooled.  Both start from seeded
random weights; no pretrained checkpoint is involved.
"""

from __future__ import annotations

from typing import Sequence

import torch
from torch import nn

from synboost.errors import DomainError

BOUNDARY = "⟂"


class ExpressionSpace(nn.Module):
    """One private embedding row per expression."""

    def __init__(self, expressions: Sequence[str], dim: int, seed: int = 0):
        super().__init__()
        if not expressions:
            raise DomainError("expression space needs at least one expression")
        self.vocabulary = {text: i for i, text in enumerate(expressions)}
        if len(self.vocabulary) != len(expressions):
            raise DomainError("expression list contains duplicates")
        self.rows = nn.Embedding(len(expressions), dim)
        generator = torch.Generator().manual_seed(seed)
        # Rows start near unit norm so cosine pulling moves at a pace set by
        # the learning rate, not by the embedding width.
        with torch.no_grad():
            self.rows.weight.normal_(0.0, dim ** -0.5, generator=generator)

    def index_of(self, text: str) -> int:
        try:
            return self.vocabulary[text]
        except KeyError:
            raise DomainError(f"expression {text!r} is not in the model's vocabulary") from None

    def representation(self, indices: Sequence[int]) -> torch.Tensor:
        """Rows for the given expression indices, shape (n, dim)."""
        index = torch.as_tensor(list(indices), dtype=torch.long)
        return self.rows(index)


class CharSentenceEncoder(nn.Module):
    """Sentence representation from boundary-padded character bigram windows."""

    def __init__(self, alphabet: Sequence[str], char_dim: int, hidden_dim: int, seed: int = 0):
        super().__init__()
        chars = [BOUNDARY] + [c for c in sorted(set(alphabet)) if c != BOUNDARY]
        self.alphabet = {c: i for i, c in enumerate(chars)}
        self.chars = nn.Embedding(len(chars), char_dim)
        self.mix = nn.Linear(2 * char_dim, hidden_dim)
        self.out = nn.Linear(hidden_dim, hidden_dim)
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            self.chars.weight.normal_(0.0, 1.0, generator=generator)
            for layer in (self.mix, self.out):
                bound = 1.0 / (layer.in_features ** 0.5)
                layer.weight.uniform_(-bound, bound, generator=generator)
                layer.bias.zero_()

    def _indices(self, sentence: str) -> torch.Tensor:
        padded = BOUNDARY + sentence + BOUNDARY
        try:
            return torch.tensor([self.alphabet[c] for c in padded], dtype=torch.long)
        except KeyError:
            missing = next(c for c in padded if c not in self.alphabet)
            raise DomainError(f"character {missing!r} is not in the encoder's alphabet") from None

    def encode_one(self, sentence: str) -> torch.Tensor:
        """Mean of the two-layer outputs over all adjacent character windows."""
        embedded = self.chars(self._indices(sentence))
        windows = torch.cat([embedded[:-1], embedded[1:]], dim=1)
        hidden = torch.tanh(self.mix(windows))
        return self.out(hidden).mean(dim=0)

    def encode(self, sentences: Sequence[str]) -> torch.Tensor:
        if not sentences:
            raise DomainError("nothing to encode")
        return torch.stack([self.encode_one(s) for s in sentences])


class BoostModel(nn.Module):
    """The two trainable parts under one state dict."""

    def __init__(self, expressions: ExpressionSpace, encoder: CharSentenceEncoder):
        super().__init__()
        self.expressions = expressions
        self.encoder = encoder
