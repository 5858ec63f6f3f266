"""Training configuration: one knob per trick, JSON-loadable, CLI-overridable."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from synboost.errors import ConfigError, InputError

DISTANCES = ("cosine_distance",)
DEFAULT_STOP_RATIO = 0.60
DEFAULT_SENTENCE_LOSS_WEIGHT = 1.0
DEFAULT_LEARNING_RATE = 0.02
DEFAULT_EPOCHS = 300
DEFAULT_EXPRESSION_DIM = 32
DEFAULT_CHAR_DIM = 24
DEFAULT_HIDDEN_DIM = 64
MAX_HIDDEN_DIM = 128


@dataclass(frozen=True)
class BoostConfig:
    """Knobs for the two boosting objectives and the toy encoder sizes."""

    stop_ratio: float = DEFAULT_STOP_RATIO
    sentence_loss_weight: float = DEFAULT_SENTENCE_LOSS_WEIGHT
    distance: str = "cosine_distance"
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0

    expression_dim: int = DEFAULT_EXPRESSION_DIM
    char_dim: int = DEFAULT_CHAR_DIM
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    include_expanded: bool = False

    def validate(self) -> None:
        if not 0.0 < self.stop_ratio <= 1.0:
            raise ConfigError(f"stop_ratio must be in (0, 1], got {self.stop_ratio}")
        if self.sentence_loss_weight < 0.0:
            raise ConfigError(f"sentence_loss_weight must be >= 0, got {self.sentence_loss_weight}")
        if self.distance not in DISTANCES:
            raise ConfigError(f"unknown distance: {self.distance!r}")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        for name in ("expression_dim", "char_dim", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.hidden_dim > MAX_HIDDEN_DIM:
            raise ConfigError(f"hidden_dim must be <= {MAX_HIDDEN_DIM}, got {self.hidden_dim}")

    @property
    def stop_threshold_factor(self) -> float:
        """A pair's gate closes once its distance falls to this fraction of d0."""
        return 1.0 - self.stop_ratio

    @classmethod
    def from_dict(cls, raw: dict) -> "BoostConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**raw)

    @classmethod
    def load(cls, path: str, overrides: dict | None = None) -> "BoostConfig":
        """Read a JSON config, keeping only the keys this trainer knows.

        The miner's config file carries stop_ratio alongside its own knobs,
        so one file can drive both tools; foreign keys are ignored here
        rather than rejected.
        """
        try:
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        kept = {key: value for key, value in raw.items() if key in known}
        kept.update(overrides or {})
        return cls.from_dict(kept)
