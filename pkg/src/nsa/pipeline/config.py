"""Hyperparameter configuration with defaults, JSON overrides and strict key checking."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 50
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_lr: float = 0.0001
    vocab_size: int = 10000
    subwords: bool = False


@dataclass(frozen=True)
class DeepBugsConfig:
    hidden: int = 200
    epochs: int = 10
    lr: float = 0.05
    batch: int = 32
    clip: float = 5.0
    threshold: float = 0.8


@dataclass(frozen=True)
class TypeWriterConfig:
    n_types: int = 16
    hidden: int = 32
    epochs: int = 15
    lr: float = 0.1
    batch: int = 32
    clip: float = 5.0
    max_id_words: int = 8
    max_code_tokens: int = 40
    max_comment_words: int = 30
    comment_dim: int = 32
    top_k: int = 3


@dataclass(frozen=True)
class CompletionConfig:
    window: int = 20
    embedding: int = 64
    hidden: int = 128
    vocab_size: int = 10000
    epochs: int = 5
    lr: float = 1.0
    batch: int = 32
    clip: float = 5.0


@dataclass(frozen=True)
class SplitConfig:
    train: float = 0.8
    valid: float = 0.1
    test: float = 0.1


@dataclass(frozen=True)
class Config:
    seed: int = 0
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    deepbugs: DeepBugsConfig = field(default_factory=DeepBugsConfig)
    typewriter: TypeWriterConfig = field(default_factory=TypeWriterConfig)
    completion: CompletionConfig = field(default_factory=CompletionConfig)
    split: SplitConfig = field(default_factory=SplitConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _merge_section(section, overrides: dict, where: str):
    if not isinstance(overrides, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name: f for f in fields(section)}
    changes = {}
    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown config key {where}.{key}")
        current = getattr(section, key)
        if hasattr(current, "__dataclass_fields__"):
            changes[key] = _merge_section(current, value, f"{where}.{key}")
            continue
        expected = type(current)
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if type(value) is not expected:
            raise ConfigError(f"{where}.{key} must be {expected.__name__}, got {value!r}")
        changes[key] = value
    return replace(section, **changes)


def merge(config: Config, overrides: dict) -> Config:
    """Return ``config`` with ``overrides`` applied; unknown keys raise ConfigError."""
    return _merge_section(config, overrides, "config")


def load_config(path: str | Path | None = None, **overrides) -> Config:
    config = Config()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        config = merge(config, data)
    if overrides:
        config = merge(config, overrides)
    return config
