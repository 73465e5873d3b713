"""Model and training configuration.

Both dataclasses are filled from the Flask config object: every ``MODEL_*``
key feeds :class:`ModelConfig` and every ``TRAIN_*`` key feeds
:class:`TrainConfig`. Defaults are the published hyper-parameter table.
"""

import dataclasses
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from typing import Any, Mapping

from flask import Config

from app.errors import ConfigError
from app.utils import validate_config_body

ENV_PREFIX = "SEMICRF"
TASKS = ("span", "wordseg")
COMPOSITIONS = ("srnn", "scnn", "sconcate")

_DIM_FIELDS = (
    "unit_pretrained_dim",
    "unit_tuned_dim",
    "input_dim",
    "hidden_dim",
    "segment_hidden_dim",
    "scomp_dim",
    "semb_dim",
    "label_dim",
    "segment_dim",
)


@dataclass(frozen=True)
class TrainConfig:
    eta0: float = 0.1
    max_epochs: int = 30
    patience: int = 10
    seed: int = 1
    clip_norm: float = 5.0

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ConfigError(f"TRAIN_ETA0 must be positive, got {self.eta0}")
        if self.patience < 1:
            raise ConfigError(f"TRAIN_PATIENCE must be >= 1, got {self.patience}")
        if self.max_epochs < 1:
            raise ConfigError(f"TRAIN_MAX_EPOCHS must be >= 1, got {self.max_epochs}")
        if not self.clip_norm > 0:
            raise ConfigError(f"TRAIN_CLIP_NORM must be positive, got {self.clip_norm}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "TrainConfig":
        return _build(cls, values, "TRAIN_")


@dataclass(frozen=True)
class ModelConfig:
    task: str = "span"
    composition: str = "srnn"
    max_segment_length: int | None = None

    unit_pretrained_dim: int = 100
    unit_tuned_dim: int = 32
    input_dim: int = 100
    hidden_dim: int = 100
    segment_hidden_dim: int = 64
    scomp_dim: int = 64
    semb_dim: int = 50
    label_dim: int = 20
    segment_dim: int = 100

    unit_embeddings: str | None = None
    segment_embeddings: str | None = None
    use_segment_embeddings: bool = True
    finetune_unit_pretrained: bool = False
    finetune_segment: bool = True

    separator: str | None = None
    normalize_width: bool = False
    seed: int = 1

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"MODEL_TASK must be one of {TASKS}, got {self.task!r}")
        if self.composition not in COMPOSITIONS:
            raise ConfigError(
                f"MODEL_COMPOSITION must be one of {COMPOSITIONS}, got {self.composition!r}"
            )
        for name in _DIM_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"MODEL_{name.upper()} must be a positive integer, got {value!r}")
        if self.max_segment_length is not None and self.max_segment_length < 1:
            raise ConfigError(f"MODEL_MAX_SEGMENT_LENGTH must be >= 1, got {self.max_segment_length}")
        if not self.use_segment_embeddings and self.segment_embeddings is not None:
            raise ConfigError("MODEL_SEGMENT_EMBEDDINGS given while MODEL_USE_SEGMENT_EMBEDDINGS is off")

    def check_files(self) -> None:
        for name in ("unit_embeddings", "segment_embeddings"):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"MODEL_{name.upper()}: no such file {path!r}")

    @property
    def key_separator(self) -> str:
        if self.separator is not None:
            return self.separator
        return "_" if self.task == "span" else ""

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ModelConfig":
        return _build(cls, values, "MODEL_")


def _build(cls, values: Mapping[str, Any], prefix: str):
    values = dict(values)
    unknown = validate_config_body(values, (f.name for f in dataclasses.fields(cls)))
    if unknown:
        names = ", ".join(prefix + str(k).upper() for k in unknown)
        raise ConfigError(f"unknown configuration keys: {names}")
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def default_settings() -> dict[str, Any]:
    """Flat upper-case defaults, in the shape Flask's config expects."""
    settings: dict[str, Any] = {"LOG_LEVEL": "INFO"}
    for f in dataclasses.fields(ModelConfig):
        settings[f"MODEL_{f.name.upper()}"] = f.default
    for f in dataclasses.fields(TrainConfig):
        settings[f"TRAIN_{f.name.upper()}"] = f.default
    return settings


def load_config_file(config: Config, path: str) -> None:
    """Merge a TOML file into ``config``; relative embedding paths follow the file."""
    try:
        config.from_file(os.path.abspath(path), load=tomllib.load, text=False)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except (tomllib.TOMLDecodeError, OSError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    base = os.path.dirname(os.path.abspath(path))
    for key in ("MODEL_UNIT_EMBEDDINGS", "MODEL_SEGMENT_EMBEDDINGS"):
        value = config.get(key)
        if value and not os.path.isabs(value):
            config[key] = os.path.join(base, value)


def resolve_settings(base: Mapping[str, Any], path: str | None = None) -> Config:
    """A private copy of ``base`` with the config file, then the environment, on top."""
    config = Config(os.getcwd(), base)
    if path:
        load_config_file(config, path)
    config.from_prefixed_env(ENV_PREFIX)
    return config


def model_config(config: Config) -> ModelConfig:
    return ModelConfig.from_mapping(config.get_namespace("MODEL_"))


def train_config(config: Config) -> TrainConfig:
    return TrainConfig.from_mapping(config.get_namespace("TRAIN_"))


__all__ = [
    "ModelConfig",
    "TrainConfig",
    "TASKS",
    "COMPOSITIONS",
    "default_settings",
    "load_config_file",
    "resolve_settings",
    "ENV_PREFIX",
    "model_config",
    "train_config",
]
