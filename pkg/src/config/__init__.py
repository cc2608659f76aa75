"""Configuration management module for senet-desk."""

from .config_loader import ConfigLoader, load_config, merge_overrides, save_config
from .config_models import (
    LossConfig,
    ModelConfig,
    PathsConfig,
    RunConfig,
    SynthConfig,
    TrainConfig,
)

__all__ = [
    "ConfigLoader",
    "LossConfig",
    "ModelConfig",
    "PathsConfig",
    "RunConfig",
    "SynthConfig",
    "TrainConfig",
    "load_config",
    "merge_overrides",
    "save_config",
]
