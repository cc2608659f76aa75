"""Configuration loading functionality for senet-desk."""

from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from src import cli_logging
from src.config.config_models import RunConfig
from src.errors import ContractError


class ConfigLoader:
    """Handles loading and caching of a flat YAML run configuration."""

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize with optional config path; no path means all defaults."""
        self.config_path = Path(config_path) if config_path else None
        self._cached_config: Optional[RunConfig] = None

    def read_raw(self) -> Dict[str, Any]:
        """Read the file as a flat mapping.

        Raises:
            ContractError: if the file parses but is not a flat mapping.
            OSError, yaml.YAMLError: if the file cannot be read or parsed.
        """
        if self.config_path is None:
            return {}
        if not self.config_path.exists():
            cli_logging.warning(f"Config file {self.config_path} not found; using defaults")
            return {}
        with open(self.config_path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ContractError(f"{self.config_path}: expected a key: value mapping")
        nested = [k for k, v in data.items() if isinstance(v, dict)]
        if nested:
            raise ContractError(f"{self.config_path}: nested sections are not supported: {nested}")
        return data

    def load_config(self, force_reload: bool = False) -> RunConfig:
        """Load configuration from file, with caching."""
        if self._cached_config is not None and not force_reload:
            return self._cached_config
        self._cached_config = RunConfig.from_dict(self.read_raw())
        cli_logging.debug(f"Loaded config from {self.config_path or '<defaults>'}")
        return self._cached_config

    def clear_cache(self):
        """Clear the cached configuration."""
        self._cached_config = None


def load_config(config_path: Optional[Path] = None) -> RunConfig:
    """Load a run configuration, falling back to defaults without a file."""
    return ConfigLoader(config_path).load_config()


def merge_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """Apply command-line values on top of ``config``; ``None`` means unset."""
    given = {k: v for k, v in overrides.items() if v is not None}
    if "seed" in given and "synth_seed" not in given:
        given["synth_seed"] = given["seed"]
    merged = config.to_flat_dict()
    merged.update(given)
    return RunConfig.from_dict(merged)


def save_config(config: RunConfig, path: Path) -> Path:
    """Write the resolved configuration snapshot next to run outputs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "# Resolved senet-desk configuration\n" + yaml.safe_dump(
        config.to_flat_dict(), sort_keys=True, default_flow_style=False
    )
    path.write_text(text, encoding="utf-8")
    return path
