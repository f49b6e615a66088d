"""
Configuration management for pipeline runs.

This module provides the RunConfig class that aggregates the settings of every
pipeline stage, with validation, environment variable support and JSON/YAML
file loading.
"""

# Python imports
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal

import msgspec
from msgspec import Struct, field
from yaml import SafeLoader, YAMLError, load

# Local imports
from .datamodel import DEFAULT_RATIOS, SyntheticConfig
from .exceptions import ConfigurationError
from .fusion import FusionConfig, RegressorTrainingConfig
from .fvtc import FVTCConfig
from .vqvae import VQVAEConfig, VQVAETrainingConfig

CONFIG_VERSION = 1
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
SEEDED_SECTIONS = ("synth", "splits", "vqvae_training", "regressor")

ENV_DATA_ROOT = "SPEECH_SEVERITY_DATA_ROOT"
ENV_LOG_LEVEL = "SPEECH_SEVERITY_LOG_LEVEL"
ENV_SEED = "SPEECH_SEVERITY_SEED"


class SplitConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Subject-independent split settings.

    Attributes:
        ratios: (train, val, test) ratios, positive and summing to 1
        seed: Subject shuffle seed
    """

    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the ratios."""
        if any(r <= 0 for r in self.ratios):
            raise ValueError(f"Split ratios must be positive, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"Split ratios must sum to 1, got {sum(self.ratios)}")


class RunConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Settings of every pipeline stage.

    Attributes:
        version: Schema version (must be 1)
        log_level: Console log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        seed: Run seed; when set it replaces the seed of every seeded section
        data_root: Default parent directory of run directories
        synth: Synthetic corpus settings
        fvtc: FVTC extraction settings
        splits: Fold assignment settings
        vqvae: VQ-VAE architecture
        vqvae_training: VQ-VAE optimization settings
        fusion: Regressor architecture (both branches and the head)
        regressor: Regressor optimization settings

    Raises:
        ValueError: If validation fails

    Example:
        >>> config = RunConfig.load("run.yaml", overrides={"fvtc": {"D": 20}})
        >>> config.fvtc.D
        20
    """

    version: int = CONFIG_VERSION
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    seed: int | None = None
    data_root: str = "runs"
    synth: SyntheticConfig = field(default_factory=SyntheticConfig)
    fvtc: FVTCConfig = field(default_factory=FVTCConfig)
    splits: SplitConfig = field(default_factory=SplitConfig)
    vqvae: VQVAEConfig = field(default_factory=VQVAEConfig)
    vqvae_training: VQVAETrainingConfig = field(default_factory=VQVAETrainingConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    regressor: RegressorTrainingConfig = field(default_factory=RegressorTrainingConfig)

    def __post_init__(self) -> None:
        """
        Validate cross-section consistency.

        Raises:
            ValueError: If any validation fails
        """
        if self.version != CONFIG_VERSION:
            raise ValueError(f"Unsupported config version {self.version}, expected {CONFIG_VERSION}")
        if self.log_level not in LOG_LEVELS:
            raise ValueError(f"Invalid log level: {self.log_level}. Must be one of: {', '.join(LOG_LEVELS)}")
        if self.vqvae.D != self.fvtc.D:
            raise ValueError(f"vqvae.D ({self.vqvae.D}) must equal fvtc.D ({self.fvtc.D})")
        if self.fusion.artic.input_dim != 1024:
            raise ValueError(f"fusion.artic.input_dim must be 1024, got {self.fusion.artic.input_dim}")

    @classmethod
    def from_dict(cls, data: dict[str, Any], source: str = "<dict>") -> RunConfig:
        """
        Build a config from plain data; a top-level seed is copied into every seeded section.

        Raises:
            ConfigurationError: On unknown keys, wrong types or failed validation
        """
        if not isinstance(data, dict):
            raise ConfigurationError("Configuration must be a mapping", f"{source}: got {type(data).__name__}")
        data = _deep_merge({}, data)
        if data.get("seed") is not None:
            for section in SEEDED_SECTIONS:
                section_data = data.setdefault(section, {})
                if isinstance(section_data, dict):
                    section_data["seed"] = data["seed"]
        try:
            return msgspec.convert(data, cls)
        except msgspec.ValidationError as e:
            raise ConfigurationError("Invalid configuration", f"{source}: {e}") from e

    @classmethod
    def from_json(cls, file_path: str | Path) -> RunConfig:
        """
        Create RunConfig from a JSON file.

        Raises:
            ConfigurationError: If the file is missing, malformed or invalid
        """
        path = _existing(file_path)
        try:
            data = msgspec.json.decode(path.read_bytes())
        except msgspec.DecodeError as e:
            raise ConfigurationError("Failed to parse configuration", f"{path}: {e}") from e
        return cls.from_dict(data, str(path))

    @classmethod
    def from_yaml(cls, file_path: str | Path) -> RunConfig:
        """
        Create RunConfig from a YAML file.

        Raises:
            ConfigurationError: If the file is missing, malformed or invalid
        """
        return cls.from_dict(_read_yaml(_existing(file_path)), str(file_path))

    @classmethod
    def from_file(cls, file_path: str | Path) -> RunConfig:
        """Create RunConfig from a .json, .yaml or .yml file."""
        return cls.from_dict(read_config_data(file_path), str(file_path))

    @classmethod
    def from_env(cls) -> RunConfig:
        """
        Create RunConfig from defaults and environment variables.

        Reads:
        - SPEECH_SEVERITY_DATA_ROOT: Parent directory of run directories
        - SPEECH_SEVERITY_LOG_LEVEL: Console log level
        - SPEECH_SEVERITY_SEED: Run seed

        Raises:
            ConfigurationError: If a variable is invalid
        """
        return cls.from_dict(env_overrides(), "environment")

    @classmethod
    def load(cls, file_path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
        """
        Resolve a config with precedence overrides > file > environment > defaults.

        Raises:
            ConfigurationError: If any layer is invalid
        """
        data = env_overrides()
        source = "environment"
        if file_path is not None:
            data = _deep_merge(data, read_config_data(file_path))
            source = str(file_path)
        if overrides:
            data = _deep_merge(data, overrides)
        return cls.from_dict(data, source)

    def to_json(self) -> bytes:
        """Pretty-printed JSON snapshot."""
        return msgspec.json.format(msgspec.json.encode(self), indent=2)


def _existing(file_path: str | Path) -> Path:
    path = Path(file_path)
    if not path.is_file():
        raise ConfigurationError("Configuration file not found", str(file_path))
    return path


def _read_yaml(path: Path) -> Any:
    try:
        with path.open(encoding="utf-8") as f:
            return load(f, Loader=SafeLoader)
    except YAMLError as e:
        raise ConfigurationError("Failed to parse configuration", f"{path}: {e}") from e


def read_config_data(file_path: str | Path) -> dict[str, Any]:
    """
    Raw mapping of a JSON or YAML config file.

    Raises:
        ConfigurationError: If the file is missing, malformed, not a mapping or has an unknown suffix
    """
    path = _existing(file_path)
    suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            data = msgspec.json.decode(path.read_bytes())
        except msgspec.DecodeError as e:
            raise ConfigurationError("Failed to parse configuration", f"{path}: {e}") from e
    elif suffix in (".yaml", ".yml"):
        data = _read_yaml(path)
    else:
        raise ConfigurationError("Unsupported configuration format", f"{path}: expected .json, .yaml or .yml")
    if not isinstance(data, dict):
        raise ConfigurationError("Configuration must be a mapping", f"{path}: got {type(data).__name__}")
    return data


def env_overrides() -> dict[str, Any]:
    """
    Config keys taken from SPEECH_SEVERITY_* environment variables.

    Raises:
        ConfigurationError: If a variable is invalid
    """
    env = os.environ
    data: dict[str, Any] = {}
    if env.get(ENV_DATA_ROOT):
        data["data_root"] = env[ENV_DATA_ROOT]
    if env.get(ENV_LOG_LEVEL):
        level = env[ENV_LOG_LEVEL].upper()
        if level not in LOG_LEVELS:
            raise ConfigurationError(
                f"Invalid log level in {ENV_LOG_LEVEL}", f"{level}. Must be one of: {', '.join(LOG_LEVELS)}"
            )
        data["log_level"] = level
    if env.get(ENV_SEED):
        try:
            data["seed"] = int(env[ENV_SEED])
        except ValueError as e:
            raise ConfigurationError(f"{ENV_SEED} must be a valid integer", str(e)) from e
    return data


def _deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        elif isinstance(value, dict):
            merged[key] = _deep_merge({}, value)
        else:
            merged[key] = value
    return merged
