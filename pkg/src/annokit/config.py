"""Toolkit configuration: categories, priority order, training and
adjustment settings, loadable from a JSON file (path given explicitly or
through the ANNOKIT_CONFIG environment variable)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .corpus import DEFAULT_CATEGORIES
from .errors import ConfigError, FormatError
from .service import AdjustmentSettings
from .tagger import TrainConfig

ENV_VAR = "ANNOKIT_CONFIG"


@dataclass(frozen=True)
class ToolkitConfig:
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    priority: tuple[str, ...] = DEFAULT_CATEGORIES
    train: TrainConfig = TrainConfig()
    adjustment: AdjustmentSettings = AdjustmentSettings()

    def __post_init__(self) -> None:
        if sorted(self.priority) != sorted(self.categories):
            raise ConfigError("priority order must list every category exactly once")


def load_config(path: str | Path | None = None) -> ToolkitConfig:
    """Load a config file; defaults apply for every missing field."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return ToolkitConfig()
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    categories = tuple(payload.get("categories", DEFAULT_CATEGORIES))
    priority = tuple(payload.get("priority", categories))
    try:
        train = TrainConfig(**payload.get("train", {}))
        adjustment = AdjustmentSettings(**payload.get("adjustment", {}))
    except TypeError as exc:
        raise ConfigError(f"{path}: unknown config field: {exc}") from None
    return ToolkitConfig(categories, priority, train, adjustment)
