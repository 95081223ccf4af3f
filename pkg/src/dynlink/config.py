"""Run configuration: YAML files, environment overrides, CLI precedence.

Precedence (highest first): CLI flag > environment variable > config file >
built-in default. The config file is a flat key-value YAML mapping using
TrainConfig field names; unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import os
from pathlib import Path

import yaml

from .training import TrainConfig

SEED_ENV = "DYNLINK_SEED"

_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = yaml.safe_load(fh) or {}
    if not isinstance(payload, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    unknown = set(payload) - _FIELDS
    if unknown:
        raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
    return payload


def resolve_train_config(
    config_path: str | Path | None = None,
    overrides: dict | None = None,
    env: dict | None = None,
) -> TrainConfig:
    """Merge file, environment, and CLI override layers into a TrainConfig."""
    env = os.environ if env is None else env
    merged: dict = {}
    if config_path is not None:
        merged.update(load_config_file(config_path))
    if SEED_ENV in env:
        merged["seed"] = int(env[SEED_ENV])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ValueError(f"unknown config override {key!r}")
        merged[key] = value
    return TrainConfig(**merged)


def config_dict(config: TrainConfig) -> dict:
    return dataclasses.asdict(config)
