"""Run configuration files, presets and their JSON schema."""
from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

import jsonschema

from .filterfn import QuadratureConfig
from .harness import RunConfig
from .qnet import AgentHyperparams
from .sequences import Family

PRESETS = {
    "desk": {
        "n_pulses": 10, "total_time": 1.0, "n_lorentzians": 5, "norm_target": 10.0,
        "n_spectra": 10, "episodes": 1500, "steps_per_episode": 32, "families": ["cpmg"],
    },
    "paper": {
        "n_pulses": 10, "total_time": 1.0, "n_lorentzians": 5, "norm_target": 10.0,
        "n_spectra": 200, "episodes": 5000, "steps_per_episode": 32,
        "families": [f.value for f in Family],
    },
}

_AGENT_KEYS = [f.name for f in fields(AgentHyperparams) if f.name not in ("episodes", "steps_per_episode")]
_QUAD_KEYS = ["rel_tol", "abs_tol", "margin", "panels_per_2pi", "max_depth"]

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pulse-sequence learning run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_pulses": {"type": "integer", "minimum": 1},
        "total_time": {"type": "number", "exclusiveMinimum": 0},
        "n_lorentzians": {"type": "integer", "minimum": 1},
        "norm_target": {"type": "number", "minimum": 0},
        "n_spectra": {"type": "integer", "minimum": 1},
        "episodes": {"type": "integer", "minimum": 1},
        "steps_per_episode": {"type": "integer", "minimum": 1},
        "families": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"enum": [f.value for f in Family]},
        },
        "master_seed": {"type": "integer", "minimum": 0},
        "jobs": {"type": "integer", "minimum": 1},
        "agent": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "minimum": 0, "maximum": 1},
                "tau": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "buffer_capacity": {"type": "integer", "minimum": 1},
                "minibatch": {"type": "integer", "minimum": 1},
                "min_minibatch": {"type": "integer", "minimum": 1},
                "hidden": {"type": "integer", "minimum": 1},
                "adam_beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "adam_beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "adam_eps": {"type": "number", "exclusiveMinimum": 0},
                "initial_epsilon": {"type": "number", "minimum": 0, "maximum": 1},
                "review_period": {"type": "integer", "minimum": 1},
                "soft_update_convention": {"enum": ["printed", "polyak"]},
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "minimum": 0},
                "margin": {"type": "number", "minimum": 1},
                "panels_per_2pi": {"type": "integer", "minimum": 1},
                "max_depth": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate(data)
    return data


def validate(data: dict) -> None:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc


def resolve(preset: str | None = "desk", file_data: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Preset, then config file, then command-line overrides (last wins)."""
    merged: dict = {}
    if preset:
        merged.update(json.loads(json.dumps(PRESETS[preset])))
    for layer in (file_data or {}, overrides or {}):
        for key, value in layer.items():
            if value is None:
                continue
            if key in ("agent", "quadrature"):
                merged.setdefault(key, {}).update(value)
            else:
                merged[key] = value
    validate(merged)
    agent = AgentHyperparams(**merged.pop("agent", {}))
    quad = QuadratureConfig(**merged.pop("quadrature", {}))
    merged["families"] = tuple(merged.get("families", ("cpmg",)))
    return RunConfig(agent=agent, quad=quad, **merged)
