"""Flat key = value experiment configs.

One assignment per line, `#` starts a comment, lists are comma-separated,
unknown keys are errors. Every error names the offending field and line.
serialize_config emits a canonical form that parses back to an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ivrl.envs.grid import SCENARIO_NAMES
from ivrl.rewards import as_needs_weights

ALGORITHMS = ("iv-dqn", "iv-a2c", "fixed-weight-dqn", "fixed-weight-a2c")
BASELINES = ("fixed-weight-dqn", "fixed-weight-a2c")


class ConfigError(ValueError):
    """Config validation failure; carries the 1-based line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    scenario: str
    seeds: tuple[int, ...]
    total_steps: int = 20000
    episodes: int = 300
    gamma: float = 0.99
    n_step: int = 5
    lr: float = 1e-3
    policy_lr: float = 1e-3
    needs_lr: float = 5e-3
    value_lr: float = 1e-2
    entropy_beta: float = 0.01
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    batch_size: int = 32
    buffer_capacity: int = 100000
    target_sync: int = 500
    hidden_sizes: tuple[int, ...] = (32, 32)
    weight_candidates: str = "default"
    fixed_weights: tuple[float, ...] | None = None
    episode_cap: int | None = None
    spawn_rate: float | None = None
    out_dir: str = "runs"


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_int_list(raw: str) -> tuple[int, ...]:
    if raw.strip() == "":
        return ()
    return tuple(int(p.strip()) for p in raw.split(","))


def _parse_float_list(raw: str) -> tuple[float, ...]:
    if raw.strip() == "":
        return ()
    return tuple(float(p.strip()) for p in raw.split(","))


def _parse_str(raw: str) -> str:
    return raw


_PARSERS = {
    "algorithm": _parse_str,
    "scenario": _parse_str,
    "seeds": _parse_int_list,
    "total_steps": _parse_int,
    "episodes": _parse_int,
    "gamma": _parse_float,
    "n_step": _parse_int,
    "lr": _parse_float,
    "policy_lr": _parse_float,
    "needs_lr": _parse_float,
    "value_lr": _parse_float,
    "entropy_beta": _parse_float,
    "epsilon_start": _parse_float,
    "epsilon_end": _parse_float,
    "batch_size": _parse_int,
    "buffer_capacity": _parse_int,
    "target_sync": _parse_int,
    "hidden_sizes": _parse_int_list,
    "weight_candidates": _parse_str,
    "fixed_weights": _parse_float_list,
    "episode_cap": _parse_int,
    "spawn_rate": _parse_float,
    "out_dir": _parse_str,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config document."""
    values: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _PARSERS[key](raw_value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from exc
    for required in ("algorithm", "scenario", "seeds"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    cfg = ExperimentConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(
            f"algorithm must be one of {ALGORITHMS}, got {cfg.algorithm!r}"
        )
    if cfg.scenario not in SCENARIO_NAMES:
        raise ConfigError(
            f"scenario must be one of {SCENARIO_NAMES}, got {cfg.scenario!r}"
        )
    if not cfg.seeds:
        raise ConfigError("seeds must name at least one seed")
    if len(set(cfg.seeds)) != len(cfg.seeds):
        raise ConfigError("seeds contains duplicates")
    if not (0.0 <= cfg.gamma < 1.0):
        raise ConfigError(f"gamma must lie in [0, 1), got {cfg.gamma}")
    for name in ("epsilon_start", "epsilon_end"):
        v = getattr(cfg, name)
        if not (0.0 <= v <= 1.0):
            raise ConfigError(f"{name} must lie in [0, 1], got {v}")
    for name in ("total_steps", "episodes", "n_step", "batch_size", "buffer_capacity", "target_sync"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive, got {getattr(cfg, name)}")
    for name in ("lr", "policy_lr", "needs_lr", "value_lr"):
        if getattr(cfg, name) < 0.0:
            raise ConfigError(f"{name} must be non-negative, got {getattr(cfg, name)}")
    if any(h <= 0 for h in cfg.hidden_sizes):
        raise ConfigError(f"hidden_sizes must be positive, got {cfg.hidden_sizes}")
    if cfg.episode_cap is not None and cfg.episode_cap <= 0:
        raise ConfigError(f"episode_cap must be positive, got {cfg.episode_cap}")
    if cfg.spawn_rate is not None and not (0.0 <= cfg.spawn_rate <= 1.0):
        raise ConfigError(f"spawn_rate must lie in [0, 1], got {cfg.spawn_rate}")
    if cfg.algorithm in BASELINES:
        if cfg.fixed_weights is None:
            raise ConfigError(f"{cfg.algorithm} requires fixed_weights")
        try:
            as_needs_weights(np.asarray(cfg.fixed_weights))
        except ValueError as exc:
            raise ConfigError(f"fixed_weights: {exc}") from exc
    elif cfg.fixed_weights is not None:
        raise ConfigError(f"{cfg.algorithm} forbids fixed_weights")
    if cfg.weight_candidates != "default":
        parse_candidate_spec(cfg.weight_candidates)


def parse_candidate_spec(spec: str) -> tuple[tuple[float, ...], ...]:
    """Explicit candidate list: vectors split by ';', entries by ','."""
    vectors = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            raise ConfigError("empty candidate vector in weight_candidates")
        try:
            vec = tuple(float(p.strip()) for p in part.split(","))
            as_needs_weights(np.asarray(vec))
        except ValueError as exc:
            raise ConfigError(f"weight_candidates: {exc}") from exc
        vectors.append(vec)
    if len(set(vectors)) != len(vectors):
        raise ConfigError("weight_candidates contains duplicates")
    return tuple(vectors)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            rendered = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
