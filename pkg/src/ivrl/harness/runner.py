"""Config-driven experiment execution and the metrics table.

One experiment = one algorithm on one scenario across several seeds, run
sequentially and merged in (seed, episode) order. The persisted CSV has a
fixed versioned header derived from the scenario's channel labels; floats
are written with 9 significant digits, and rerunning an identical config
reproduces the file byte for byte. Wall-clock time is a diagnostic on the
in-memory rows only (every row of a run carries that run's total) and is
never serialized, which is what keeps the files reproducible.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ivrl.a2c import A2cParams, train_a2c
from ivrl.dqn import (
    DqnParams,
    WeightCandidateSet,
    default_candidates,
    singleton_candidates,
    train_dqn,
)
from ivrl.envs import make_env
from ivrl.envs.grid import ScenarioConfig
from ivrl.harness.config import ExperimentConfig, parse_candidate_spec
from ivrl.stats import EpisodeStats

SCHEMA_VERSION = 1
METRICS_FILENAME = "metrics.csv"
_FIXED_COLUMNS = ("run_id", "seed", "episode", "steps", "reward")
_LOSS_COLUMNS = ("loss_main", "loss_needs", "loss_value")


@dataclass
class MetricsRow:
    """One episode of one run; wall_ms stays in memory (see module docstring)."""

    run_id: str
    seed: int
    episode: int
    steps: int
    reward: float
    utility_sums: np.ndarray
    weights: np.ndarray
    losses: tuple[float, float, float]
    score: float
    wall_ms: float = 0.0


def metrics_header(channel_labels) -> str:
    cols = list(_FIXED_COLUMNS)
    cols += [f"u_{c}" for c in channel_labels]
    cols += [f"w_{c}" for c in channel_labels]
    cols += list(_LOSS_COLUMNS)
    cols.append("score")
    return ",".join(cols)


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def write_metrics(rows: list[MetricsRow], path, channel_labels) -> Path:
    """Write the table atomically; a failed write leaves nothing behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w") as fh:
            fh.write(metrics_header(channel_labels) + "\n")
            for r in rows:
                cells = [r.run_id, str(r.seed), str(r.episode), str(r.steps), _fmt(r.reward)]
                cells += [_fmt(u) for u in r.utility_sums]
                cells += [_fmt(w) for w in r.weights]
                cells += [_fmt(l) for l in r.losses]
                cells.append(_fmt(r.score))
                fh.write(",".join(cells) + "\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def read_metrics(path) -> tuple[list[str], list[MetricsRow]]:
    """Read a metrics file back; returns (channel_labels, rows)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"empty metrics file: {path}")
    header = lines[0].split(",")
    labels = [c[2:] for c in header if c.startswith("u_")]
    n_k = len(labels)
    expected = metrics_header(labels)
    if lines[0] != expected:
        raise ValueError(f"unrecognized metrics header: {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        base = len(_FIXED_COLUMNS)
        rows.append(
            MetricsRow(
                run_id=cells[0],
                seed=int(cells[1]),
                episode=int(cells[2]),
                steps=int(cells[3]),
                reward=float(cells[4]),
                utility_sums=np.array([float(c) for c in cells[base : base + n_k]]),
                weights=np.array([float(c) for c in cells[base + n_k : base + 2 * n_k]]),
                losses=tuple(float(c) for c in cells[base + 2 * n_k : base + 2 * n_k + 3]),
                score=float(cells[base + 2 * n_k + 3]),
            )
        )
    return labels, rows


def resolve_candidates(cfg: ExperimentConfig, n_channels: int) -> WeightCandidateSet:
    if cfg.algorithm == "fixed-weight-dqn":
        return singleton_candidates(cfg.fixed_weights)
    if cfg.weight_candidates == "default":
        return default_candidates(n_channels)
    return WeightCandidateSet(parse_candidate_spec(cfg.weight_candidates))


def _dqn_params(cfg: ExperimentConfig) -> DqnParams:
    return DqnParams(
        total_steps=cfg.total_steps,
        gamma=cfg.gamma,
        lr=cfg.lr,
        batch_size=cfg.batch_size,
        buffer_capacity=cfg.buffer_capacity,
        target_sync=cfg.target_sync,
        epsilon_start=cfg.epsilon_start,
        epsilon_end=cfg.epsilon_end,
        hidden=cfg.hidden_sizes,
        absorbing_pushes=cfg.scenario == "chain-oracle",
    )


def _a2c_params(cfg: ExperimentConfig) -> A2cParams:
    return A2cParams(
        episodes=cfg.episodes,
        gamma=cfg.gamma,
        n_step=cfg.n_step,
        policy_lr=cfg.policy_lr,
        needs_lr=cfg.needs_lr,
        value_lr=cfg.value_lr,
        entropy_beta=cfg.entropy_beta,
        hidden=cfg.hidden_sizes,
    )


def run_seed(cfg: ExperimentConfig, seed: int) -> list[EpisodeStats]:
    """Train one seed of the configured experiment and return its episodes."""
    env = make_env(
        ScenarioConfig(
            scenario=cfg.scenario,
            episode_cap=cfg.episode_cap,
            spawn_rate=cfg.spawn_rate,
            seed=seed,
        )
    )
    if cfg.algorithm in ("iv-dqn", "fixed-weight-dqn"):
        candidates = resolve_candidates(cfg, env.n_channels)
        return train_dqn(env, candidates, _dqn_params(cfg), seed).episodes
    fixed = cfg.fixed_weights if cfg.algorithm == "fixed-weight-a2c" else None
    return train_a2c(env, _a2c_params(cfg), seed, fixed).episodes


def run_experiment(cfg: ExperimentConfig, log=print) -> list[MetricsRow]:
    """Run every seed, write <out_dir>/metrics.csv, and return the rows."""
    rows: list[MetricsRow] = []
    labels = None
    for seed in cfg.seeds:
        run_id = f"{cfg.algorithm}-{cfg.scenario}-s{seed}"
        started = time.perf_counter()
        episodes = run_seed(cfg, seed)
        wall_ms = (time.perf_counter() - started) * 1000.0
        labels = _channel_labels(cfg)
        for ep in episodes:
            rows.append(
                MetricsRow(
                    run_id=run_id,
                    seed=seed,
                    episode=ep.episode,
                    steps=ep.steps,
                    reward=ep.reward,
                    utility_sums=ep.utility_sums,
                    weights=ep.weights,
                    losses=ep.losses,
                    score=ep.score,
                    wall_ms=wall_ms,
                )
            )
        if log is not None:
            log(f"{run_id}: {len(episodes)} episodes in {wall_ms:.0f} ms")
    path = write_metrics(rows, Path(cfg.out_dir) / METRICS_FILENAME, labels)
    if log is not None:
        log(f"wrote {path}")
    return rows


def _channel_labels(cfg: ExperimentConfig):
    from ivrl.envs.chain import CHAIN_CHANNELS
    from ivrl.envs.grid import CHANNELS

    return CHAIN_CHANNELS if cfg.scenario == "chain-oracle" else CHANNELS
