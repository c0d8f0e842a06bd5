"""Needs-weighted reward kernel: scalarization, discounted and N-step returns.

The scalar reward a step earns is the dot product of the agent's needs-weight
vector (on the probability simplex) and the environment's utility vector. The
return helpers here are the single source of truth for both agents and for
the oracle comparisons in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIMPLEX_ATOL = 1e-9


def as_utilities(u, n_channels: int | None = None) -> np.ndarray:
    """Validate and return a float64 utility vector."""
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"utilities must be a flat vector, got shape {arr.shape}")
    if n_channels is not None and arr.size != n_channels:
        raise ValueError(f"expected {n_channels} utility channels, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite utility entries")
    return arr


def as_needs_weights(w, n_channels: int | None = None) -> np.ndarray:
    """Validate and return a float64 needs-weight vector on the simplex."""
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"needs weights must be a non-empty flat vector, got shape {arr.shape}")
    if n_channels is not None and arr.size != n_channels:
        raise ValueError(f"expected {n_channels} needs weights, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite needs weights")
    if arr.min() < 0.0:
        raise ValueError(f"negative needs weight: {arr.min()}")
    if abs(arr.sum() - 1.0) > SIMPLEX_ATOL:
        raise ValueError(f"needs weights sum to {arr.sum()!r}, not 1")
    return arr


def compose_reward(utilities, weights) -> float:
    """Scalar reward: sum_k u_k * w_k with weights validated on the simplex."""
    u = as_utilities(utilities)
    w = as_needs_weights(weights)
    if u.size != w.size:
        raise ValueError(f"channel mismatch: {u.size} utilities vs {w.size} weights")
    return float(np.dot(u, w))


@dataclass(frozen=True)
class RewardTrace:
    """A sequence of scalar rewards with its discount, gamma strictly below 1."""

    rewards: tuple[float, ...]
    gamma: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        arr = np.asarray(self.rewards, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("rewards must be a flat sequence")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("non-finite rewards")


def discounted_return(trace: RewardTrace) -> np.ndarray:
    """G_t = r_t + gamma * G_{t+1} for every t, via the backward recursion."""
    r = np.asarray(trace.rewards, dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty reward trace")
    g = np.empty_like(r)
    acc = 0.0
    for t in range(r.size - 1, -1, -1):
        acc = r[t] + trace.gamma * acc
        g[t] = acc
    return g


def n_step_utility_return(
    rewards,
    gamma: float,
    n: int,
    bootstrap: float,
    episode_len: int,
    t: int,
) -> float:
    """N-step return for step t of an episode of length episode_len.

    `rewards` is the reward slice starting at t (rewards[k] is the reward at
    step t+k). Returns gamma^n * bootstrap + sum_{k<n, t+k<T} gamma^k * r_{t+k};
    the bootstrap term contributes nothing once t+n >= T, whatever its value.
    """
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not (0 <= t < episode_len):
        raise ValueError(f"t={t} outside episode of length {episode_len}")
    r = np.asarray(rewards, dtype=np.float64)
    needed = min(n, episode_len - t)
    if r.size < needed:
        raise ValueError(f"reward slice has {r.size} entries, need {needed}")
    acc = 0.0
    for k in range(needed):
        acc += gamma**k * r[k]
    if t + n < episode_len:
        acc += gamma**n * float(bootstrap)
    return acc
