"""Exact value iteration over the weight-augmented state space.

For a finite MDP and a finite candidate set, the optimal joint value obeys

    Q(s, w, a) = w . U(s, a) + gamma * sum_s' P(s'|s, a) max_{w', a'} Q(s', w', a')

with terminal states pinned to their immediate reward. gamma < 1 makes the
update a contraction, so sweeping to a residual below tol is exact up to tol.
This is the independent yardstick the learned agents are measured against.
"""

from __future__ import annotations

import numpy as np

from ivrl.dqn import WeightCandidateSet
from ivrl.envs.chain import TabularMdp


def value_iteration_oracle(
    mdp: TabularMdp,
    candidates: WeightCandidateSet,
    gamma: float,
    tol: float = 1e-10,
) -> np.ndarray:
    """Q* table of shape (n_states, n_candidates, n_actions)."""
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if candidates.n_channels != mdp.n_channels:
        raise ValueError(
            f"candidates have {candidates.n_channels} channels, MDP has {mdp.n_channels}"
        )
    w = candidates.matrix()  # (W, K)
    rewards = np.einsum("wk,sak->swa", w, mdp.utilities)
    live = np.ones(mdp.n_states, dtype=bool)
    for s in mdp.terminal:
        live[s] = False
    q = np.zeros_like(rewards)
    while True:
        best = q.reshape(mdp.n_states, -1).max(axis=1)
        backed = rewards + gamma * np.einsum("sap,p->sa", mdp.transitions, best)[:, None, :]
        q_next = np.where(live[:, None, None], backed, rewards)
        residual = float(np.abs(q_next - q).max())
        q = q_next
        if residual < tol:
            return q


def bellman_residual(
    q: np.ndarray, mdp: TabularMdp, candidates: WeightCandidateSet, gamma: float
) -> float:
    """Max absolute one-sweep change at q; zero exactly at the fixed point."""
    w = candidates.matrix()
    rewards = np.einsum("wk,sak->swa", w, mdp.utilities)
    live = np.ones(mdp.n_states, dtype=bool)
    for s in mdp.terminal:
        live[s] = False
    best = q.reshape(mdp.n_states, -1).max(axis=1)
    backed = rewards + gamma * np.einsum("sap,p->sa", mdp.transitions, best)[:, None, :]
    q_next = np.where(live[:, None, None], backed, rewards)
    return float(np.abs(q_next - q).max())
