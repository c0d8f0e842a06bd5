"""A five-state, two-action, two-channel chain MDP, small enough to solve exactly.

States 0..4 form a chain; state 4 is terminal with zero utilities. Action 0
("push") advances with probability 0.9, action 1 ("coast") with probability
0.2. Pushing pays on the progress channel (a larger payoff on the final
push), coasting pays on the comfort channel, so different needs weightings
prefer different policies. The tensors are declared literally below; the
value-iteration oracle and the learned agents both consume this object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ivrl.envs.grid import ScenarioConfig, StepOutcome

CHAIN_CHANNELS = ("progress", "comfort")
CHAIN_EPISODE_CAP = 100


@dataclass(frozen=True)
class TabularMdp:
    """Explicit finite MDP: transition and utility tensors plus terminal states.

    transitions has shape (S, A, S) with rows summing to 1; utilities has
    shape (S, A, K) and depends on the state-action pair only.
    """

    transitions: np.ndarray
    utilities: np.ndarray
    terminal: frozenset[int]
    channel_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        p = self.transitions
        u = self.utilities
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise ValueError(f"transitions must be (S, A, S), got {p.shape}")
        if u.ndim != 3 or u.shape[:2] != p.shape[:2]:
            raise ValueError(
                f"utilities shape {u.shape} does not match transitions {p.shape}"
            )
        if u.shape[2] != len(self.channel_labels):
            raise ValueError("channel label count does not match utility channels")
        if p.min() < 0.0:
            raise ValueError("negative transition probability")
        row_err = np.abs(p.sum(axis=2) - 1.0).max()
        if row_err > 1e-12:
            raise ValueError(f"transition rows sum off 1 by {row_err}")
        if not all(0 <= s < p.shape[0] for s in self.terminal):
            raise ValueError("terminal state out of range")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_channels(self) -> int:
        return self.utilities.shape[2]


def chain_oracle_mdp() -> TabularMdp:
    """The fixed chain instance used by the oracle-vs-learned comparisons."""
    n_states, n_actions, n_channels = 5, 2, 2
    p = np.zeros((n_states, n_actions, n_states))
    u = np.zeros((n_states, n_actions, n_channels))
    for s in range(4):
        p[s, 0, s + 1] = 0.9
        p[s, 0, s] = 0.1
        p[s, 1, s + 1] = 0.2
        p[s, 1, s] = 0.8
        u[s, 0] = (1.0, -0.1)
        u[s, 1] = (0.0, 0.4)
    u[3, 0] = (2.0, -0.1)
    p[4, :, 4] = 1.0
    return TabularMdp(p, u, frozenset({4}), CHAIN_CHANNELS)


class ChainEnv:
    """Environment wrapper over the chain MDP with one-hot observations."""

    scenario = "chain-oracle"

    def __init__(self, config: ScenarioConfig):
        if config.scenario != "chain-oracle":
            raise ValueError(f"not the chain scenario: {config.scenario!r}")
        self.config = config
        self.mdp = chain_oracle_mdp()
        self.n_actions = self.mdp.n_actions
        self.n_channels = self.mdp.n_channels
        self.channel_labels = self.mdp.channel_labels
        self.obs_dim = self.mdp.n_states
        self.episode_cap = config.episode_cap or CHAIN_EPISODE_CAP
        self._rng: np.random.Generator | None = None
        self.done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        self._rng = np.random.default_rng(self.config.seed if seed is None else seed)
        self.state = 0
        self.tick = 0
        self.progress_sum = 0.0
        self.done = False
        return self._observation()

    def step(self, action: int) -> StepOutcome:
        if self._rng is None:
            raise RuntimeError("step before reset")
        if self.done:
            raise RuntimeError("step after episode end")
        a = int(action)
        if not (0 <= a < self.n_actions):
            raise ValueError(f"action {action} outside [0, {self.n_actions})")
        utilities = self.mdp.utilities[self.state, a].copy()
        self.progress_sum += utilities[0]
        row = self.mdp.transitions[self.state, a]
        self.state = int(np.searchsorted(np.cumsum(row), self._rng.random()))
        self.tick += 1
        terminal = self.state in self.mdp.terminal
        self.done = terminal or self.tick >= self.episode_cap
        info = {
            "ticks": self.tick,
            "kills": 0,
            "score": self.progress_sum,
            "terminal": terminal,
        }
        return StepOutcome(utilities, self._observation(), self.done, info)

    def _observation(self) -> np.ndarray:
        obs = np.zeros(self.mdp.n_states)
        obs[self.state] = 1.0
        return obs

    def map_text(self) -> str:
        here = self.state if self._rng is not None else 0
        marks = []
        for s in range(self.mdp.n_states):
            mark = f"({s})" if s == here else str(s)
            marks.append(f"[{mark}]" if s in self.mdp.terminal else mark)
        return "push 0.9 / coast 0.2 advance chance: " + " -> ".join(marks)
