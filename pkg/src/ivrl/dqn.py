"""Value learning over the joint (action, weight-candidate) space.

The Q net maps an observation to an A x W table laid out row-major in its
output vector: entry (a, w) is output[a * W + w]. Behavior picks a joint
pair epsilon-greedily ("needs-behavior"): with probability epsilon a uniform
random pair, otherwise the table argmax with lexicographic (action, weight)
tie-breaking. The chosen candidate scalarizes that step's utility vector
into the stored reward, and the TD target bootstraps with the max over the
full next-state table from a periodically synced frozen copy, so both the
next action and the next weighting are re-optimized jointly.

A fixed-weight baseline is this same agent with a singleton candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ivrl import approx
from ivrl.approx import Approximator, OptimizerState, ParamGradients
from ivrl.rewards import as_needs_weights, compose_reward
from ivrl.stats import EpisodeStats

REWARD_CONSISTENCY_ATOL = 1e-12


@dataclass(frozen=True)
class WeightCandidateSet:
    """Ordered, duplicate-free tuple of simplex vectors the agent may adopt."""

    vectors: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not self.vectors:
            raise ValueError("candidate set is empty")
        k = len(self.vectors[0])
        for v in self.vectors:
            if len(v) != k:
                raise ValueError("candidate vectors differ in length")
            as_needs_weights(np.asarray(v))
        if len(set(self.vectors)) != len(self.vectors):
            raise ValueError("duplicate candidate vectors")

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, i: int) -> np.ndarray:
        return np.asarray(self.vectors[i])

    @property
    def n_channels(self) -> int:
        return len(self.vectors[0])

    def matrix(self) -> np.ndarray:
        return np.asarray(self.vectors)


def default_candidates(n_channels: int) -> WeightCandidateSet:
    """Uniform vector, the basis vectors, and every pairwise 50/50 mix.

    Duplicates collapse (at K=2 the single pair mix is the uniform vector,
    leaving 3 candidates; K=4 gives the full 1 + 4 + 6 = 11).
    """
    if n_channels < 1:
        raise ValueError(f"n_channels must be positive, got {n_channels}")
    vectors: list[tuple[float, ...]] = [tuple([1.0 / n_channels] * n_channels)]
    for i in range(n_channels):
        v = [0.0] * n_channels
        v[i] = 1.0
        vectors.append(tuple(v))
    for i in range(n_channels):
        for j in range(i + 1, n_channels):
            v = [0.0] * n_channels
            v[i] = 0.5
            v[j] = 0.5
            vectors.append(tuple(v))
    seen: list[tuple[float, ...]] = []
    for v in vectors:
        if v not in seen:
            seen.append(v)
    return WeightCandidateSet(tuple(seen))


def singleton_candidates(weights) -> WeightCandidateSet:
    w = as_needs_weights(np.asarray(weights, dtype=np.float64))
    return WeightCandidateSet((tuple(float(x) for x in w),))


@dataclass
class Transition:
    """One stored step; reward must equal candidates[weight_id] . utilities."""

    obs: np.ndarray
    weight_id: int
    action: int
    reward: float
    utilities: np.ndarray
    next_obs: np.ndarray
    done: bool


class ReplayBuffer:
    """FIFO ring of transitions with uniform with-replacement sampling."""

    def __init__(self, capacity: int, candidates: WeightCandidateSet):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.candidates = candidates
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, tr: Transition) -> None:
        """Insert, evicting the oldest once full; checks reward consistency."""
        if not (0 <= tr.weight_id < len(self.candidates)):
            raise ValueError(f"weight_id {tr.weight_id} outside the candidate set")
        expect = compose_reward(tr.utilities, self.candidates[tr.weight_id])
        if abs(expect - tr.reward) > REWARD_CONSISTENCY_ATOL:
            raise ValueError(
                f"stored reward {tr.reward!r} disagrees with weighted utilities {expect!r}"
            )
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._next] = tr
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sample with replacement over current contents."""
        if batch_size <= 0:
            raise ValueError(f"batch_size must be positive, got {batch_size}")
        if len(self._items) < batch_size:
            raise ValueError(
                f"buffer holds {len(self._items)} transitions, need {batch_size}"
            )
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[int(i)] for i in idx]


@dataclass
class QHead:
    """Approximator whose output vector is read as a row-major A x W table."""

    net: Approximator
    n_actions: int
    n_weights: int

    def __post_init__(self) -> None:
        if self.net.out_dim != self.n_actions * self.n_weights:
            raise ValueError(
                f"net output width {self.net.out_dim} != "
                f"{self.n_actions} actions x {self.n_weights} candidates"
            )

    def table(self, obs: np.ndarray) -> np.ndarray:
        return approx.forward(self.net, obs).reshape(self.n_actions, self.n_weights)

    def table_batch(self, obs_batch: np.ndarray) -> np.ndarray:
        out = approx.forward_batch(self.net, obs_batch)
        return out.reshape(-1, self.n_actions, self.n_weights)


def greedy_pair(table: np.ndarray) -> tuple[int, int]:
    """Joint argmax over an A x W table; flat row-major argmax makes ties
    resolve to the lexicographically smallest (action, weight_id)."""
    flat = int(np.argmax(table.reshape(-1)))
    return divmod(flat, table.shape[1])


def select_needs_behavior(
    q: QHead,
    obs: np.ndarray,
    epsilon: float,
    candidates: WeightCandidateSet,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Epsilon-greedy joint (action, weight_id) choice.

    Exactly one uniform draw decides the branch on every call, so behavior
    streams stay aligned across variants that share a seed.
    """
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if len(candidates) != q.n_weights:
        raise ValueError(
            f"candidate set size {len(candidates)} != table width {q.n_weights}"
        )
    if rng.random() < epsilon:
        flat = int(rng.integers(q.n_actions * q.n_weights))
        return divmod(flat, q.n_weights)
    return greedy_pair(q.table(obs))


def td_targets(
    batch: list[Transition],
    q_eval: QHead,
    gamma: float,
    candidates: WeightCandidateSet,
) -> np.ndarray:
    """y_j = r_j for terminal transitions, else r_j + gamma * max over the
    full next-state table of the frozen evaluation net."""
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if len(candidates) != q_eval.n_weights:
        raise ValueError("candidate set size does not match the evaluation head")
    rewards = np.array([tr.reward for tr in batch])
    next_obs = np.stack([tr.next_obs for tr in batch])
    live = np.array([0.0 if tr.done else 1.0 for tr in batch])
    next_max = q_eval.table_batch(next_obs).reshape(len(batch), -1).max(axis=1)
    return rewards + gamma * live * next_max


def batch_loss_grads(
    q: QHead,
    obs: np.ndarray,
    actions: np.ndarray,
    weight_ids: np.ndarray,
    targets: np.ndarray,
) -> tuple[ParamGradients, float]:
    """Mean squared TD error and its exact parameter gradients.

    The loss reads one table entry per transition, so the output-side
    gradient is zero everywhere except the indexed (action, weight) slots.
    """
    n = obs.shape[0]
    out = approx.forward_batch(q.net, obs)
    flat = actions * q.n_weights + weight_ids
    picked = out[np.arange(n), flat]
    resid = picked - targets
    loss = float(np.mean(resid**2))
    g = np.zeros_like(out)
    g[np.arange(n), flat] = 2.0 * resid / n
    return approx.backward_batch(q.net, g), loss


def dqn_train_step(
    q: QHead,
    q_target: QHead,
    buffer: ReplayBuffer,
    batch_size: int,
    gamma: float,
    opt: OptimizerState,
    rng: np.random.Generator,
) -> float:
    """One sampled minibatch update; returns the pre-update loss."""
    batch = buffer.sample(batch_size, rng)
    y = td_targets(batch, q_target, gamma, buffer.candidates)
    obs = np.stack([tr.obs for tr in batch])
    actions = np.array([tr.action for tr in batch])
    weight_ids = np.array([tr.weight_id for tr in batch])
    grads, loss = batch_loss_grads(q, obs, actions, weight_ids, y)
    approx.apply_update(q.net, grads, opt)
    return loss


@dataclass(frozen=True)
class DqnParams:
    """Knobs of the value-learning loop."""

    total_steps: int = 20000
    gamma: float = 0.99
    lr: float = 1e-3
    batch_size: int = 32
    buffer_capacity: int = 100000
    target_sync: int = 500
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_frac: float = 0.1
    hidden: tuple[int, ...] = (32, 32)
    absorbing_pushes: bool = False


@dataclass
class DqnRunResult:
    q: QHead
    episodes: list[EpisodeStats]
    step_losses: list[float] = field(default_factory=list)


def epsilon_at(step: int, params: DqnParams) -> float:
    """Linear decay from epsilon_start to epsilon_end over the first
    epsilon_decay_frac of total_steps, then flat."""
    horizon = max(1, int(params.epsilon_decay_frac * params.total_steps))
    if step >= horizon:
        return params.epsilon_end
    frac = step / horizon
    return params.epsilon_start + frac * (params.epsilon_end - params.epsilon_start)


def train_dqn(env, candidates: WeightCandidateSet, params: DqnParams, seed: int) -> DqnRunResult:
    """Run the full loop on one seeded environment.

    All randomness (net init, per-episode env seeds, behavior and sampling
    draws) derives from `seed`. The target net syncs every target_sync env
    steps. With absorbing_pushes on, an episode that ends in an MDP-terminal
    state also stores one zero-utility self-loop at the final observation,
    pinning the learned values there to the terminal convention.
    """
    master = np.random.default_rng(seed)
    net_seed = int(master.integers(2**63))
    env_master = np.random.default_rng(int(master.integers(2**63)))
    rng = np.random.default_rng(int(master.integers(2**63)))

    sizes = (env.obs_dim, *params.hidden, env.n_actions * len(candidates))
    q = QHead(approx.mlp_init(sizes, "rectifier", net_seed), env.n_actions, len(candidates))
    q_target = QHead(q.net.copy(), env.n_actions, len(candidates))
    opt = approx.make_optimizer(q.net, "adam", params.lr)
    buffer = ReplayBuffer(params.buffer_capacity, candidates)

    episodes: list[EpisodeStats] = []
    step_losses: list[float] = []
    steps = 0
    episode = 0
    while steps < params.total_steps:
        obs = env.reset(int(env_master.integers(2**63)))
        ep_reward = 0.0
        ep_utils = np.zeros(env.n_channels)
        ep_weights = np.zeros(env.n_channels)
        ep_losses: list[float] = []
        ep_steps = 0
        info: dict = {}
        while True:
            action, weight_id = select_needs_behavior(
                q, obs, epsilon_at(steps, params), candidates, rng
            )
            outcome = env.step(action)
            reward = compose_reward(outcome.utilities, candidates[weight_id])
            buffer.push(
                Transition(
                    obs,
                    weight_id,
                    action,
                    reward,
                    outcome.utilities,
                    outcome.next_obs,
                    outcome.done,
                )
            )
            ep_reward += reward
            ep_utils += outcome.utilities
            ep_weights += candidates[weight_id]
            ep_steps += 1
            if len(buffer) >= params.batch_size:
                loss = dqn_train_step(
                    q, q_target, buffer, params.batch_size, params.gamma, opt, rng
                )
                ep_losses.append(loss)
                step_losses.append(loss)
            steps += 1
            if steps % params.target_sync == 0:
                q_target.net.copy_params_from(q.net)
            obs = outcome.next_obs
            if outcome.done:
                info = outcome.info
                if params.absorbing_pushes and info.get("terminal"):
                    zero_u = np.zeros(env.n_channels)
                    wid = int(rng.integers(len(candidates)))
                    buffer.push(
                        Transition(
                            outcome.next_obs,
                            wid,
                            int(rng.integers(env.n_actions)),
                            compose_reward(zero_u, candidates[wid]),
                            zero_u,
                            outcome.next_obs,
                            True,
                        )
                    )
                break
        mean_loss = float(np.mean(ep_losses)) if ep_losses else 0.0
        episodes.append(
            EpisodeStats(
                episode=episode,
                steps=ep_steps,
                reward=ep_reward,
                utility_sums=ep_utils,
                weights=ep_weights / ep_steps,
                losses=(mean_loss, 0.0, 0.0),
                score=float(info.get("score", 0.0)),
            )
        )
        episode += 1
    return DqnRunResult(q, episodes, step_losses)
