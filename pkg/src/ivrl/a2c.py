"""Actor-critic with a learned needs head.

Three nets share nothing but the observation: a policy head (softmax over
actions, sampled), a needs head (softmax over utility channels, taken
deterministically as this step's weight vector), and a scalar value head.
Per episode, N-step returns bootstrap on the recorded values, advantages are
treated as constants, and the three losses are

  policy  -(1/T) sum_t A_t log pi(a_t|s_t) plus an entropy bonus,
  needs   -(1/T) sum_t A_t (u_t . w_t), with w_t recomputed differentiably,
  value   (1/T) sum_t (U_t - V(s_t))^2,

all gradients computed against the pre-update parameters before any net is
touched, then applied in the order policy, needs, value. A fixed-weight
baseline pins w_t to a constant vector and skips the needs update; with the
uniform vector that is exactly an ordinary advantage actor-critic on the
mean utility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ivrl import approx
from ivrl.approx import Approximator, OptimizerState, ParamGradients
from ivrl.rewards import as_needs_weights, compose_reward, n_step_utility_return
from ivrl.stats import EpisodeStats

PROB_FLOOR = 1e-8
FINAL_LAYER_SCALE = 0.01


@dataclass
class ActorCriticHeads:
    """Policy, needs, and value nets; fixed_weights pins the needs output."""

    policy: Approximator
    needs: Approximator
    value: Approximator
    fixed_weights: np.ndarray | None = None

    @property
    def n_actions(self) -> int:
        return self.policy.out_dim

    @property
    def n_channels(self) -> int:
        return self.needs.out_dim


def make_heads(
    obs_dim: int,
    n_actions: int,
    n_channels: int,
    hidden: tuple[int, ...] = (32, 32),
    seed: int = 0,
    fixed_weights=None,
) -> ActorCriticHeads:
    """Build the three nets from one seed.

    The final layers of the policy and needs nets are scaled down so the
    starting action distribution and needs weights are near-uniform; the
    needs net is built (and the seed stream consumed) even when
    fixed_weights is given, so fixed and learned variants share identical
    policy and value initializations under one seed.
    """
    master = np.random.default_rng(seed)
    nets = []
    for width in (n_actions, n_channels, 1):
        net = approx.mlp_init(
            (obs_dim, *hidden, width), "rectifier", int(master.integers(2**63))
        )
        nets.append(net)
    for net in nets[:2]:
        net.weights[-1] *= FINAL_LAYER_SCALE
    fixed = None if fixed_weights is None else as_needs_weights(np.asarray(fixed_weights))
    if fixed is not None and fixed.size != n_channels:
        raise ValueError(f"fixed weights have {fixed.size} entries, need {n_channels}")
    return ActorCriticHeads(nets[0], nets[1], nets[2], fixed)


def weights_at(heads: ActorCriticHeads, obs: np.ndarray) -> np.ndarray:
    """The operating needs weights at one observation (no sampling)."""
    if heads.fixed_weights is not None:
        return heads.fixed_weights
    return approx.softmax(approx.forward(heads.needs, obs))


@dataclass
class EpisodeTrace:
    """One rolled-out episode, step-indexed arrays of length T."""

    obs: np.ndarray  # (T, obs_dim)
    actions: np.ndarray  # (T,) int
    weights: np.ndarray  # (T, K)
    utilities: np.ndarray  # (T, K)
    rewards: np.ndarray  # (T,)
    values: np.ndarray  # (T,)
    final_info: dict

    def __len__(self) -> int:
        return self.obs.shape[0]


@dataclass
class AdvantageVector:
    """N-step returns and the gradient-stopped advantages U_t - V(s_t)."""

    returns: np.ndarray
    advantages: np.ndarray


def rollout(
    env,
    first_obs: np.ndarray,
    heads: ActorCriticHeads,
    rng: np.random.Generator,
    max_steps: int,
) -> EpisodeTrace:
    """Play one episode (env already reset) and record it.

    Each step: w_t from the needs head, a_t sampled from the policy by
    inverse CDF (one uniform draw per step), reward w_t . u_t.
    """
    obs_list, actions, weights, utils, rewards, values = [], [], [], [], [], []
    obs = first_obs
    info: dict = {}
    for _ in range(max_steps):
        w = weights_at(heads, obs)
        probs = approx.softmax(approx.forward(heads.policy, obs))
        action = int(np.searchsorted(np.cumsum(probs), rng.random()))
        action = min(action, probs.size - 1)
        v = float(approx.forward(heads.value, obs)[0])
        outcome = env.step(action)
        obs_list.append(obs)
        actions.append(action)
        weights.append(w)
        utils.append(outcome.utilities)
        rewards.append(compose_reward(outcome.utilities, w))
        values.append(v)
        obs = outcome.next_obs
        if outcome.done:
            info = outcome.info
            break
    return EpisodeTrace(
        np.stack(obs_list),
        np.array(actions),
        np.stack(weights),
        np.stack(utils),
        np.array(rewards),
        np.array(values),
        info,
    )


def n_step_advantages(trace: EpisodeTrace, gamma: float, n: int) -> AdvantageVector:
    """U_t bootstrapped on the recorded value at t+n (zero once t+n reaches
    the episode end), advantages as plain numbers."""
    t_len = len(trace)
    returns = np.empty(t_len)
    for t in range(t_len):
        bootstrap = trace.values[t + n] if t + n < t_len else 0.0
        returns[t] = n_step_utility_return(
            trace.rewards[t:], gamma, n, bootstrap, t_len, t
        )
    return AdvantageVector(returns, returns - trace.values)


def policy_loss_grads(
    trace: EpisodeTrace,
    adv: AdvantageVector,
    heads: ActorCriticHeads,
    entropy_beta: float = 0.01,
) -> tuple[ParamGradients, float]:
    """Score-function loss with entropy bonus; exact policy-net gradients."""
    t_len = len(trace)
    a_t = adv.advantages
    logits = approx.forward_batch(heads.policy, trace.obs)
    probs = approx.softmax_rows(logits)
    log_probs = np.log(np.maximum(probs, PROB_FLOOR))
    picked = log_probs[np.arange(t_len), trace.actions]
    entropy = -np.sum(probs * log_probs, axis=1)
    loss = float(-np.mean(a_t * picked) - entropy_beta * np.mean(entropy))
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(t_len), trace.actions] = 1.0
    g = -(a_t[:, None] / t_len) * (one_hot - probs)
    g += (entropy_beta / t_len) * probs * (log_probs + entropy[:, None])
    return approx.backward_batch(heads.policy, g), loss


def needs_loss_grads(
    trace: EpisodeTrace, adv: AdvantageVector, heads: ActorCriticHeads
) -> tuple[ParamGradients | None, float]:
    """Advantage-weighted instantaneous reward ascent in the needs net.

    Returns (None, loss-at-fixed-weights) for fixed-weight heads.
    """
    t_len = len(trace)
    a_t = adv.advantages
    if heads.fixed_weights is not None:
        inst = trace.utilities @ heads.fixed_weights
        return None, float(-np.mean(a_t * inst))
    logits = approx.forward_batch(heads.needs, trace.obs)
    w = approx.softmax_rows(logits)
    inst = np.sum(trace.utilities * w, axis=1)
    loss = float(-np.mean(a_t * inst))
    g = -(a_t[:, None] / t_len) * w * (trace.utilities - inst[:, None])
    return approx.backward_batch(heads.needs, g), loss


def value_loss_grads(
    trace: EpisodeTrace, adv: AdvantageVector, heads: ActorCriticHeads
) -> tuple[ParamGradients, float]:
    """Mean squared gap between the N-step return and the value head."""
    t_len = len(trace)
    v = approx.forward_batch(heads.value, trace.obs)[:, 0]
    resid = adv.returns - v
    loss = float(np.mean(resid**2))
    g = (-2.0 * resid / t_len)[:, None]
    return approx.backward_batch(heads.value, g), loss


def factorized_state_value(heads: ActorCriticHeads, obs: np.ndarray, utility_table) -> float:
    """sum_a pi(a|s) * (w(s) . u(s, a)) for a known per-action utility table."""
    u = np.asarray(utility_table, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != heads.n_actions:
        raise ValueError(f"utility table must be (A, K), got {u.shape}")
    probs = approx.softmax(approx.forward(heads.policy, obs))
    w = weights_at(heads, obs)
    return float(probs @ (u @ w))


@dataclass(frozen=True)
class A2cParams:
    """Knobs of the actor-critic loop."""

    episodes: int = 300
    gamma: float = 0.99
    n_step: int = 5
    policy_lr: float = 1e-3
    needs_lr: float = 5e-3
    value_lr: float = 1e-2
    entropy_beta: float = 0.01
    hidden: tuple[int, ...] = (32, 32)
    max_episode_steps: int = 10000


@dataclass
class A2cOptimizers:
    policy: OptimizerState
    needs: OptimizerState
    value: OptimizerState


@dataclass
class A2cRunResult:
    heads: ActorCriticHeads
    episodes: list[EpisodeStats]
    episode_losses: list[tuple[float, float, float]] = field(default_factory=list)


def a2c_train_episode(
    env,
    first_obs: np.ndarray,
    heads: ActorCriticHeads,
    opts: A2cOptimizers,
    params: A2cParams,
    rng: np.random.Generator,
) -> tuple[EpisodeTrace, tuple[float, float, float]]:
    """Roll one episode and apply the three per-episode batch updates.

    Every gradient is computed against the pre-update parameters; updates
    then land in the order policy, needs, value. Fixed-weight heads skip
    the needs update.
    """
    trace = rollout(env, first_obs, heads, rng, params.max_episode_steps)
    adv = n_step_advantages(trace, params.gamma, params.n_step)
    policy_grads, policy_loss = policy_loss_grads(
        trace, adv, heads, params.entropy_beta
    )
    needs_grads, needs_loss = needs_loss_grads(trace, adv, heads)
    value_grads, value_loss = value_loss_grads(trace, adv, heads)
    approx.apply_update(heads.policy, policy_grads, opts.policy)
    if needs_grads is not None:
        approx.apply_update(heads.needs, needs_grads, opts.needs)
    approx.apply_update(heads.value, value_grads, opts.value)
    return trace, (policy_loss, needs_loss, value_loss)


def train_a2c(env, params: A2cParams, seed: int, fixed_weights=None) -> A2cRunResult:
    """Run the full per-episode loop on one seeded environment."""
    master = np.random.default_rng(seed)
    heads_seed = int(master.integers(2**63))
    env_master = np.random.default_rng(int(master.integers(2**63)))
    rng = np.random.default_rng(int(master.integers(2**63)))
    heads = make_heads(
        env.obs_dim,
        env.n_actions,
        env.n_channels,
        params.hidden,
        heads_seed,
        fixed_weights,
    )
    opts = A2cOptimizers(
        approx.make_optimizer(heads.policy, "adam", params.policy_lr),
        approx.make_optimizer(heads.needs, "adam", params.needs_lr),
        approx.make_optimizer(heads.value, "adam", params.value_lr),
    )
    records: list[EpisodeStats] = []
    losses: list[tuple[float, float, float]] = []
    for episode in range(params.episodes):
        first_obs = env.reset(int(env_master.integers(2**63)))
        trace, ep_losses = a2c_train_episode(env, first_obs, heads, opts, params, rng)
        losses.append(ep_losses)
        records.append(
            EpisodeStats(
                episode=episode,
                steps=len(trace),
                reward=float(trace.rewards.sum()),
                utility_sums=trace.utilities.sum(axis=0),
                weights=trace.weights.mean(axis=0),
                losses=ep_losses,
                score=float(trace.final_info.get("score", 0.0)),
            )
        )
    return A2cRunResult(heads, records, losses)
