"""Analytic-versus-numeric gradient verification across every loss surface.

Each check builds seeded random instances, takes the analytic gradients the
training code actually uses, and compares them against central differences
through ivrl.approx.finite_diff_gradient. The relative error is the scaled
infinity-norm gap (see approx.relative_gradient_error).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ivrl import a2c, approx, dqn

TOLERANCE = 1e-4
FD_STEP = 1e-5


@dataclass
class CheckResult:
    name: str
    instances: int
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance


def suite_passed(results: list[CheckResult]) -> bool:
    return all(r.passed for r in results)


def _random_net(rng: np.random.Generator, out_dim: int | None = None):
    depth = int(rng.integers(1, 3))
    sizes = [int(rng.integers(2, 7)) for _ in range(depth + 1)]
    if out_dim is not None:
        sizes[-1] = out_dim
    tag = ("rectifier", "hyperbolic-tangent", "identity")[int(rng.integers(3))]
    return approx.mlp_init(sizes, tag, int(rng.integers(2**63)))


def _check_backward(seed: int, instances: int) -> CheckResult:
    worst = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        net = _random_net(rng)
        x = rng.normal(size=net.in_dim)
        g = rng.normal(size=net.out_dim)
        approx.forward(net, x)
        analytic = approx.backward(net, g)
        numeric = approx.finite_diff_gradient(
            lambda n: float(approx.forward(n, x) @ g), net, FD_STEP
        )
        worst = max(worst, approx.relative_gradient_error(analytic, numeric))
    return CheckResult("backward", instances, worst, TOLERANCE)


def _check_dqn_loss(seed: int, instances: int) -> CheckResult:
    worst = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        n_actions = int(rng.integers(2, 4))
        n_weights = int(rng.integers(1, 4))
        net = _random_net(rng, out_dim=n_actions * n_weights)
        head = dqn.QHead(net, n_actions, n_weights)
        batch = int(rng.integers(3, 7))
        obs = rng.normal(size=(batch, net.in_dim))
        actions = rng.integers(0, n_actions, size=batch)
        weight_ids = rng.integers(0, n_weights, size=batch)
        targets = rng.normal(size=batch)
        analytic, _ = dqn.batch_loss_grads(head, obs, actions, weight_ids, targets)
        numeric = approx.finite_diff_gradient(
            lambda n: dqn.batch_loss_grads(head, obs, actions, weight_ids, targets)[1],
            net,
            FD_STEP,
        )
        worst = max(worst, approx.relative_gradient_error(analytic, numeric))
    return CheckResult("dqn-batch-loss", instances, worst, TOLERANCE)


def _random_trace(rng: np.random.Generator):
    """Synthetic episode with heads; rewards honor r = w . u by construction."""
    obs_dim = int(rng.integers(2, 5))
    n_actions = int(rng.integers(2, 4))
    n_channels = int(rng.integers(2, 5))
    heads = a2c.make_heads(
        obs_dim, n_actions, n_channels, (int(rng.integers(3, 6)),), int(rng.integers(2**63))
    )
    t_len = int(rng.integers(3, 7))
    obs = rng.normal(size=(t_len, obs_dim))
    actions = rng.integers(0, n_actions, size=t_len)
    utilities = rng.normal(size=(t_len, n_channels))
    weights = np.stack([a2c.weights_at(heads, o) for o in obs])
    rewards = np.sum(utilities * weights, axis=1)
    values = np.array([float(approx.forward(heads.value, o)[0]) for o in obs])
    trace = a2c.EpisodeTrace(obs, actions, weights, utilities, rewards, values, {})
    adv = a2c.n_step_advantages(trace, 0.95, 3)
    return heads, trace, adv


def _check_a2c_loss(seed: int, instances: int, which: str) -> CheckResult:
    worst = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        heads, trace, adv = _random_trace(rng)
        if which == "policy":
            analytic, _ = a2c.policy_loss_grads(trace, adv, heads, 0.01)
            net = heads.policy
            fn = lambda n: a2c.policy_loss_grads(trace, adv, heads, 0.01)[1]
        elif which == "needs":
            analytic, _ = a2c.needs_loss_grads(trace, adv, heads)
            net = heads.needs
            fn = lambda n: a2c.needs_loss_grads(trace, adv, heads)[1]
        else:
            analytic, _ = a2c.value_loss_grads(trace, adv, heads)
            net = heads.value
            fn = lambda n: a2c.value_loss_grads(trace, adv, heads)[1]
        numeric = approx.finite_diff_gradient(fn, net, FD_STEP)
        worst = max(worst, approx.relative_gradient_error(analytic, numeric))
    return CheckResult(f"a2c-{which}-loss", instances, worst, TOLERANCE)


def grad_check_suite(seed: int = 0) -> list[CheckResult]:
    """Run every gradient check; 52 seeded instances across five surfaces."""
    return [
        _check_backward(seed, 12),
        _check_dqn_loss(seed + 1, 10),
        _check_a2c_loss(seed + 2, 10, "policy"),
        _check_a2c_loss(seed + 3, 10, "needs"),
        _check_a2c_loss(seed + 4, 10, "value"),
    ]
