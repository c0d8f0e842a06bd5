"""Dense feed-forward approximators with exact analytic gradients.

Everything runs in float64. A network is a stack of (fan_out, fan_in) weight
matrices with bias vectors and a nonlinearity tag per layer; hidden layers
share one tag and the output layer is always linear. The forward pass caches
post-activations so the backward pass can return exact parameter gradients of
any scalar of the form output . g. Hot kernels live behind ivrl.backend.

No autograd anywhere: the backward pass is the hand-derived chain rule, and
finite_diff_gradient provides the independent central-difference check used
throughout the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ivrl.backend import core

NONLINEARITIES = ("identity", "rectifier", "hyperbolic-tangent")
_ACT_CODES = {"identity": 0, "rectifier": 1, "hyperbolic-tangent": 2}

ADAM_LR = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Approximator:
    """Dense network: parameters plus the cache from the latest forward pass.

    weights[i] has shape (layer_sizes[i+1], layer_sizes[i]); activations[i]
    names the nonlinearity applied after layer i. The cache holds the input
    batch and every post-activation, and is invalidated whenever parameters
    change through apply_update.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...]
    cache: tuple[np.ndarray, list[np.ndarray]] | None = None

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def act_codes(self) -> tuple[int, ...]:
        return tuple(_ACT_CODES[a] for a in self.activations)

    def copy(self) -> "Approximator":
        """Deep copy of the parameters; the cache is not carried over."""
        return Approximator(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activations,
        )

    def copy_params_from(self, other: "Approximator") -> None:
        if other.layer_sizes != self.layer_sizes:
            raise ValueError("layer sizes differ")
        for dst, src in zip(self.weights, other.weights):
            dst[...] = src
        for dst, src in zip(self.biases, other.biases):
            dst[...] = src
        self.cache = None


@dataclass
class ParamGradients:
    """Per-layer gradients, congruent with an Approximator's parameters."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    def congruent_with(self, approx: Approximator) -> bool:
        if len(self.d_weights) != len(approx.weights):
            return False
        return all(
            g.shape == p.shape for g, p in zip(self.d_weights, approx.weights)
        ) and all(g.shape == p.shape for g, p in zip(self.d_biases, approx.biases))


@dataclass
class OptimizerState:
    """Update-rule state. mode is "plain" (bare SGD) or "adam".

    First/second moment accumulators are zero-initialized and only touched in
    adam mode; step counts completed updates and increments by exactly one per
    apply_update in either mode.
    """

    mode: str
    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    step: int = 0
    m_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)


def make_optimizer(
    approx: Approximator,
    mode: str = "adam",
    lr: float = ADAM_LR,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> OptimizerState:
    if mode not in ("plain", "adam"):
        raise ValueError(f"unknown optimizer mode: {mode!r}")
    return OptimizerState(
        mode=mode,
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        m_w=[np.zeros_like(w) for w in approx.weights],
        m_b=[np.zeros_like(b) for b in approx.biases],
        v_w=[np.zeros_like(w) for w in approx.weights],
        v_b=[np.zeros_like(b) for b in approx.biases],
    )


def mlp_init(
    layer_sizes, nonlinearity: str = "rectifier", seed: int = 0
) -> Approximator:
    """Build a dense net with fan-in-scaled symmetric init and zero biases.

    Hidden layers use `nonlinearity`; the output layer is linear. Weights are
    uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)] drawn from a generator seeded
    with `seed`, so identical (layer_sizes, seed) pairs give bit-identical
    parameters regardless of the nonlinearity tag.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("layer_sizes needs at least an input and an output width")
    if any(s <= 0 for s in sizes):
        raise ValueError(f"layer_sizes must be positive, got {sizes}")
    if nonlinearity not in NONLINEARITIES:
        raise ValueError(f"unknown nonlinearity: {nonlinearity!r}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    tags = tuple(nonlinearity for _ in range(len(weights) - 1)) + ("identity",)
    return Approximator(sizes, weights, biases, tags)


def forward_batch(approx: Approximator, x: np.ndarray) -> np.ndarray:
    """Batched forward pass; caches activations and returns (B, out_dim)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != approx.in_dim:
        raise ValueError(f"expected input of width {approx.in_dim}, got shape {x.shape}")
    acts = core.dense_forward(approx.weights, approx.biases, approx.act_codes(), x)
    approx.cache = (x, acts)
    return acts[-1]


def forward(approx: Approximator, x: np.ndarray) -> np.ndarray:
    """Single-vector forward pass; caches activations and returns (out_dim,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a flat input vector, got shape {x.shape}")
    return forward_batch(approx, x[None, :])[0]


def backward_batch(approx: Approximator, grad_out: np.ndarray) -> ParamGradients:
    """Exact parameter gradients of sum_b output_b . grad_out_b.

    Requires a cached forward pass whose batch shape matches grad_out.
    """
    if approx.cache is None:
        raise RuntimeError("backward called without a cached forward pass")
    x, acts = approx.cache
    grad_out = np.ascontiguousarray(grad_out, dtype=np.float64)
    if grad_out.shape != acts[-1].shape:
        raise ValueError(
            f"output gradient shape {grad_out.shape} does not match "
            f"cached output shape {acts[-1].shape}"
        )
    d_w, d_b = core.dense_backward(
        approx.weights, approx.act_codes(), x, acts, grad_out
    )
    return ParamGradients(d_w, d_b)


def backward(approx: Approximator, grad_out: np.ndarray) -> ParamGradients:
    """Exact parameter gradients of output . grad_out for a single-vector pass."""
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.ndim != 1:
        raise ValueError(f"expected a flat output gradient, got shape {grad_out.shape}")
    return backward_batch(approx, grad_out[None, :])


def apply_update(
    approx: Approximator, grads: ParamGradients, opt: OptimizerState
) -> None:
    """One in-place optimizer step; moves parameters opposite the gradient.

    Deterministic function of (parameters, gradients, optimizer state); bumps
    opt.step by one and invalidates the forward cache.
    """
    if not grads.congruent_with(approx):
        raise ValueError("gradient shapes do not match approximator parameters")
    for g in grads.d_weights + grads.d_biases:
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient entries")
    opt.step += 1
    if opt.mode == "plain":
        core.sgd_step(approx.weights, approx.biases, grads.d_weights, grads.d_biases, opt.lr)
    elif opt.mode == "adam":
        core.adam_step(
            approx.weights,
            approx.biases,
            grads.d_weights,
            grads.d_biases,
            opt.m_w,
            opt.m_b,
            opt.v_w,
            opt.v_b,
            opt.step,
            opt.lr,
            opt.beta1,
            opt.beta2,
            opt.eps,
        )
    else:
        raise ValueError(f"unknown optimizer mode: {opt.mode!r}")
    approx.cache = None


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax of a flat logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError(f"expected a non-empty flat logit vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite logits")
    e = np.exp(z - z.max())
    return e / e.sum()


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise max-subtracted softmax of a (B, n) logit matrix."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] == 0:
        raise ValueError(f"expected a (B, n) logit matrix, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite logits")
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def finite_diff_gradient(f, approx: Approximator, h: float = 1e-5) -> ParamGradients:
    """Central-difference gradient of the scalar f(approx) over every parameter.

    Perturbs each scalar parameter by +/- h in place (restoring it after) and
    applies (f(p + h) - f(p - h)) / (2 h). Slow by construction; this is the
    oracle the analytic backward pass is checked against.
    """
    if not (1e-7 <= h <= 1e-3):
        raise ValueError(f"step size h={h} outside [1e-7, 1e-3]")

    def grad_of(param: np.ndarray) -> np.ndarray:
        g = np.zeros_like(param)
        flat_p = param.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            f_plus = f(approx)
            flat_p[i] = orig - h
            f_minus = f(approx)
            flat_p[i] = orig
            flat_g[i] = (f_plus - f_minus) / (2.0 * h)
        return g

    d_w = [grad_of(w) for w in approx.weights]
    d_b = [grad_of(b) for b in approx.biases]
    approx.cache = None
    return ParamGradients(d_w, d_b)


def relative_gradient_error(got: ParamGradients, ref: ParamGradients) -> float:
    """Max infinity-norm gap between gradients, scaled by max(1, ref magnitude).

    A per-entry quotient is meaningless where the true gradient is ~0 and the
    reference is pure roundoff, so the gap is normalized by the overall scale.
    """
    gap = 0.0
    scale = 1.0
    for g, r in zip(got.d_weights + got.d_biases, ref.d_weights + ref.d_biases):
        if g.size == 0:
            continue
        gap = max(gap, float(np.abs(g - r).max()))
        scale = max(scale, float(np.abs(r).max()))
    return gap / scale
