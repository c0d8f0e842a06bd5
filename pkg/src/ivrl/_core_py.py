"""NumPy fallback for the dense-net kernels.

Same call surface as the compiled core (ivrl._core). Everything is float64.
Weight matrices are (fan_out, fan_in); activations are batched row-wise.
Nonlinearity codes: 0 identity, 1 rectifier, 2 hyperbolic tangent.
"""

import numpy as np

IDENTITY = 0
RECTIFIER = 1
TANH = 2


def dense_forward(weights, biases, act_ids, x):
    """Run a batch through the stack; returns the list of post-activations.

    x is (B, n_in); the returned list has one (B, n_i) array per layer and
    does not include the input.
    """
    acts = []
    a = x
    for w, b, code in zip(weights, biases, act_ids):
        z = a @ w.T + b
        if code == RECTIFIER:
            z = np.maximum(z, 0.0)
        elif code == TANH:
            z = np.tanh(z)
        acts.append(z)
        a = z
    return acts


def dense_backward(weights, act_ids, x, acts, grad_out):
    """Exact gradients of sum_b out_b . grad_out_b w.r.t. weights and biases.

    acts must be the list produced by dense_forward for this x. Returns
    (d_weights, d_biases) in layer order.
    """
    n = len(weights)
    d_w = [None] * n
    d_b = [None] * n
    g = grad_out
    for i in range(n - 1, -1, -1):
        a = acts[i]
        code = act_ids[i]
        if code == RECTIFIER:
            dz = g * (a > 0.0)
        elif code == TANH:
            dz = g * (1.0 - a * a)
        else:
            dz = g
        prev = acts[i - 1] if i > 0 else x
        d_w[i] = dz.T @ prev
        d_b[i] = dz.sum(axis=0)
        if i > 0:
            g = dz @ weights[i]
    return d_w, d_b


def sgd_step(weights, biases, d_w, d_b, lr):
    """In-place plain gradient step: p -= lr * g."""
    for w, g in zip(weights, d_w):
        w -= lr * g
    for b, g in zip(biases, d_b):
        b -= lr * g


def adam_step(weights, biases, d_w, d_b, m_w, m_b, v_w, v_b, t, lr, beta1, beta2, eps):
    """In-place adaptive-moment step with bias correction; t is the 1-based step."""
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(weights, d_w, m_w, v_w):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    for p, g, m, v in zip(biases, d_b, m_b, v_b):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
