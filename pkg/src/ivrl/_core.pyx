# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense-net kernels.

Mirrors ivrl._core_py: dense_forward, dense_backward, sgd_step, adam_step.
Hand-rolled loops beat BLAS dispatch at the small matrix sizes these agents
use; results differ from the fallback only by summation order.
"""

from libc.math cimport sqrt, tanh

import numpy as np

cimport numpy as cnp

cnp.import_array()

IDENTITY = 0
RECTIFIER = 1
TANH = 2


def dense_forward(list weights, list biases, act_ids, double[:, ::1] x):
    cdef list acts = []
    cdef double[:, ::1] a = x
    cdef double[:, ::1] w
    cdef double[::1] b
    cdef double[:, ::1] z
    cdef cnp.ndarray z_arr
    cdef Py_ssize_t li, i, j, k, n_batch, n_in, n_out
    cdef int code
    cdef double s
    for li in range(len(weights)):
        w = weights[li]
        b = biases[li]
        code = act_ids[li]
        n_batch = a.shape[0]
        n_in = a.shape[1]
        n_out = w.shape[0]
        z_arr = np.empty((n_batch, n_out))
        z = z_arr
        for i in range(n_batch):
            for j in range(n_out):
                s = b[j]
                for k in range(n_in):
                    s += a[i, k] * w[j, k]
                if code == 1:
                    if s < 0.0:
                        s = 0.0
                elif code == 2:
                    s = tanh(s)
                z[i, j] = s
        acts.append(z_arr)
        a = z
    return acts


def dense_backward(list weights, act_ids, double[:, ::1] x, list acts,
                   double[:, ::1] grad_out):
    cdef Py_ssize_t n_layers = len(weights)
    cdef list d_w = [None] * n_layers
    cdef list d_b = [None] * n_layers
    cdef double[:, ::1] g = grad_out
    cdef double[:, ::1] a, prev, w, dz, dw, g_prev
    cdef double[::1] db
    cdef cnp.ndarray dz_arr, dw_arr, db_arr, g_arr
    cdef Py_ssize_t li, i, j, k, n_batch, n_in, n_out
    cdef int code
    cdef double s, d
    for li in range(n_layers - 1, -1, -1):
        a = acts[li]
        w = weights[li]
        code = act_ids[li]
        n_batch = a.shape[0]
        n_out = a.shape[1]
        n_in = w.shape[1]
        dz_arr = np.empty((n_batch, n_out))
        dz = dz_arr
        for i in range(n_batch):
            for j in range(n_out):
                d = g[i, j]
                if code == 1:
                    if a[i, j] <= 0.0:
                        d = 0.0
                elif code == 2:
                    d = d * (1.0 - a[i, j] * a[i, j])
                dz[i, j] = d
        prev = acts[li - 1] if li > 0 else x
        dw_arr = np.empty((n_out, n_in))
        dw = dw_arr
        for j in range(n_out):
            for k in range(n_in):
                s = 0.0
                for i in range(n_batch):
                    s += dz[i, j] * prev[i, k]
                dw[j, k] = s
        db_arr = np.empty(n_out)
        db = db_arr
        for j in range(n_out):
            s = 0.0
            for i in range(n_batch):
                s += dz[i, j]
            db[j] = s
        d_w[li] = dw_arr
        d_b[li] = db_arr
        if li > 0:
            g_arr = np.empty((n_batch, n_in))
            g_prev = g_arr
            for i in range(n_batch):
                for k in range(n_in):
                    s = 0.0
                    for j in range(n_out):
                        s += dz[i, j] * w[j, k]
                    g_prev[i, k] = s
            g = g_prev
    return d_w, d_b


cdef void _sgd_one(double[::1] p, double[::1] g, double lr) noexcept:
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        p[i] -= lr * g[i]


def sgd_step(list weights, list biases, list d_w, list d_b, double lr):
    cdef Py_ssize_t li
    for li in range(len(weights)):
        _sgd_one(weights[li].ravel(), d_w[li].ravel(), lr)
    for li in range(len(biases)):
        _sgd_one(biases[li].ravel(), d_b[li].ravel(), lr)


cdef void _adam_one(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                    double c1, double c2, double lr, double beta1, double beta2,
                    double eps) noexcept:
    cdef Py_ssize_t i
    cdef double mi, vi
    for i in range(p.shape[0]):
        mi = m[i] * beta1 + (1.0 - beta1) * g[i]
        vi = v[i] * beta2 + (1.0 - beta2) * (g[i] * g[i])
        m[i] = mi
        v[i] = vi
        p[i] -= lr * (mi / c1) / (sqrt(vi / c2) + eps)


def adam_step(list weights, list biases, list d_w, list d_b, list m_w, list m_b,
              list v_w, list v_b, long t, double lr, double beta1, double beta2,
              double eps):
    cdef double c1 = 1.0 - beta1**t
    cdef double c2 = 1.0 - beta2**t
    cdef Py_ssize_t li
    for li in range(len(weights)):
        _adam_one(weights[li].ravel(), d_w[li].ravel(), m_w[li].ravel(),
                  v_w[li].ravel(), c1, c2, lr, beta1, beta2, eps)
    for li in range(len(biases)):
        _adam_one(biases[li].ravel(), d_b[li].ravel(), m_b[li].ravel(),
                  v_b[li].ravel(), c1, c2, lr, beta1, beta2, eps)
