# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Fused mini-batch training step, compiled.

Same contract as ``kernels.numpy_kernel.train_batch``.  Matrix products
go through BLAS dgemm; the element-wise work (bias, relu, dropout masks,
moment updates) runs in plain C loops, so one batch step costs a single
Python call.  The win over the NumPy kernel is per-call overhead, which
dominates at the desk-scale layer widths used by the imputation loop
(see benchmarks/bench_kernels.py).
"""

import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemm

NAME = "cython"


cdef void _forward_gemm(double[:, ::1] a, double[:, ::1] w, double[:, ::1] out) noexcept nogil:
    # out(B,O) = a(B,I) @ w(O,I)^T
    cdef char tA = b'T', tB = b'N'
    cdef int B = a.shape[0], I = a.shape[1], O = w.shape[0]
    cdef double one = 1.0, zero = 0.0
    dgemm(&tA, &tB, &O, &B, &I, &one, &w[0, 0], &I, &a[0, 0], &I, &zero, &out[0, 0], &O)


cdef void _gradw_gemm(double[:, ::1] g, double[:, ::1] a, double[:, ::1] out) noexcept nogil:
    # out(O,I) = g(B,O)^T @ a(B,I)
    cdef char tA = b'N', tB = b'T'
    cdef int B = g.shape[0], O = g.shape[1], I = a.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm(&tA, &tB, &I, &O, &B, &one, &a[0, 0], &I, &g[0, 0], &O, &zero, &out[0, 0], &I)


cdef void _gradin_gemm(double[:, ::1] g, double[:, ::1] w, double[:, ::1] out) noexcept nogil:
    # out(B,I) = g(B,O) @ w(O,I)
    cdef char tA = b'N', tB = b'N'
    cdef int B = g.shape[0], O = g.shape[1], I = w.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm(&tA, &tB, &I, &B, &O, &one, &w[0, 0], &I, &g[0, 0], &O, &zero, &out[0, 0], &I)


cdef void _adam_update(double[::1] theta, double[::1] g, double[::1] m, double[::1] v,
                       double lr, double beta1, double beta2, double epsilon,
                       double bc1, double bc2) noexcept nogil:
    cdef Py_ssize_t i, n = theta.shape[0]
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        theta[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + epsilon)


cdef void _sgd_update(double[::1] theta, double[::1] g, double lr) noexcept nogil:
    cdef Py_ssize_t i, n = theta.shape[0]
    for i in range(n):
        theta[i] -= lr * g[i]


def train_batch(list weights, list biases, list m_w, list v_w, list m_b, list v_b,
                double[:, ::1] x, double[::1] y, masks, int step,
                double lr, double beta1, double beta2, double epsilon,
                bint use_adam):
    """See ``kernels.numpy_kernel.train_batch`` for the contract."""
    cdef int n_layers = len(weights)
    cdef int n_hidden = n_layers - 1
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t l, i, j, width
    cdef bint dropout = masks is not None

    acts = [None] * n_layers          # inputs to each layer
    zs = [None] * n_hidden            # pre-activations of hidden layers
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers

    cdef double[:, ::1] a = x
    cdef double[:, ::1] z, mask_l, w_l, ga, ga_next, gw
    cdef double[::1] b_l, gb
    cdef double loss = 0.0, err, gval

    acts[0] = np.asarray(x)
    for l in range(n_hidden):
        w_l = weights[l]
        b_l = biases[l]
        width = w_l.shape[0]
        z_arr = np.empty((batch, width))
        z = z_arr
        _forward_gemm(a, w_l, z)
        a_arr = np.empty((batch, width))
        a = a_arr
        if dropout:
            mask_l = masks[l]
            for i in range(batch):
                for j in range(width):
                    z[i, j] += b_l[j]
                    a[i, j] = (z[i, j] * mask_l[i, j]) if z[i, j] > 0.0 else 0.0
        else:
            for i in range(batch):
                for j in range(width):
                    z[i, j] += b_l[j]
                    a[i, j] = z[i, j] if z[i, j] > 0.0 else 0.0
        zs[l] = z_arr
        acts[l + 1] = a_arr

    # Output layer: single linear neuron.  Reuse the gemm then fold the
    # bias, the loss and dC/dpred = 2 (pred - y) / B into one pass.
    w_l = weights[n_layers - 1]
    b_l = biases[n_layers - 1]
    pred_arr = np.empty((batch, 1))
    cdef double[:, ::1] pred = pred_arr
    _forward_gemm(a, w_l, pred)
    g_arr = np.empty((batch, 1))
    cdef double[:, ::1] g = g_arr
    for i in range(batch):
        err = pred[i, 0] + b_l[0] - y[i]
        loss += err * err
        g[i, 0] = 2.0 * err / batch
    loss /= batch

    gw_arr = np.empty((1, a.shape[1]))
    gw = gw_arr
    _gradw_gemm(g, a, gw)
    grads_w[n_layers - 1] = gw_arr
    gb_arr = np.empty(1)
    gb = gb_arr
    gval = 0.0
    for i in range(batch):
        gval += g[i, 0]
    gb[0] = gval
    grads_b[n_layers - 1] = gb_arr

    ga_arr = np.empty((batch, w_l.shape[1]))
    ga = ga_arr
    _gradin_gemm(g, w_l, ga)

    for l in range(n_hidden - 1, -1, -1):
        z = zs[l]
        width = z.shape[1]
        if dropout:
            mask_l = masks[l]
            for i in range(batch):
                for j in range(width):
                    ga[i, j] = (ga[i, j] * mask_l[i, j]) if z[i, j] > 0.0 else 0.0
        else:
            for i in range(batch):
                for j in range(width):
                    if z[i, j] <= 0.0:
                        ga[i, j] = 0.0
        a_prev = acts[l]
        gw_arr = np.empty((width, a_prev.shape[1]))
        gw = gw_arr
        _gradw_gemm(ga, a_prev, gw)
        grads_w[l] = gw_arr
        gb_arr = np.empty(width)
        gb = gb_arr
        for j in range(width):
            gval = 0.0
            for i in range(batch):
                gval += ga[i, j]
            gb[j] = gval
        grads_b[l] = gb_arr
        if l > 0:
            w_l = weights[l]
            ga_next_arr = np.empty((batch, w_l.shape[1]))
            ga_next = ga_next_arr
            _gradin_gemm(ga, w_l, ga_next)
            ga = ga_next

    cdef double bc1 = 1.0 - beta1 ** step
    cdef double bc2 = 1.0 - beta2 ** step
    for l in range(n_layers):
        if use_adam:
            _adam_update(np.ravel(weights[l]), np.ravel(grads_w[l]),
                         np.ravel(m_w[l]), np.ravel(v_w[l]),
                         lr, beta1, beta2, epsilon, bc1, bc2)
            _adam_update(biases[l], grads_b[l], m_b[l], v_b[l],
                         lr, beta1, beta2, epsilon, bc1, bc2)
        else:
            _sgd_update(np.ravel(weights[l]), np.ravel(grads_w[l]), lr)
            _sgd_update(biases[l], grads_b[l], lr)

    return loss
