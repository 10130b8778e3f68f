"""Pure-NumPy mini-batch training step.

Reference implementation of the kernel contract; the compiled Cython
kernel in ``_fastnet`` computes the same quantities and must agree with
this one to floating-point reordering accuracy.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def train_batch(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    m_w: list[np.ndarray],
    v_w: list[np.ndarray],
    m_b: list[np.ndarray],
    v_b: list[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    masks: list[np.ndarray] | None,
    step: int,
    lr: float,
    beta1: float,
    beta2: float,
    epsilon: float,
    use_adam: bool,
) -> float:
    """One fused forward/backward/update pass over a mini-batch.

    ``weights[l]`` has shape (out_l, in_l); the last layer is the linear
    single-neuron output.  ``masks`` holds one pre-scaled dropout keep
    mask of shape (batch, width) per hidden layer, or None for no
    dropout.  ``step`` is the 1-based Adam step counter.  Parameters and
    moment buffers are updated in place; returns the batch mean squared
    error at the pre-update parameters.
    """
    batch = x.shape[0]
    n_hidden = len(weights) - 1

    acts = [x]
    zs = []
    a = x
    for l in range(n_hidden):
        z = a @ weights[l].T + biases[l]
        a = np.maximum(z, 0.0)
        if masks is not None:
            a = a * masks[l]
        zs.append(z)
        acts.append(a)
    pred = (a @ weights[-1].T + biases[-1])[:, 0]
    err = pred - y
    loss = float(np.mean(err * err))

    # Batch-mean gradients of the unhalved MSE: dC/dpred = 2 (pred - y) / B.
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    g = (2.0 / batch) * err[:, None]
    grads_w[-1] = g.T @ acts[-1]
    grads_b[-1] = g.sum(axis=0)
    ga = g @ weights[-1]
    for l in range(n_hidden - 1, -1, -1):
        if masks is not None:
            ga = ga * masks[l]
        ga = ga * (zs[l] > 0)
        grads_w[l] = ga.T @ acts[l]
        grads_b[l] = ga.sum(axis=0)
        if l > 0:
            ga = ga @ weights[l]

    if use_adam:
        bc1 = 1.0 - beta1**step
        bc2 = 1.0 - beta2**step
        for l in range(len(weights)):
            for theta, g_, m, v in (
                (weights[l], grads_w[l], m_w[l], v_w[l]),
                (biases[l], grads_b[l], m_b[l], v_b[l]),
            ):
                m *= beta1
                m += (1.0 - beta1) * g_
                v *= beta2
                v += (1.0 - beta2) * g_ * g_
                theta -= lr * (m / bc1) / (np.sqrt(v / bc2) + epsilon)
    else:
        for l in range(len(weights)):
            weights[l] -= lr * grads_w[l]
            biases[l] -= lr * grads_b[l]

    return loss
