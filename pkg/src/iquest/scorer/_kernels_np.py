"""Vectorized numpy implementation of the scorer kernels.

This is the fallback backend; the compiled Cython extension implements the
same three functions with identical signatures and semantics.
"""

from __future__ import annotations

import numpy as np

LOG_CLAMP = 1e-12


def aggregate_batch(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """ReLU(X @ W.T) for rows X = [center || neighbor-mean]."""
    return np.maximum(X @ W.T, 0.0)


def mlp_batch(W1: np.ndarray, b1: np.ndarray, W2: np.ndarray, b2: np.ndarray,
              H: np.ndarray) -> np.ndarray:
    """Softmax(W2 @ ReLU(W1 @ h + b1) + b2) per row of H."""
    A = np.maximum(H @ W1.T + b1, 0.0)
    logits = A @ W2.T + b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    E = np.exp(shifted)
    return E / E.sum(axis=1, keepdims=True)


def loss_and_grads(W, W1, b1, W2, b2, CM, Q, labels):
    """Mean cross-entropy over the batch and its exact parameter gradients.

    CM is (n, 2*d_in) concatenated [center || neighbor-mean], Q is
    (n, d_in), labels is (n,) int in {0, 1}. The log is clamped at
    LOG_CLAMP; examples sitting on the clamp contribute zero gradient,
    matching the derivative of the clamped loss.
    """
    n = CM.shape[0]
    d_gnn = W.shape[0]
    rows = np.arange(n)

    Z0 = CM @ W.T
    Hhat = np.maximum(Z0, 0.0)
    H = np.concatenate([Hhat, Q], axis=1)
    Z1 = H @ W1.T + b1
    A = np.maximum(Z1, 0.0)
    logits = A @ W2.T + b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    E = np.exp(shifted)
    P = E / E.sum(axis=1, keepdims=True)

    picked = P[rows, labels]
    loss = float(-np.log(np.maximum(picked, LOG_CLAMP)).mean())

    dZ2 = P.copy()
    dZ2[rows, labels] -= 1.0
    dZ2[picked <= LOG_CLAMP] = 0.0
    dZ2 /= n

    dW2 = dZ2.T @ A
    db2 = dZ2.sum(axis=0)
    dA = dZ2 @ W2
    dZ1 = dA * (Z1 > 0.0)
    dW1 = dZ1.T @ H
    db1 = dZ1.sum(axis=0)
    dHhat = (dZ1 @ W1)[:, :d_gnn]
    dZ0 = dHhat * (Z0 > 0.0)
    dW = dZ0.T @ CM
    return loss, dW, dW1, db1, dW2, db2
