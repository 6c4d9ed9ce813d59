from __future__ import annotations

import numpy as np


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def logsoftmax_nll(logits, targets):
    """Mean negative log-likelihood of ``targets`` under softmax(``logits``).

    Returns ``(loss, grad_logits)`` where the gradient is ``softmax - onehot``
    averaged over the batch. A 1-D ``logits`` is treated as a batch of one.
    """
    logits = np.asarray(logits)
    squeeze = logits.ndim == 1
    if squeeze:
        logits = logits[None, :]
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    n, k = logits.shape
    if targets.shape != (n,):
        raise ValueError(f"expected {n} targets, got shape {targets.shape}")
    if targets.min() < 0 or targets.max() >= k:
        raise ValueError(f"targets must lie in [0, {k}), got {targets.tolist()}")
    logp = log_softmax(logits)
    rows = np.arange(n)
    loss = float(-logp[rows, targets].mean())
    grad = np.exp(logp)
    grad[rows, targets] -= 1.0
    grad /= n
    if squeeze:
        grad = grad[0]
    return loss, grad
