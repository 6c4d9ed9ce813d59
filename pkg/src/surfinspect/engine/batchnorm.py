"""Per-channel batch normalization over (N, H, W)."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .tensor import BatchNormParams, ShapeError, as_array

TRAIN = "train"
EVAL = "eval"


def _bcast(v: np.ndarray) -> np.ndarray:
    return v.reshape(1, -1, 1, 1)


def batchnorm_forward(x, params: BatchNormParams, mode: str = TRAIN,
                      cache: Optional[dict] = None) -> np.ndarray:
    """Normalize ``x`` per channel.

    Train mode standardizes with batch statistics and folds them into the
    running estimates (unbiased variance). Eval mode is a fixed affine map
    built from the running estimates.
    """
    x = as_array(x)
    if x.ndim != 4 or x.shape[1] != params.channels:
        raise ShapeError(f"batch-norm input {x.shape} does not have {params.channels} channels")
    m = x.shape[0] * x.shape[2] * x.shape[3]
    if mode == TRAIN:
        if m < 2:
            raise ValueError(
                f"batch-norm in train mode needs N*H*W >= 2 to define a variance, got {m}"
            )
        mean = x.mean(axis=(0, 2, 3))
        centered = x - _bcast(mean)
        var = np.mean(np.square(centered), axis=(0, 2, 3))
        inv_std = 1.0 / np.sqrt(var + params.epsilon)
        xhat = centered
        xhat *= _bcast(inv_std.astype(x.dtype, copy=False))
        out = xhat * _bcast(params.gamma)
        out += _bcast(params.beta)
        mom = params.momentum
        params.running_mean[:] = (1 - mom) * params.running_mean + mom * mean
        params.running_var[:] = (1 - mom) * params.running_var + mom * var * (m / (m - 1))
        if cache is not None:
            cache["xhat"] = xhat
            cache["inv_std"] = inv_std
            cache["mode"] = TRAIN
        return out
    if mode == EVAL:
        inv_std = 1.0 / np.sqrt(params.running_var + params.epsilon)
        scale = (params.gamma * inv_std).astype(x.dtype, copy=False)
        shift = (params.beta - params.running_mean * scale).astype(x.dtype, copy=False)
        out = x * _bcast(scale)
        out += _bcast(shift)
        if cache is not None:
            cache["x"] = x
            cache["inv_std"] = inv_std
            cache["mode"] = EVAL
        return out
    raise ValueError(f"unknown batch-norm mode {mode!r}")


def batchnorm_backward(grad_out, params: BatchNormParams, cache: dict):
    """Return ``(grad_input, grad_gamma, grad_beta)``."""
    if grad_out is None:
        raise ValueError("batchnorm_backward requires a grad_out buffer")
    g = as_array(grad_out)
    inv_std = cache["inv_std"]
    grad_beta = g.sum(axis=(0, 2, 3))
    if cache["mode"] == EVAL:
        xhat = (cache["x"] - _bcast(params.running_mean)) * _bcast(inv_std)
        grad_gamma = np.sum(g * xhat, axis=(0, 2, 3))
        grad_input = g * _bcast((params.gamma * inv_std).astype(g.dtype, copy=False))
        return grad_input, grad_gamma, grad_beta
    xhat = cache["xhat"]
    m = g.shape[0] * g.shape[2] * g.shape[3]
    grad_gamma = np.sum(g * xhat, axis=(0, 2, 3))
    # dx = gamma * inv_std / m * (m*g - sum(g) - xhat * sum(g*xhat))
    grad_input = xhat * _bcast(grad_gamma / m)
    grad_input += _bcast(grad_beta / m)
    np.subtract(g, grad_input, out=grad_input)
    grad_input *= _bcast((params.gamma * inv_std).astype(g.dtype, copy=False))
    return grad_input, grad_gamma, grad_beta
