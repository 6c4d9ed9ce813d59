"""PReLU activation, residual addition and channel concatenation."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import PReLUParams, ShapeError, as_array


def prelu_forward(x, params: PReLUParams) -> np.ndarray:
    x = as_array(x)
    if params.slopes.shape != (x.shape[1],):
        raise ShapeError(f"PReLU has {params.slopes.shape[0]} slopes for {x.shape[1]} channels")
    a = params.slopes.reshape(1, -1, *([1] * (x.ndim - 2))).astype(x.dtype, copy=False)
    if np.all((a >= 0) & (a <= 1)):
        # for 0 <= a <= 1 the larger of x and a*x is exactly the PReLU output
        out = x * a
        np.maximum(out, x, out=out)
        return out
    # x - min(x, 0) + a * min(x, 0): exact on both sides and far cheaper than np.where
    neg = np.minimum(x, 0)
    out = x - neg
    neg *= a
    out += neg
    return out


def prelu_backward(x, params: PReLUParams, grad_out):
    """Return ``(grad_input, grad_slopes)``."""
    x = as_array(x)
    g = as_array(grad_out)
    a = params.slopes.reshape(1, -1, *([1] * (x.ndim - 2))).astype(g.dtype, copy=False)
    g_neg = g * (x <= 0)
    axes = (0,) + tuple(range(2, x.ndim))
    grad_slopes = np.sum(g_neg * x, axis=axes)
    g_neg *= a - 1
    grad_input = g + g_neg
    return grad_input, grad_slopes


def residual_add(x, fx) -> np.ndarray:
    x, fx = as_array(x), as_array(fx)
    if x.shape != fx.shape:
        raise ShapeError(f"residual branches differ in shape: {x.shape} vs {fx.shape}")
    return x + fx


def residual_add_backward(grad_out):
    """Both branches receive the incoming gradient unchanged."""
    g = as_array(grad_out)
    return g, g


def concat_channels(tensors: Sequence) -> np.ndarray:
    arrays = [as_array(t) for t in tensors]
    if not arrays:
        raise ValueError("concat_channels needs at least one input")
    ref = arrays[0].shape
    for a in arrays[1:]:
        if a.ndim != 4 or (a.shape[0], a.shape[2], a.shape[3]) != (ref[0], ref[2], ref[3]):
            raise ShapeError(f"cannot concatenate {a.shape} with {ref} along channels")
    if len(arrays) == 1:
        return arrays[0]
    return np.concatenate(arrays, axis=1)


def concat_channels_backward(grad_out, channel_counts: Sequence[int]) -> list:
    g = as_array(grad_out)
    if sum(channel_counts) != g.shape[1]:
        raise ShapeError(f"channel counts {list(channel_counts)} do not sum to {g.shape[1]}")
    bounds = np.cumsum(channel_counts)[:-1]
    return np.split(g, bounds, axis=1)
