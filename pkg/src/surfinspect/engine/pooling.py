"""2x2 / stride-2 max pooling.

Ties go to the first maximum in row-major window order.
"""
from __future__ import annotations

import numpy as np

from .tensor import ShapeError, as_array


def _windows(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    return (
        x.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )


def maxpool2_forward(x):
    """Return ``(output, argmax)``; argmax indexes the 4 window slots row-major."""
    x = as_array(x)
    if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"maxpool2 needs even spatial dimensions, got {x.shape}")
    win = _windows(x)
    idx = np.argmax(win, axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool2_backward(grad_out, argmax: np.ndarray) -> np.ndarray:
    g = as_array(grad_out)
    n, c, ho, wo = g.shape
    win = np.zeros((n, c, ho, wo, 4), dtype=g.dtype)
    np.put_along_axis(win, argmax[..., None], g[..., None], axis=-1)
    return (
        win.reshape(n, c, ho, wo, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho * 2, wo * 2)
    )
