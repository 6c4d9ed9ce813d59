"""Square-kernel 2-D cross-correlation, forward and backward.

The general path unfolds input windows into a column matrix (im2col) and
runs one batched matrix multiply per call. 1x1 kernels skip the unfolding
since they are a per-pixel linear map.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ConvParams, ShapeError, as_array


def _check_input(x: np.ndarray, params: ConvParams) -> tuple[int, int]:
    if x.ndim != 4 or x.shape[1] != params.in_channels:
        raise ShapeError(
            f"conv input shape {x.shape} incompatible with weight shape {params.weight.shape}"
        )
    ho, wo = params.out_hw(x.shape[2], x.shape[3])
    if ho < 1 or wo < 1:
        raise ShapeError(
            f"conv input shape {x.shape} too small for weight shape {params.weight.shape} "
            f"(stride {params.stride}, padding {params.padding})"
        )
    return ho, wo


def _pad(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def im2col(x: np.ndarray, k: int, s: int, p: int, ho: int, wo: int) -> np.ndarray:
    """Unfold ``x`` into columns of shape (N, C*k*k, ho*wo)."""
    n, c = x.shape[:2]
    xp = _pad(x, p)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, : s * (ho - 1) + 1 : s, : s * (wo - 1) + 1 : s]
    # (N, C, ho, wo, k, k) -> (N, C, k, k, ho, wo)
    return np.ascontiguousarray(win.transpose(0, 1, 4, 5, 2, 3)).reshape(n, c * k * k, ho * wo)


def col2im(cols: np.ndarray, x_shape, k: int, s: int, p: int, ho: int, wo: int) -> np.ndarray:
    """Scatter-add columns of shape (N, C*k*k, ho*wo) back into an input-shaped array."""
    n, c, h, w = x_shape
    cols = cols.reshape(n, c, k, k, ho, wo)
    dxp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + s * (ho - 1) + 1 : s, j : j + s * (wo - 1) + 1 : s] += cols[:, :, i, j]
    if p:
        return dxp[:, :, p:-p, p:-p]
    return dxp


def conv2d_forward(x, params: ConvParams, cache: Optional[dict] = None) -> np.ndarray:
    """Cross-correlate ``x`` (N, C, H, W) with ``params.weight`` and add the bias.

    When ``cache`` is a dict, the unfolded columns needed by
    :func:`conv2d_backward` are stored in it.
    """
    x = as_array(x)
    ho, wo = _check_input(x, params)
    n = x.shape[0]
    k, s, p = params.kernel, params.stride, params.padding
    w2 = params.weight.reshape(params.out_channels, -1)
    if k == 1:
        cols = x.reshape(n, params.in_channels, -1)
    else:
        cols = im2col(x, k, s, p, ho, wo)
    out = np.matmul(w2, cols)
    out += params.bias.reshape(1, -1, 1)
    if cache is not None:
        cache["cols"] = cols
        cache["x_shape"] = x.shape
    return out.reshape(n, params.out_channels, ho, wo)


def conv2d_backward(x, params: ConvParams, grad_out, cache: Optional[dict] = None,
                    need_input_grad: bool = True):
    """Return ``(grad_input, grad_weight, grad_bias)`` for the sum-loss seeded by ``grad_out``.

    ``grad_input`` is None when ``need_input_grad`` is False (first layer).
    """
    if grad_out is None:
        raise ValueError("conv2d_backward requires a grad_out buffer")
    grad_out = as_array(grad_out)
    if cache and "cols" in cache:
        cols = cache["cols"]
        x_shape = cache["x_shape"]
    else:
        x = as_array(x)
        x_shape = x.shape
        ho, wo = _check_input(x, params)
        if params.kernel == 1:
            cols = x.reshape(x.shape[0], params.in_channels, -1)
        else:
            cols = im2col(x, params.kernel, params.stride, params.padding, ho, wo)
    n = x_shape[0]
    ho, wo = params.out_hw(x_shape[2], x_shape[3])
    expected = (n, params.out_channels, ho, wo)
    if grad_out.shape != expected:
        raise ShapeError(f"grad_out shape {grad_out.shape} != conv output shape {expected}")

    g3 = grad_out.reshape(n, params.out_channels, ho * wo)
    grad_bias = g3.sum(axis=(0, 2))
    grad_w2 = np.matmul(g3, cols.transpose(0, 2, 1)).sum(axis=0)
    grad_weight = grad_w2.reshape(params.weight.shape)

    grad_input = None
    if need_input_grad:
        w2 = params.weight.reshape(params.out_channels, -1)
        dcols = np.matmul(w2.T, g3)
        if params.kernel == 1:
            grad_input = dcols.reshape(x_shape)
        else:
            grad_input = col2im(dcols, x_shape, params.kernel, params.stride, params.padding, ho, wo)
    return grad_input, grad_weight, grad_bias
