from __future__ import annotations

import numpy as np

from .tensor import FCParams, ShapeError, as_array


def fc_forward(x, params: FCParams) -> np.ndarray:
    """Flatten ``x`` to (N, features) and apply ``x @ W.T + b``."""
    x = as_array(x)
    flat = x.reshape(x.shape[0], -1)
    if flat.shape[1] != params.weight.shape[1]:
        raise ShapeError(
            f"fc expects {params.weight.shape[1]} features, input {x.shape} flattens to {flat.shape[1]}"
        )
    return flat @ params.weight.T + params.bias


def fc_backward(x, params: FCParams, grad_out):
    """Return ``(grad_input, grad_weight, grad_bias)``; grad_input has ``x``'s shape."""
    x = as_array(x)
    g = as_array(grad_out)
    flat = x.reshape(x.shape[0], -1)
    grad_weight = g.T @ flat
    grad_bias = g.sum(axis=0)
    grad_input = (g @ params.weight).reshape(x.shape)
    return grad_input, grad_weight, grad_bias
