"""Forward and backward passes over a :class:`NetworkSpec`."""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..engine import (
    EVAL,
    TRAIN,
    BatchNormParams,
    ConvParams,
    FCParams,
    PReLUParams,
    ShapeError,
    batchnorm_backward,
    batchnorm_forward,
    concat_channels,
    concat_channels_backward,
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    maxpool2_backward,
    maxpool2_forward,
    prelu_backward,
    prelu_forward,
    residual_add,
)
from ..engine.tensor import as_array
from .spec import NetworkSpec
from .state import NetworkState


class ModeError(RuntimeError):
    pass


def _conv(layer, state) -> ConvParams:
    p = state.params
    return ConvParams(layer.in_channels, layer.out_channels, layer.kernel, layer.stride,
                      layer.padding, p[f"{layer.name}.weight"], p[f"{layer.name}.bias"])


def _bn(layer, spec, state) -> BatchNormParams:
    p, b = state.params, state.buffers
    return BatchNormParams(layer.out_channels, p[f"{layer.name}.gamma"], p[f"{layer.name}.beta"],
                           b[f"{layer.name}.running_mean"], b[f"{layer.name}.running_var"],
                           spec.bn_momentum, spec.bn_epsilon)


def _fold_bn(conv: ConvParams, bn: BatchNormParams) -> ConvParams:
    """Merge an eval-mode batch-norm into the preceding convolution."""
    scale = bn.gamma / np.sqrt(bn.running_var + bn.epsilon)
    weight = (conv.weight * scale.reshape(-1, 1, 1, 1)).astype(conv.weight.dtype, copy=False)
    bias = ((conv.bias - bn.running_mean) * scale + bn.beta).astype(conv.bias.dtype, copy=False)
    return ConvParams(conv.in_channels, conv.out_channels, conv.kernel, conv.stride,
                      conv.padding, weight, bias)


def _run_layers(layers, x, spec, state, mode, caches, trace):
    stack = []
    folded = False
    for i, layer in enumerate(layers):
        kind = layer.kind
        cache: dict = {}
        if mode == EVAL and kind == "conv" and i + 1 < len(layers) \
                and layers[i + 1].kind == "batchnorm":
            x = conv2d_forward(x, _fold_bn(_conv(layer, state), _bn(layers[i + 1], spec, state)))
            folded = True
        elif folded:
            folded = False
        elif kind == "conv":
            cache["x"] = x
            x = conv2d_forward(x, _conv(layer, state), cache if mode == TRAIN else None)
        elif kind == "batchnorm":
            x = batchnorm_forward(x, _bn(layer, spec, state), mode, cache if mode == TRAIN else None)
        elif kind == "prelu":
            cache["x"] = x
            x = prelu_forward(x, PReLUParams(state.params[f"{layer.name}.slope"]))
        elif kind == "maxpool":
            x, cache["argmax"] = maxpool2_forward(x)
        elif kind == "residual_begin":
            stack.append(x)
        elif kind == "residual_end":
            x = residual_add(stack.pop(), x)
        elif kind == "fc":
            cache["x"] = x
            w = state.params[f"{layer.name}.weight"]
            x = fc_forward(x, FCParams(w, state.params[f"{layer.name}.bias"]))
        else:
            raise ShapeError(f"{layer.name}: unexpected {kind} layer")
        if mode == TRAIN:
            caches.append(cache)
        if trace is not None:
            trace.append((layer.name, kind, tuple(x.shape)))
    return x


def _back_layers(layers, g, spec, state, caches, grads, need_input_grad=True):
    skips = []
    for idx in range(len(layers) - 1, -1, -1):
        layer = layers[idx]
        cache = caches[idx]
        kind = layer.kind
        if kind == "conv":
            first = idx == 0 and not need_input_grad
            g, gw, gb = conv2d_backward(cache["x"], _conv(layer, state), g, cache,
                                        need_input_grad=not first)
            grads[f"{layer.name}.weight"] = gw
            grads[f"{layer.name}.bias"] = gb
        elif kind == "batchnorm":
            g, gg, gb = batchnorm_backward(g, _bn(layer, spec, state), cache)
            grads[f"{layer.name}.gamma"] = gg
            grads[f"{layer.name}.beta"] = gb
        elif kind == "prelu":
            g, gs = prelu_backward(cache["x"], PReLUParams(state.params[f"{layer.name}.slope"]), g)
            grads[f"{layer.name}.slope"] = gs
        elif kind == "maxpool":
            g = maxpool2_backward(g, cache["argmax"])
        elif kind == "residual_end":
            skips.append(g)
        elif kind == "residual_begin":
            g = g + skips.pop()
        elif kind == "fc":
            w = state.params[f"{layer.name}.weight"]
            g, gw, gb = fc_backward(cache["x"], FCParams(w, state.params[f"{layer.name}.bias"]), g)
            grads[f"{layer.name}.weight"] = gw
            grads[f"{layer.name}.bias"] = gb
    return g


def forward(spec: NetworkSpec, state: NetworkState, batch, mode: Optional[str] = None,
            trace: Optional[list] = None) -> np.ndarray:
    """Logits of shape (N, class_count) for a (N, C, H, W) batch.

    ``mode`` defaults to ``state.mode``. In train mode the activations needed
    by :func:`backward` are kept on ``state.cache`` and batch-norm running
    statistics are updated.
    """
    x = as_array(batch)
    mode = state.mode if mode is None else mode
    if mode not in (TRAIN, EVAL):
        raise ModeError(f"unknown mode {mode!r}")
    if x.ndim != 4 or x.shape[1:] != (spec.in_channels, spec.input_side, spec.input_side):
        raise ShapeError(
            f"{spec.name} expects input (N, {spec.in_channels}, {spec.input_side}, "
            f"{spec.input_side}), got {x.shape}"
        )
    lane_caches = [[] for _ in spec.lanes]
    outs = [_run_layers(lane, x, spec, state, mode, lc, trace)
            for lane, lc in zip(spec.lanes, lane_caches)]
    head_caches: list = []
    head = list(spec.head)
    if head and head[0].kind == "concat":
        y = concat_channels(outs)
        if trace is not None:
            trace.append((head[0].name, "concat", tuple(y.shape)))
        head = head[1:]
    else:
        y = outs[0]
    logits = _run_layers(head, y, spec, state, mode, head_caches, trace)
    if mode == TRAIN:
        state.cache = {
            "lanes": lane_caches,
            "head": head_caches,
            "lane_channels": [o.shape[1] for o in outs],
            "batch": x.shape[0],
        }
    else:
        state.cache = None
    return logits


def backward(spec: NetworkSpec, state: NetworkState, grad_logits) -> dict:
    """Gradients of every learnable parameter given dLoss/dlogits.

    Consumes the activations cached by the preceding train-mode forward.
    """
    if state.cache is None:
        raise ModeError("backward needs a preceding train-mode forward on this state")
    g = np.asarray(grad_logits)
    cache = state.cache
    if g.shape != (cache["batch"], spec.class_count):
        raise ShapeError(f"grad_logits shape {g.shape} != {(cache['batch'], spec.class_count)}")
    grads: dict = {}
    head = list(spec.head)
    multi = bool(head) and head[0].kind == "concat"
    if multi:
        head = head[1:]
    g = _back_layers(head, g, spec, state, cache["head"], grads)
    lane_grads = concat_channels_backward(g, cache["lane_channels"]) if multi else [g]
    for lane, lc, lg in zip(spec.lanes, cache["lanes"], lane_grads):
        _back_layers(list(lane), lg, spec, state, lc, grads, need_input_grad=False)
    ordered = {name: grads[name] for name in state.params}
    state.grads = ordered
    return ordered


def predict(spec: NetworkSpec, state: NetworkState, batch) -> np.ndarray:
    """Eval-mode argmax class indices; ties go to the lower index."""
    logits = forward(spec, state, batch, mode=EVAL)
    return np.argmax(logits, axis=1)
