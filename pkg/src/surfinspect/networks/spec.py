"""Declarative layer graphs.

A network is one or more *lanes* that all read the input image, followed by
a *head*. Each lane is a flat list of :class:`LayerSpec`; residual spans are
delimited by ``residual_begin`` / ``residual_end`` markers. Multi-lane
networks start their head with a ``concat`` layer.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from ..engine.tensor import ALLOWED_KERNELS, output_size

KINDS = ("conv", "batchnorm", "prelu", "maxpool", "fc", "residual_begin", "residual_end", "concat")


class BuildError(ValueError):
    """A network specification is internally inconsistent."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    in_channels: int = 0
    out_channels: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BuildError(f"unknown layer kind {self.kind!r}")


def conv_block(name: str, cin: int, cout: int, kernel: int, stride: int) -> list[LayerSpec]:
    """conv -> batchnorm -> PReLU, padded so only the stride changes resolution."""
    if kernel not in ALLOWED_KERNELS:
        raise BuildError(f"kernel {kernel} not in {ALLOWED_KERNELS}")
    pad = (kernel - 1) // 2
    return [
        LayerSpec("conv", f"{name}.conv", kernel, stride, pad, cin, cout),
        LayerSpec("batchnorm", f"{name}.bn", in_channels=cout, out_channels=cout),
        LayerSpec("prelu", f"{name}.prelu", in_channels=cout, out_channels=cout),
    ]


def residual_block(name: str, channels: int) -> list[LayerSpec]:
    """A 1x1 conv block wrapped by an identity shortcut (added after the activation)."""
    return [
        LayerSpec("residual_begin", f"{name}.res", in_channels=channels, out_channels=channels),
        *conv_block(name, channels, channels, 1, 1),
        LayerSpec("residual_end", f"{name}.res", in_channels=channels, out_channels=channels),
    ]


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    lanes: tuple
    head: tuple
    class_count: int
    input_side: int
    in_channels: int = 1
    bn_momentum: float = 0.1
    bn_epsilon: float = 1e-5
    plan: dict = field(default_factory=dict, compare=False, hash=False)

    def layers(self):
        """Yield every LayerSpec, lanes first then head."""
        for lane in self.lanes:
            yield from lane
        yield from self.head

    def conv_layers(self) -> list[LayerSpec]:
        return [l for l in self.layers() if l.kind == "conv"]

    def canonical(self) -> str:
        body = {
            "name": self.name,
            "lanes": [[asdict(l) for l in lane] for lane in self.lanes],
            "head": [asdict(l) for l in self.head],
            "class_count": self.class_count,
            "input_side": self.input_side,
            "in_channels": self.in_channels,
            "bn_momentum": self.bn_momentum,
            "bn_epsilon": self.bn_epsilon,
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def parameter_shapes(self) -> dict[str, tuple]:
        """Learnable tensors in their stable enumeration order."""
        shapes: dict[str, tuple] = {}
        fc_features = _final_features(self)
        for layer in self.layers():
            if layer.kind == "conv":
                k = layer.kernel
                shapes[f"{layer.name}.weight"] = (layer.out_channels, layer.in_channels, k, k)
                shapes[f"{layer.name}.bias"] = (layer.out_channels,)
            elif layer.kind == "batchnorm":
                shapes[f"{layer.name}.gamma"] = (layer.out_channels,)
                shapes[f"{layer.name}.beta"] = (layer.out_channels,)
            elif layer.kind == "prelu":
                shapes[f"{layer.name}.slope"] = (layer.out_channels,)
            elif layer.kind == "fc":
                shapes[f"{layer.name}.weight"] = (self.class_count, fc_features)
                shapes[f"{layer.name}.bias"] = (self.class_count,)
        return shapes

    def buffer_shapes(self) -> dict[str, tuple]:
        shapes: dict[str, tuple] = {}
        for layer in self.layers():
            if layer.kind == "batchnorm":
                shapes[f"{layer.name}.running_mean"] = (layer.out_channels,)
                shapes[f"{layer.name}.running_var"] = (layer.out_channels,)
        return shapes


def _walk_lane(lane, shape, trace):
    n, c, h, w = shape
    stack = []
    for layer in lane:
        if layer.kind == "conv":
            if layer.in_channels != c:
                raise BuildError(
                    f"{layer.name}: expects {layer.in_channels} input channels, receives {c}"
                )
            h = output_size(h, layer.kernel, layer.stride, layer.padding)
            w = output_size(w, layer.kernel, layer.stride, layer.padding)
            if h < 1 or w < 1:
                raise BuildError(f"{layer.name}: spatial size collapses below 1")
            c = layer.out_channels
        elif layer.kind in ("batchnorm", "prelu"):
            if layer.out_channels != c:
                raise BuildError(f"{layer.name}: declared {layer.out_channels} channels, receives {c}")
        elif layer.kind == "maxpool":
            if h % 2 or w % 2:
                raise BuildError(f"{layer.name}: maxpool needs even spatial size, got {h}x{w}")
            h, w = h // 2, w // 2
        elif layer.kind == "residual_begin":
            stack.append((layer.name, (n, c, h, w)))
        elif layer.kind == "residual_end":
            if not stack or stack[-1][0] != layer.name:
                raise BuildError(f"{layer.name}: unbalanced residual span")
            _, saved = stack.pop()
            if saved != (n, c, h, w):
                raise BuildError(
                    f"{layer.name}: shortcut spans a shape change {saved} -> {(n, c, h, w)}"
                )
        else:
            raise BuildError(f"{layer.name}: {layer.kind} is not allowed inside a lane")
        trace.append((layer.name, layer.kind, (n, c, h, w)))
    if stack:
        raise BuildError(f"unterminated residual span {stack[-1][0]}")
    return (n, c, h, w)


def predict_shapes(spec: NetworkSpec, batch: int = 1) -> list[tuple[str, str, tuple]]:
    """Arithmetic shape walk: (layer name, kind, output shape) for every layer."""
    trace: list = []
    start = (batch, spec.in_channels, spec.input_side, spec.input_side)
    ends = [_walk_lane(lane, start, trace) for lane in spec.lanes]
    hw = {e[2:] for e in ends}
    if len(hw) != 1:
        raise BuildError(f"lanes end at different spatial sizes: {[e[2:] for e in ends]}")
    n, _, h, w = ends[0]
    c = sum(e[1] for e in ends)
    head = list(spec.head)
    if len(spec.lanes) > 1:
        if not head or head[0].kind != "concat":
            raise BuildError("multi-lane networks must start their head with concat")
        trace.append((head[0].name, "concat", (n, c, h, w)))
        head = head[1:]
    for layer in head:
        if layer.kind == "concat":
            raise BuildError("concat may only open the head of a multi-lane network")
        if layer.kind == "fc":
            trace.append((layer.name, "fc", (n, spec.class_count)))
            continue
        n, c, h, w = _walk_lane([layer], (n, c, h, w), trace)
    if not spec.head or spec.head[-1].kind != "fc":
        raise BuildError("the head must end with a fully connected layer")
    return trace


def _final_features(spec: NetworkSpec) -> int:
    trace = predict_shapes(spec, 1)
    for name, kind, shape in reversed(trace):
        if kind != "fc":
            return shape[1] * shape[2] * shape[3]
    raise BuildError("network has no feature layers")


def validate(spec: NetworkSpec) -> None:
    """Raise :class:`BuildError` unless the graph is well formed."""
    predict_shapes(spec, 1)
    for lane in list(spec.lanes) + [spec.head]:
        inside = None
        convs = 0
        for layer in lane:
            if layer.kind == "residual_begin":
                inside, convs = layer.name, 0
            elif layer.kind == "conv" and inside is not None:
                convs += 1
                if layer.kernel != 1 or layer.in_channels != layer.out_channels:
                    raise BuildError(
                        f"{layer.name}: shortcuts may only wrap channel-preserving 1x1 convs "
                        f"(got {layer.kernel}x{layer.kernel}, {layer.in_channels}->{layer.out_channels})"
                    )
            elif layer.kind == "residual_end":
                if convs != 1:
                    raise BuildError(f"{inside}: a residual span must enclose exactly one conv block")
                inside = None
    if len(spec.lanes) == 1 and any(l.kind == "concat" for l in spec.head):
        raise BuildError("concat is only meaningful for multi-lane networks")
