from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..engine import DTYPE, PRELU_INIT, he_init
from .spec import NetworkSpec


@dataclass
class NetworkState:
    """Learnable parameters and batch-norm running statistics of one network.

    ``params`` and ``buffers`` are ordered by the NetworkSpec's layer order, which is
    also the order the optimizer and checkpoint files see them in.
    """

    fingerprint: str
    params: dict = field(default_factory=dict)
    buffers: dict = field(default_factory=dict)
    mode: str = "train"
    grads: dict = field(default_factory=dict)
    cache: object = None

    def train(self) -> "NetworkState":
        self.mode = "train"
        return self

    def eval(self) -> "NetworkState":
        self.mode = "eval"
        self.cache = None
        return self

    def copy(self) -> "NetworkState":
        return NetworkState(
            self.fingerprint,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.buffers.items()},
            self.mode,
        )

    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def astype(self, dtype) -> "NetworkState":
        """A copy with every array cast to ``dtype`` (used by float64 gradient checks)."""
        return NetworkState(
            self.fingerprint,
            {k: v.astype(dtype) for k, v in self.params.items()},
            {k: v.astype(dtype) for k, v in self.buffers.items()},
            self.mode,
        )


def init_state(spec: NetworkSpec, rng: np.random.Generator, dtype=DTYPE) -> NetworkState:
    """He-initialize conv/FC weights; zero biases; gamma 1, beta 0; PReLU slopes 0.25."""
    state = NetworkState(spec.fingerprint())
    for name, shape in spec.parameter_shapes().items():
        if name.endswith(".weight"):
            fan_in = int(np.prod(shape[1:]))
            state.params[name] = he_init(shape, fan_in, rng, dtype)
        elif name.endswith(".gamma"):
            state.params[name] = np.ones(shape, dtype=dtype)
        elif name.endswith(".slope"):
            state.params[name] = np.full(shape, PRELU_INIT, dtype=dtype)
        else:
            state.params[name] = np.zeros(shape, dtype=dtype)
    for name, shape in spec.buffer_shapes().items():
        fill = 1.0 if name.endswith("running_var") else 0.0
        state.buffers[name] = np.full(shape, fill, dtype=dtype)
    return state
