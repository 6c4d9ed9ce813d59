"""Dense NCHW tensors and the parameter records consumed by the layer kernels."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DTYPE = np.float32

ALLOWED_KERNELS = (1, 3, 5)


class ShapeError(ValueError):
    """Raised when tensor shapes do not line up for an operation."""


@dataclass
class Tensor:
    """A 4-D (N, C, H, W) array with an optional same-shape gradient buffer."""

    data: np.ndarray
    grad: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 4:
            raise ShapeError(f"Tensor must be 4-D (N, C, H, W), got shape {data.shape}")
        if min(data.shape) < 1:
            raise ShapeError(f"all tensor dimensions must be >= 1, got {data.shape}")
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(DTYPE)
        self.data = np.ascontiguousarray(data)
        if self.grad is not None:
            self.grad = np.ascontiguousarray(self.grad, dtype=self.data.dtype)
            if self.grad.shape != self.data.shape:
                raise ShapeError(
                    f"grad shape {self.grad.shape} differs from data shape {self.data.shape}"
                )

    @classmethod
    def zeros(cls, shape, dtype=DTYPE) -> "Tensor":
        return cls(np.zeros(shape, dtype=dtype))

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_array(x) -> np.ndarray:
    """Accept either a Tensor or a raw ndarray and return the ndarray."""
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x)


def output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


@dataclass
class ConvParams:
    """Square-kernel 2-D convolution parameters.

    ``weight`` has shape (out_channels, in_channels, k, k) and ``bias`` is a
    vector of length ``out_channels``.
    """

    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0
    weight: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kernel not in ALLOWED_KERNELS:
            raise ValueError(f"kernel size must be one of {ALLOWED_KERNELS}, got {self.kernel}")
        if self.kernel == 1 and (self.padding != 0 or self.stride != 1):
            raise ValueError("1x1 convolutions take no padding and stride 1")
        if self.stride < 1 or self.padding < 0:
            raise ValueError(f"invalid stride/padding {self.stride}/{self.padding}")
        wshape = (self.out_channels, self.in_channels, self.kernel, self.kernel)
        if self.weight is None:
            self.weight = np.zeros(wshape, dtype=DTYPE)
        if self.bias is None:
            self.bias = np.zeros(self.out_channels, dtype=self.weight.dtype)
        if self.weight.shape != wshape:
            raise ShapeError(f"conv weight shape {self.weight.shape} != expected {wshape}")
        if self.bias.shape != (self.out_channels,):
            raise ShapeError(f"conv bias shape {self.bias.shape} != ({self.out_channels},)")

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        return (
            output_size(h, self.kernel, self.stride, self.padding),
            output_size(w, self.kernel, self.stride, self.padding),
        )


@dataclass
class BatchNormParams:
    channels: int
    gamma: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    running_mean: Optional[np.ndarray] = None
    running_var: Optional[np.ndarray] = None
    momentum: float = 0.1
    epsilon: float = 1e-5

    def __post_init__(self):
        c = self.channels
        if self.gamma is None:
            self.gamma = np.ones(c, dtype=DTYPE)
        if self.beta is None:
            self.beta = np.zeros(c, dtype=self.gamma.dtype)
        if self.running_mean is None:
            self.running_mean = np.zeros(c, dtype=self.gamma.dtype)
        if self.running_var is None:
            self.running_var = np.ones(c, dtype=self.gamma.dtype)
        for name in ("gamma", "beta", "running_mean", "running_var"):
            if getattr(self, name).shape != (c,):
                raise ShapeError(f"batch-norm {name} must have shape ({c},)")
        if self.epsilon <= 0:
            raise ValueError("batch-norm epsilon must be positive")
        if np.any(self.running_var < 0):
            raise ValueError("batch-norm running_var must be non-negative")


@dataclass
class PReLUParams:
    slopes: np.ndarray = field(default_factory=lambda: np.full(1, 0.25, dtype=DTYPE))

    @classmethod
    def for_channels(cls, channels: int, init: float = 0.25, dtype=DTYPE) -> "PReLUParams":
        return cls(np.full(channels, init, dtype=dtype))


@dataclass
class FCParams:
    """Fully connected head: ``weight`` is (classes, features)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"fc weight {self.weight.shape} and bias {self.bias.shape} are inconsistent"
            )
