from __future__ import annotations

import math

import numpy as np

from .tensor import DTYPE

PRELU_INIT = 0.25


def he_std(fan_in: int) -> float:
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    return math.sqrt(2.0 / fan_in)


def he_init(shape, fan_in: int, rng: np.random.Generator, dtype=DTYPE) -> np.ndarray:
    """Zero-mean normal draws with standard deviation sqrt(2 / fan_in)."""
    std = he_std(fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)
