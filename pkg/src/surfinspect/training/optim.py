"""Training hyperparameters, the step learning-rate schedule and RMSProp."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 10
    base_lr: float = 1e-4
    lr_step_epochs: int = 3
    lr_multiplier: float = 0.8
    weight_decay: float = 0.1
    max_epochs: int = 30
    seed: int = 0
    rmsprop_alpha: float = 0.99
    rmsprop_eps: float = 1e-8
    scale_range: Optional[tuple] = None
    eval_batch_size: int = 50

    def __post_init__(self):
        if self.base_lr <= 0 or self.rmsprop_eps <= 0:
            raise ValueError("learning rate and eps must be positive")
        if not 0 < self.lr_multiplier <= 1:
            raise ValueError("lr_multiplier must lie in (0, 1]")
        if self.lr_step_epochs < 1:
            raise ValueError("lr_step_epochs must be at least 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2 for batch normalization")
        if not 1 <= self.max_epochs <= 100:
            raise ValueError("max_epochs must lie in [1, 100]")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if not 0 <= self.rmsprop_alpha < 1:
            raise ValueError("rmsprop_alpha must lie in [0, 1)")

    def as_dict(self) -> dict:
        return asdict(self)


def lr_at(config: TrainConfig, epoch: int) -> float:
    """``base_lr * multiplier ** (epoch // step)``."""
    return config.base_lr * config.lr_multiplier ** (epoch // config.lr_step_epochs)


class NonFiniteGradient(FloatingPointError):
    def __init__(self, path: str):
        super().__init__(f"non-finite gradient in {path}")
        self.path = path


def decays(name: str) -> bool:
    """Weight decay applies to conv/FC weights only."""
    return name.endswith(".weight")


class RMSProp:
    """Per-parameter running mean of squared gradients.

    With ``d = g + wd * p`` (decay term on weights only):
    ``v <- a v + (1 - a) d^2`` and ``p <- p - lr d / (sqrt(v) + eps)``.
    Feeding the decayed gradient into ``v`` keeps every step bounded by
    roughly ``lr / sqrt(1 - a)``.
    """

    def __init__(self, params: dict, alpha: float = 0.99, eps: float = 1e-8):
        self.alpha = alpha
        self.eps = eps
        self.square_avg = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict, lr: float, weight_decay: float = 0.0) -> None:
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(name)
        a, eps = self.alpha, self.eps
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
            d = g + weight_decay * p if weight_decay and decays(name) else g
            v = self.square_avg[name]
            v *= a
            v += (1 - a) * d * d
            p -= lr * d / (np.sqrt(v) + eps)


def rmsprop_step(params: dict, grads: dict, opt: RMSProp, lr: float, weight_decay: float) -> dict:
    """Functional wrapper: updates ``params`` in place and returns them."""
    opt.step(params, grads, lr, weight_decay)
    return params
