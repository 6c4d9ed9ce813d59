"""Procedural web-material textures: blurred noise plus directional streaks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates


@dataclass(frozen=True)
class TextureParams:
    base: float = 0.5
    amplitude: float = 0.06
    streak_strength: float = 0.5
    streak_angle: float = 0.0  # degrees, direction the streaks run
    blur: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.base <= 1.0:
            raise ValueError("base intensity must lie in [0, 1]")
        if self.amplitude < 0 or self.blur < 0:
            raise ValueError("amplitude and blur must be non-negative")
        if not 0.0 <= self.streak_strength <= 1.0:
            raise ValueError("streak_strength must lie in [0, 1]")


def _unit_std(a: np.ndarray) -> np.ndarray:
    a = a - a.mean()
    s = a.std()
    return a / s if s > 0 else a


def _streaks(size: int, angle_deg: float, rng) -> np.ndarray:
    """Field that is constant along ``angle`` and varies across it."""
    t = np.deg2rad(angle_deg)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    across = -xx * np.sin(t) + yy * np.cos(t)
    across -= across.min()
    profile = gaussian_filter(rng.standard_normal(int(np.ceil(across.max())) + 2), 0.8)
    return map_coordinates(profile, [across.ravel()], order=1).reshape(size, size)


def render_texture(params: TextureParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Float32 (size, size) texture in [0, 1]; constant at ``base`` when amplitude is 0."""
    noise = rng.standard_normal((size, size))
    if params.blur > 0:
        noise = gaussian_filter(noise, params.blur)
    field = (1.0 - params.streak_strength) * _unit_std(noise)
    if params.streak_strength > 0:
        field = field + params.streak_strength * _unit_std(_streaks(size, params.streak_angle, rng))
    img = params.base + params.amplitude * _unit_std(field)
    return np.clip(img, 0.0, 1.0).astype(np.float32)
