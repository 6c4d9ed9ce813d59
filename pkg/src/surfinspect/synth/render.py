"""Label-to-image rendering: perturb a texture inside the label's regions."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import distance_transform_edt

from .labels import LabelImage, centroid

STYLES = ("dark", "bright", "speckle", "scratch")
DEFAULT_STYLE = "dark"
FEATHER_PX = 2
SCRATCH_HALF_WIDTH = 2.5  # wide enough for the feather to reach full strength on the line


def feather_weights(mask: np.ndarray, radius: int = FEATHER_PX) -> np.ndarray:
    """1 in the mask interior, ramping down over ``radius`` pixels at the border, 0 outside."""
    return np.minimum(distance_transform_edt(mask) / (radius + 1), 1.0)


def _scratch_mask(region: np.ndarray, rng) -> np.ndarray:
    """A thin line through the region centroid, restricted to the region."""
    size = region.shape[0]
    cy, cx = centroid(region)
    t = rng.uniform(0, np.pi)
    yy, xx = np.mgrid[0:size, 0:size]
    dist = np.abs(-(xx - cx) * np.sin(t) + (yy - cy) * np.cos(t))
    line = region & (dist <= SCRATCH_HALF_WIDTH)
    return line if line.sum() >= 4 else region


def render_defect(texture: np.ndarray, label: LabelImage, style: str = DEFAULT_STYLE,
                  rng: np.random.Generator | None = None, strength: float | None = None
                  ) -> tuple[np.ndarray, str]:
    """Return ``(image, "defect")``; pixels outside the label mask are left untouched."""
    if not label.regions or not label.mask.any():
        raise ValueError("label has no defect regions; use the texture as a non-defect sample")
    if style not in STYLES:
        raise ValueError(f"unknown defect style {style!r}; choose from {STYLES}")
    rng = rng if rng is not None else np.random.default_rng(0)
    tex = np.asarray(texture, dtype=np.float64)
    delta = strength if strength is not None else rng.uniform(0.3, 0.5)
    mask = label.mask
    if style == "scratch":
        mask = np.zeros_like(mask)
        for region in label.regions:
            mask |= _scratch_mask(region, rng)
    w = feather_weights(mask)
    if style == "dark":
        target = tex - delta
    elif style == "bright":
        target = tex + delta
    elif style == "speckle":
        target = tex + delta * 1.5 * rng.choice([-1.0, 1.0], size=tex.shape)
    else:
        target = tex - 1.5 * delta
    blended = np.clip(tex + w * (target - tex), 0.0, 1.0)
    out = np.where(mask, blended, tex).astype(np.asarray(texture).dtype)
    return out, "defect"
