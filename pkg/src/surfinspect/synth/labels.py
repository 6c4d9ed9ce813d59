"""Parametric label images: filled defect-region masks on a defect-free background."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from skimage import draw

SHAPE_KINDS = ("rectangle", "ellipse", "stripe", "concave")
PLACEMENTS = ("uniform", "edge")
MIN_REGION_PIXELS = 16
MIN_REGION_FRACTION = 0.01
EDGE_BAND = 0.2
_MAX_TRIES = 50


@dataclass(frozen=True)
class ShapeParams:
    """Shape distribution for one label image.

    ``size_range`` is the region extent as a fraction of the image side.
    With ``placement="edge"`` each region centroid lands in the border band.
    """
    kinds: tuple = SHAPE_KINDS
    size_range: tuple = (0.12, 0.3)
    count_range: tuple = (1, 3)
    placement: str = "uniform"

    def __post_init__(self):
        if not self.kinds or any(k not in SHAPE_KINDS for k in self.kinds):
            raise ValueError(f"shape kinds must be drawn from {SHAPE_KINDS}")
        lo, hi = self.size_range
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"bad size range {self.size_range}")
        cmin, cmax = self.count_range
        if not 0 <= cmin <= cmax:
            raise ValueError(f"bad count range {self.count_range}")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")


@dataclass
class LabelImage:
    size: int
    regions: list = field(default_factory=list)
    background: str = "non-defect"

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros((self.size, self.size), dtype=bool)
        for r in self.regions:
            out |= r
        return out

    @property
    def is_defect(self) -> bool:
        return bool(self.regions)


def _rectangle(size, cy, cx, extent, rng):
    h = extent * rng.uniform(0.4, 1.0)
    w = extent * rng.uniform(0.4, 1.0)
    rr, cc = draw.rectangle((cy - h / 2, cx - w / 2), (cy + h / 2, cx + w / 2), shape=(size, size))
    return rr.astype(int), cc.astype(int)


def _ellipse(size, cy, cx, extent, rng):
    r_major = extent / 2
    r_minor = r_major * rng.uniform(0.35, 1.0)
    return draw.ellipse(cy, cx, r_minor, r_major, shape=(size, size), rotation=rng.uniform(-np.pi, np.pi))


def _stripe(size, cy, cx, extent, rng):
    # diagonal bar: long axis at roughly +-45 degrees
    angle = rng.choice([-1, 1]) * np.pi / 4 + rng.uniform(-0.2, 0.2)
    half_len = extent * 0.75
    half_w = max(2.5, extent * rng.uniform(0.06, 0.15))
    d = np.array([np.sin(angle), np.cos(angle)])
    n = np.array([d[1], -d[0]])
    c = np.array([cy, cx])
    corners = [c + half_len * d + half_w * n, c + half_len * d - half_w * n,
               c - half_len * d - half_w * n, c - half_len * d + half_w * n]
    pts = np.array(corners)
    return draw.polygon(pts[:, 0], pts[:, 1], shape=(size, size))


def _concave(size, cy, cx, extent, rng):
    # star-like polygon with alternating radii
    n = int(rng.integers(5, 9)) * 2
    theta = np.sort(rng.uniform(0, 2 * np.pi, n)) if rng.random() < 0.3 else \
        np.linspace(0, 2 * np.pi, n, endpoint=False) + rng.uniform(0, np.pi)
    outer = extent / 2
    radii = np.where(np.arange(n) % 2 == 0, outer * rng.uniform(0.8, 1.0, n),
                     outer * rng.uniform(0.3, 0.55, n))
    return draw.polygon(cy + radii * np.sin(theta), cx + radii * np.cos(theta), shape=(size, size))


_DRAW = {"rectangle": _rectangle, "ellipse": _ellipse, "stripe": _stripe, "concave": _concave}


def _center(size, extent, placement, rng):
    half = extent / 2 + 1
    lo, hi = half, size - 1 - half
    if placement == "uniform":
        return rng.uniform(lo, hi), rng.uniform(lo, hi)
    band = EDGE_BAND * size
    near = rng.uniform(lo, max(lo, band - 1))
    along = rng.uniform(lo, hi)
    side = int(rng.integers(4))
    offset = near if side in (0, 2) else size - 1 - near
    return (offset, along) if side < 2 else (along, offset)


def draw_region(kind: str, size: int, extent: float, placement: str, rng) -> np.ndarray:
    cy, cx = _center(size, extent, placement, rng)
    rr, cc = _DRAW[kind](size, cy, cx, extent, rng)
    mask = np.zeros((size, size), dtype=bool)
    mask[rr, cc] = True
    return mask


def min_region_pixels(size: int) -> int:
    """Smallest region area: MIN_REGION_PIXELS or 1% of the image, whichever is larger."""
    return max(MIN_REGION_PIXELS, int(np.ceil(MIN_REGION_FRACTION * size * size)))


def generate_label(params: ShapeParams, size: int, rng: np.random.Generator) -> LabelImage:
    """Draw ``count`` regions, each covering at least :func:`min_region_pixels`."""
    if size < 16:
        raise ValueError("label images need a side of at least 16 pixels")
    count = int(rng.integers(params.count_range[0], params.count_range[1] + 1))
    regions = []
    for _ in range(count):
        for attempt in range(_MAX_TRIES):
            kind = params.kinds[int(rng.integers(len(params.kinds)))]
            frac = rng.uniform(*params.size_range)
            extent = max(frac * size, 6.0) * (1 + attempt / 10)
            extent = min(extent, 0.4 * size)
            mask = draw_region(kind, size, extent, params.placement, rng)
            if mask.sum() >= min_region_pixels(size):
                regions.append(mask)
                break
        else:
            raise RuntimeError("could not draw a region of the minimum size")
    return LabelImage(size, regions, "defect" if regions else "non-defect")


def centroid(mask: np.ndarray) -> tuple[float, float]:
    rr, cc = np.nonzero(mask)
    return float(rr.mean()), float(cc.mean())


def in_edge_band(mask: np.ndarray, band: float = EDGE_BAND) -> bool:
    size = mask.shape[0]
    cy, cx = centroid(mask)
    limit = band * size
    return min(cy, cx, size - 1 - cy, size - 1 - cx) <= limit
