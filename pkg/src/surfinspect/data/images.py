"""8-bit grayscale image I/O."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = (".png", ".pgm", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff")


def read_image(path) -> tuple[np.ndarray, str | None]:
    """Load ``path`` as a uint8 (H, W) array.

    Returns ``(pixels, conversion)`` where ``conversion`` names the rule
    applied to non-grayscale sources (None when already 8-bit gray). Colour
    images become the average of their R, G, B channels.
    """
    with Image.open(path) as im:
        mode = im.mode
        if mode == "L":
            return np.asarray(im, dtype=np.uint8).copy(), None
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            top = 65535.0 if arr.max() > 255 else 255.0
            return np.clip(np.rint(arr / top * 255), 0, 255).astype(np.uint8), f"{mode}->8-bit"
        if mode == "1":
            return np.asarray(im.convert("L"), dtype=np.uint8).copy(), "binary->gray"
        rgb = np.asarray(im.convert("RGB"), dtype=np.uint16)
        gray = (rgb.sum(axis=2) + 1) // 3
        return gray.astype(np.uint8), f"{mode}->gray (channel average)"


def write_image(path, pixels: np.ndarray) -> Path:
    """Write an 8-bit grayscale PNG or PGM (chosen by suffix)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    Image.fromarray(arr, mode="L").save(path)
    return path


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Quantize a [0, 1] float image to 8 bits."""
    return np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def to_unit(image: np.ndarray) -> np.ndarray:
    """Map uint8 pixels to float32 in [0, 1]; float input is passed through clipped."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / np.float32(255.0)
    return np.clip(arr.astype(np.float32), 0.0, 1.0)
