"""Mini-batch streaming over a manifest split."""
from __future__ import annotations

from typing import Iterator, Optional, Sequence

import numpy as np

from .images import read_image
from .manifest import DatasetManifest, SampleRecord
from .transforms import DEFAULT_SIDE, test_preprocess, train_preprocess


class ImageStore:
    """Decoded-image cache keyed by resolved path."""

    def __init__(self):
        self._cache: dict = {}

    def get(self, manifest: DatasetManifest, record: SampleRecord) -> np.ndarray:
        path = manifest.resolve(record)
        key = str(path)
        img = self._cache.get(key)
        if img is None:
            img = read_image(path)[0]
            self._cache[key] = img
        return img

    def __len__(self) -> int:
        return len(self._cache)


def batch_iterator(manifest: DatasetManifest, split: Optional[str], batch_size: int,
                   rng: np.random.Generator, side: int = DEFAULT_SIDE, train: Optional[bool] = None,
                   scale_range=None, store: Optional[ImageStore] = None,
                   records: Optional[Sequence[SampleRecord]] = None,
                   shuffle: Optional[bool] = None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(images (B, 1, side, side) float32, labels (B,) int64)`` for one epoch.

    Records come from ``split`` (or the explicit ``records`` list). The order is
    a fresh permutation drawn from ``rng`` when shuffling (default: training
    only); the last batch may be short. ``train`` selects the augmenting
    preprocessing and defaults to ``split == "train"``.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    if records is None:
        records = manifest.split(split) if split is not None else list(manifest.records)
    if train is None:
        train = split == "train"
    if shuffle is None:
        shuffle = train
    store = store if store is not None else ImageStore()
    order = rng.permutation(len(records)) if shuffle else np.arange(len(records))
    for start in range(0, len(order), batch_size):
        chunk = order[start:start + batch_size]
        xs = np.empty((len(chunk), 1, side, side), dtype=np.float32)
        ys = np.empty(len(chunk), dtype=np.int64)
        for j, i in enumerate(chunk):
            rec = records[i]
            img = store.get(manifest, rec)
            xs[j] = train_preprocess(img, rng, side, scale_range) if train else test_preprocess(img, side)
            ys[j] = manifest.label_index(rec.label)
        yield xs, ys
