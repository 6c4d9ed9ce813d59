"""Corpus preparation: aggregation, cleansing, balancing and offline rotations."""
from __future__ import annotations

import logging
import os
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .images import IMAGE_SUFFIXES, read_image, write_image
from .manifest import BINARY_CLASSES, DatasetManifest, ManifestError, SampleRecord

log = logging.getLogger(__name__)


class Source(NamedTuple):
    """A directory of images sharing one label and material tag."""
    path: str
    label: str
    material: str = "unknown"


@dataclass(frozen=True)
class CleanseThresholds:
    min_mean: float = 0.02
    max_mean: float = 0.98
    min_std: float = 0.004

    def __post_init__(self):
        if not 0.0 <= self.min_mean < self.max_mean <= 1.0:
            raise ValueError(f"need 0 <= min_mean < max_mean <= 1, got {self.min_mean}, {self.max_mean}")
        if self.min_std < 0:
            raise ValueError("min_std must be non-negative")


@dataclass(frozen=True)
class Rejection:
    path: str
    reason: str
    mean: float
    std: float

    def __str__(self) -> str:
        return f"{self.path}\t{self.reason}\tmean={self.mean:.4f}\tstd={self.std:.4f}"


def _list_images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def aggregate(sources: Iterable, class_mapping: Optional[Mapping[str, str]] = None,
              out_dir=None, classes: Optional[Sequence[str]] = None,
              seed: Optional[int] = None) -> DatasetManifest:
    """Collect every readable image under the source directories into one manifest.

    ``sources`` holds :class:`Source` tuples (or ``(path, label[, material])``)
    or, with ``class_mapping``, bare directory paths whose label is looked up
    in the mapping. Files seen twice (same resolved path) are kept once.
    Non-grayscale images are converted into ``out_dir/converted`` and noted in
    the manifest; without ``out_dir`` they are skipped.
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    root = (out_dir or Path.cwd()).resolve()
    resolved_sources = []
    for s in sources:
        if isinstance(s, (str, os.PathLike)):
            if class_mapping is None or str(s) not in class_mapping:
                raise ManifestError(f"no label for source {s}")
            s = Source(str(s), class_mapping[str(s)])
        resolved_sources.append(Source(*s))

    labels_seen = []
    seen = set()
    records, notes = [], []
    for src in resolved_sources:
        directory = Path(src.path)
        if not directory.is_dir():
            raise ManifestError(f"source directory not found: {directory}")
        if src.label not in labels_seen:
            labels_seen.append(src.label)
        for file in _list_images(directory):
            real = os.path.realpath(file)
            if real in seen:
                log.warning("duplicate image %s skipped", file)
                notes.append(f"duplicate skipped: {file}")
                continue
            seen.add(real)
            try:
                pixels, conversion = read_image(file)
            except Exception as exc:  # unreadable or truncated file
                log.warning("skipping %s: %s", file, exc)
                notes.append(f"skipped unreadable: {file} ({exc})")
                continue
            target = Path(real)
            if conversion is not None:
                if out_dir is None:
                    log.warning("skipping %s: needs conversion %s but no output dir", file, conversion)
                    notes.append(f"skipped non-conforming: {file} ({conversion})")
                    continue
                target = out_dir / "converted" / src.label / f"{len(records):06d}_{file.stem}.png"
                write_image(target, pixels)
                notes.append(f"converted {conversion}: {file} -> {target.name}")
            rel = Path(os.path.relpath(target.resolve(), root)).as_posix()
            records.append(SampleRecord(rel, src.label, src.material, "train", "real"))
    if not records:
        raise ManifestError("aggregation found no valid images")
    if classes is None:
        classes = BINARY_CLASSES if set(labels_seen) <= set(BINARY_CLASSES) else tuple(labels_seen)
    manifest = DatasetManifest(tuple(classes), records, seed, root, notes=notes)
    manifest.validate()
    return manifest


def image_stats(pixels: np.ndarray) -> tuple[float, float]:
    """Mean and standard deviation of an 8-bit image on the [0, 1] scale."""
    unit = np.asarray(pixels, dtype=np.float64) / 255.0
    return float(unit.mean()), float(unit.std())


def cleanse(manifest: DatasetManifest, thresholds: CleanseThresholds = CleanseThresholds()
            ) -> tuple[DatasetManifest, list[Rejection]]:
    """Drop black, white and flat frames. Returns the kept manifest and the rejections."""
    kept, rejected = [], []
    for r in manifest.records:
        mean, std = image_stats(read_image(manifest.resolve(r))[0])
        reason = None
        if mean < thresholds.min_mean:
            reason = "completely black"
        elif mean > thresholds.max_mean:
            reason = "completely white"
        elif std < thresholds.min_std:
            reason = "flat"
        if reason is None:
            kept.append(r)
        else:
            rejected.append(Rejection(r.path, reason, mean, std))
    return manifest.derive(kept), rejected


def format_rejections(rejections: Sequence[Rejection]) -> str:
    lines = ["# path\treason\tmean\tstd"] + [str(r) for r in rejections]
    return "\n".join(lines) + "\n"


def balance(manifest: DatasetManifest, quota, seed: Optional[int] = None
            ) -> tuple[DatasetManifest, dict]:
    """Cap every (label, material) cell at its quota by seeded uniform selection.

    ``quota`` is an int for all cells or a mapping from ``(label, material)``
    to an int. Surviving records keep their original order. Returns the new
    manifest and a dict of cell -> missing count for cells below quota.
    """
    if seed is None:
        seed = manifest.seed if manifest.seed is not None else 0
    cells: dict = defaultdict(list)
    for i, r in enumerate(manifest.records):
        cells[(r.label, r.material)].append(i)
    if isinstance(quota, Mapping):
        for cell in quota:
            cells.setdefault(tuple(cell), [])
    rng = np.random.default_rng(seed)
    keep = set()
    shortfalls = {}
    for cell in sorted(cells):
        idx = cells[cell]
        q = quota.get(cell, len(idx)) if isinstance(quota, Mapping) else int(quota)
        if q < 0:
            raise ValueError(f"negative quota for {cell}")
        if len(idx) > q:
            keep.update(idx[j] for j in rng.choice(len(idx), size=q, replace=False))
        else:
            keep.update(idx)
            if len(idx) < q:
                shortfalls[cell] = q - len(idx)
                log.info("cell %s short by %d", cell, q - len(idx))
    records = [r for i, r in enumerate(manifest.records) if i in keep]
    return manifest.derive(records, seed=seed), shortfalls


def offline_rotations(manifest: DatasetManifest, angles: Sequence[int] = (90, 180, 270),
                      out_dir=None, split: Optional[str] = "train",
                      labels: Optional[Iterable[str]] = None) -> DatasetManifest:
    """Append rotated copies of the selected records (origin derived-augmentation).

    Only right-angle rotations are accepted so every copy is lossless.
    ``split``/``labels`` restrict which records are rotated (None means all).
    """
    for a in angles:
        if a % 90 != 0 or a % 360 == 0:
            raise ValueError(f"rotation angle must be a non-zero multiple of 90, got {a}")
    out_dir = Path(out_dir) if out_dir is not None else manifest.root / "rotated"
    wanted = set(labels) if labels is not None else None
    root = manifest.root.resolve()
    added = []
    for r in manifest.records:
        if split is not None and r.split != split:
            continue
        if wanted is not None and r.label not in wanted:
            continue
        if r.origin == "derived-augmentation":
            continue
        pixels = read_image(manifest.resolve(r))[0]
        stem = Path(r.path).with_suffix("").as_posix().replace("/", "_").replace("..", "up")
        for a in angles:
            target = out_dir / r.label / f"{stem}_r{a % 360}.png"
            write_image(target, np.rot90(pixels, k=(a // 90) % 4))
            rel = Path(os.path.relpath(target.resolve(), root)).as_posix()
            added.append(replace(r, path=rel, origin="derived-augmentation"))
    return manifest.derive(list(manifest.records) + added)


def assign_split(manifest: DatasetManifest, test_fraction: float, seed: Optional[int] = None
                 ) -> DatasetManifest:
    """Stratified seeded split: each label contributes round(fraction * n) test records."""
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError("test_fraction must lie in [0, 1)")
    if seed is None:
        seed = manifest.seed if manifest.seed is not None else 0
    rng = np.random.default_rng(seed)
    by_label = defaultdict(list)
    for i, r in enumerate(manifest.records):
        by_label[r.label].append(i)
    test = set()
    for label in manifest.classes:
        idx = by_label.get(label, [])
        n = int(round(test_fraction * len(idx)))
        test.update(idx[j] for j in rng.choice(len(idx), size=n, replace=False))
    records = [r.with_split("test" if i in test else "train") for i, r in enumerate(manifest.records)]
    return manifest.derive(records, seed=seed)
