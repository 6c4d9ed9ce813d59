"""Adapter for the public 6-class NEU steel surface defect benchmark.

Accepts either a directory per class (named by class or by its prefix) or a
flat directory of files named ``<prefix>_<n>.bmp``.
"""
from __future__ import annotations

import os
import re
from pathlib import Path

from .images import IMAGE_SUFFIXES
from .manifest import DatasetManifest, ManifestError, SampleRecord

NEU_CLASSES = ("crazing", "inclusion", "patches", "pitted_surface", "rolled-in_scale", "scratches")
NEU_PREFIXES = {"cr": "crazing", "in": "inclusion", "pa": "patches", "ps": "pitted_surface",
                "rs": "rolled-in_scale", "sc": "scratches"}
NEU_SIDE = 64
_PREFIX = re.compile(r"^([A-Za-z]+)[_\-]")


def _class_of(name: str):
    key = name.lower()
    if key in NEU_CLASSES:
        return key
    if key in NEU_PREFIXES:
        return NEU_PREFIXES[key]
    m = _PREFIX.match(name)
    if m and m.group(1).lower() in NEU_PREFIXES:
        return NEU_PREFIXES[m.group(1).lower()]
    return None


def neu_manifest(root, seed: int = 0) -> DatasetManifest:
    """Build a 6-class manifest (material ``steel``) from a NEU-CLS directory."""
    root = Path(root)
    if not root.is_dir():
        raise ManifestError(f"NEU directory not found: {root}")
    records = []
    for file in sorted(p for p in root.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES):
        label = _class_of(file.parent.name) if file.parent != root else None
        label = label or _class_of(file.name)
        if label is None:
            continue
        rel = Path(os.path.relpath(file.resolve(), root.resolve())).as_posix()
        records.append(SampleRecord(rel, label, "steel", "train", "real"))
    if not records:
        raise ManifestError(f"no NEU images recognised under {root}")
    manifest = DatasetManifest(NEU_CLASSES, records, seed, root.resolve())
    manifest.validate()
    return manifest
