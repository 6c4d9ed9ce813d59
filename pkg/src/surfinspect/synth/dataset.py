"""Deterministic synthetic corpus generation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from collections import Counter
from typing import Mapping, Optional, Union

import numpy as np

from ..data.images import to_uint8, write_image
from ..data.manifest import BINARY_CLASSES, DatasetManifest, SampleRecord, merge
from .labels import ShapeParams, generate_label
from .render import STYLES, render_defect
from .texture import TextureParams, render_texture

# material presets: base texture parameters plus per-image jitter of the base intensity
MATERIALS = {
    "steel": TextureParams(base=0.45, amplitude=0.07, streak_strength=0.6, streak_angle=0.0, blur=0.8),
    "foil": TextureParams(base=0.65, amplitude=0.04, streak_strength=0.3, streak_angle=90.0, blur=1.5),
    "textile": TextureParams(base=0.5, amplitude=0.09, streak_strength=0.5, streak_angle=45.0, blur=0.6),
    "paper": TextureParams(base=0.6, amplitude=0.05, streak_strength=0.1, streak_angle=0.0, blur=2.0),
}
BASE_JITTER = 0.08
ANGLE_JITTER = 10.0


@dataclass(frozen=True)
class SynthConfig:
    size: int = 128
    materials: tuple = tuple(MATERIALS)
    styles: tuple = STYLES
    shapes: ShapeParams = field(default_factory=ShapeParams)
    edge_probability: float = 0.3

    def __post_init__(self):
        if any(m not in MATERIALS for m in self.materials):
            raise ValueError(f"unknown material in {self.materials}; known: {tuple(MATERIALS)}")
        if not self.styles or any(s not in STYLES for s in self.styles):
            raise ValueError(f"unknown style in {self.styles}; known: {STYLES}")
        if self.size < 16:
            raise ValueError("image size must be at least 16")


def _texture_params(material: str, rng) -> TextureParams:
    p = MATERIALS[material]
    return replace(p, base=float(np.clip(p.base + rng.uniform(-BASE_JITTER, BASE_JITTER), 0.1, 0.9)),
                   streak_angle=p.streak_angle + rng.uniform(-ANGLE_JITTER, ANGLE_JITTER))


def synth_image(defect: bool, rng: np.random.Generator, config: SynthConfig = SynthConfig()
                ) -> tuple[np.ndarray, str]:
    """One uint8 image and its material tag."""
    material = config.materials[int(rng.integers(len(config.materials)))]
    tex = render_texture(_texture_params(material, rng), config.size, rng)
    if not defect:
        return to_uint8(tex), material
    placement = "edge" if rng.random() < config.edge_probability else "uniform"
    label = generate_label(replace(config.shapes, placement=placement), config.size, rng)
    style = config.styles[int(rng.integers(len(config.styles)))]
    img, _ = render_defect(tex, label, style, rng)
    return to_uint8(img), material


def generate_dataset(n_defect: int, n_nondefect: int, seed: int, out_dir,
                     config: SynthConfig = SynthConfig(), split: str = "train",
                     manifest_name: Optional[str] = "manifest.txt") -> DatasetManifest:
    """Write ``n_defect + n_nondefect`` PNGs under ``out_dir`` and return their manifest.

    Image ``i`` of a class draws from its own stream seeded by ``(seed, class, i)``,
    so any subset of the corpus can be regenerated independently.
    """
    if n_defect < 0 or n_nondefect < 0 or n_defect + n_nondefect == 0:
        raise ValueError("need a positive total image count")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for cls, count, prefix in ((1, n_defect, "d"), (0, n_nondefect, "n")):
        label = BINARY_CLASSES[cls]
        for i in range(count):
            rng = np.random.default_rng([seed, cls, i])
            pixels, material = synth_image(cls == 1, rng, config)
            rel = f"{label}/{prefix}_{i:05d}.png"
            write_image(out / rel, pixels)
            records.append(SampleRecord(rel, label, material, split, "synthetic"))
    manifest = DatasetManifest(BINARY_CLASSES, records, seed, out.resolve(),
                               notes=[f"synthetic corpus size={config.size} styles={','.join(config.styles)}"])
    if manifest_name:
        manifest.save(out / manifest_name)
    return manifest


def synthetic_topup(manifest: DatasetManifest, quota: Union[int, Mapping], seed: int, out_dir,
                    config: SynthConfig = SynthConfig(), split: str = "train"
                    ) -> tuple[DatasetManifest, dict]:
    """Fill every defect cell of ``split`` up to its quota with generated defects.

    Cells are ``("defect", material)`` as in balancing; ``quota`` is an int or a
    mapping from cell to int. Generated images use the cell's material preset
    when one exists. Returns the merged manifest and material -> added count.
    """
    label = BINARY_CLASSES[1]
    counts = Counter(r.material for r in manifest.records if r.label == label and r.split == split)
    if isinstance(quota, Mapping):
        targets = {m: int(q) for (lab, m), q in quota.items() if lab == label}
        for m in counts:
            targets.setdefault(m, counts[m])
    else:
        targets = {m: int(quota) for m in counts}
    added = {}
    parts = [manifest]
    for k, material in enumerate(sorted(targets)):
        missing = targets[material] - counts.get(material, 0)
        if missing <= 0:
            continue
        cell_config = replace(config, materials=(material,)) if material in MATERIALS else config
        # independent stream per cell so materials never share noise fields
        cell_seed = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        parts.append(generate_dataset(missing, 0, cell_seed, Path(out_dir) / material, cell_config,
                                      split=split, manifest_name=None))
        added[material] = missing
    return (merge(*parts) if len(parts) > 1 else manifest), added
