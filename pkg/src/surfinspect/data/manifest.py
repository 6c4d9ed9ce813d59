"""Dataset manifests: line-oriented UTF-8 text.

::

    # comment lines start with '#'
    !version 1
    !classes non-defect defect
    !seed 7
    !resample bilinear
    <path>\\t<label>\\t<material>\\t<split>\\t<origin>

Paths are relative to the directory holding the manifest file.
"""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

FORMAT_VERSION = 1
BINARY_CLASSES = ("non-defect", "defect")
SPLITS = ("train", "test")
ORIGINS = ("real", "synthetic", "derived-augmentation")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: str
    material: str = "unknown"
    split: str = "train"
    origin: str = "real"

    def with_split(self, split: str) -> "SampleRecord":
        return replace(self, split=split)


@dataclass
class DatasetManifest:
    classes: tuple
    records: list = field(default_factory=list)
    seed: Optional[int] = None
    root: Path = field(default_factory=Path.cwd)
    resample: str = "bilinear"
    notes: list = field(default_factory=list)
    version: int = FORMAT_VERSION

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.root = Path(self.root)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def resolve(self, record: SampleRecord) -> Path:
        return self.root / record.path

    def label_index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise ManifestError(f"label {label!r} not in class set {self.classes}") from None

    def split(self, split: str) -> list:
        return [r for r in self.records if r.split == split]

    def counts(self, key=lambda r: r.label) -> Counter:
        return Counter(key(r) for r in self.records)

    def derive(self, records: Iterable[SampleRecord], **changes) -> "DatasetManifest":
        """A manifest sharing this one's header with a different record list."""
        kw = dict(classes=self.classes, seed=self.seed, root=self.root,
                  resample=self.resample, notes=list(self.notes))
        kw.update(changes)
        return DatasetManifest(records=list(records), **kw)

    def validate(self, check_paths: bool = True) -> None:
        seen = set()
        for r in self.records:
            if r.label not in self.classes:
                raise ManifestError(f"{r.path}: label {r.label!r} not in {self.classes}")
            if r.split not in SPLITS:
                raise ManifestError(f"{r.path}: unknown split {r.split!r}")
            if r.origin not in ORIGINS:
                raise ManifestError(f"{r.path}: unknown origin {r.origin!r}")
            key = os.path.normpath(r.path)
            if key in seen:
                raise ManifestError(f"duplicate path {r.path}")
            seen.add(key)
            if check_paths and not self.resolve(r).is_file():
                raise ManifestError(f"missing image {self.resolve(r)}")

    def to_text(self) -> str:
        lines = ["# surfinspect dataset manifest", f"!version {self.version}",
                 "!classes " + " ".join(self.classes)]
        if self.seed is not None:
            lines.append(f"!seed {self.seed}")
        lines.append(f"!resample {self.resample}")
        lines.extend(f"# {n}" for n in self.notes)
        lines.append("# path\tlabel\tmaterial\tsplit\torigin")
        for r in self.records:
            lines.append("\t".join((r.path, r.label, r.material, r.split, r.origin)))
        return "\n".join(lines) + "\n"

    def save(self, path) -> Path:
        """Write the manifest, rewriting record paths relative to its new location."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        base = path.parent.resolve()
        moved = []
        for r in self.records:
            absolute = (self.root / r.path).resolve()
            moved.append(replace(r, path=Path(os.path.relpath(absolute, base)).as_posix()))
        out = self.derive(moved, root=base)
        path.write_text(out.to_text(), encoding="utf-8")
        self.records, self.root = moved, base
        return path

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise ManifestError(f"manifest not found: {path}")
        return cls.parse(path.read_text(encoding="utf-8"), root=path.parent.resolve(),
                         source=str(path))

    @classmethod
    def parse(cls, text: str, root=None, source: str = "<text>") -> "DatasetManifest":
        header: dict = {}
        records = []
        notes = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body and body != "surfinspect dataset manifest" and not body.startswith("path\t"):
                    notes.append(body)
                continue
            if line.startswith("!"):
                key, _, value = line[1:].partition(" ")
                header[key] = value.strip()
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ManifestError(f"{source}:{lineno}: expected 5 tab-separated fields")
            records.append(SampleRecord(*fields))
        if "classes" not in header:
            raise ManifestError(f"{source}: missing !classes header")
        version = int(header.get("version", FORMAT_VERSION))
        if version != FORMAT_VERSION:
            raise ManifestError(f"{source}: unsupported manifest version {version}")
        seed = header.get("seed")
        return cls(tuple(header["classes"].split()), records,
                   None if seed in (None, "", "none") else int(seed),
                   Path(root) if root is not None else Path.cwd(),
                   header.get("resample", "bilinear"), notes, version)


def merge(*manifests: DatasetManifest) -> DatasetManifest:
    """Concatenate manifests that share a class set; paths are re-rooted on the first."""
    first = manifests[0]
    records = []
    for m in manifests:
        if m.classes != first.classes:
            raise ManifestError(f"cannot merge class sets {m.classes} and {first.classes}")
        for r in m.records:
            absolute = (m.root / r.path).resolve()
            records.append(replace(r, path=Path(os.path.relpath(absolute, first.root.resolve())).as_posix()))
    return first.derive(records, root=first.root.resolve())
