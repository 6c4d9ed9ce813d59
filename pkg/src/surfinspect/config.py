"""Run configuration files: ``key = value`` lines with '#' comments.

Every key is declared in :data:`SCHEMA`; unknown keys are rejected. Values
are resolved as defaults, then the config file, then command-line overrides.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(item: Callable) -> Callable:
    def parse(text: str) -> tuple:
        text = text.strip()
        if text.lower() in ("", "none"):
            return ()
        return tuple(item(v.strip()) for v in text.split(","))
    return parse


def _opt(item: Callable) -> Callable:
    def parse(text: str):
        return None if text.strip().lower() in ("", "none") else item(text.strip())
    return parse


def _plan(text: str):
    """Channel plan: ``32,32,64`` or, for multi-lane networks, lanes joined by ``;``."""
    text = text.strip()
    if text.lower() in ("", "default", "none"):
        return None
    if ";" in text:
        return tuple(_list(int)(lane) for lane in text.split(";"))
    return _list(int)(text)


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ";".join(_fmt(v) for v in value)
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    help: str


SCHEMA: dict[str, Key] = {
    # shared
    "seed": Key(int, 0, "seed for every stochastic step"),
    "out": Key(str, "runs/out", "output directory; nothing is written outside it"),
    "threads": Key(int, 0, "BLAS threads; 0 means deterministic single-threaded mode"),
    "manifest": Key(_opt(str), None, "input dataset manifest"),
    # datagen
    "n_defect": Key(int, 100, "defect images in the train split"),
    "n_nondefect": Key(int, 100, "non-defect images in the train split"),
    "test_defect": Key(int, 0, "defect images in the test split"),
    "test_nondefect": Key(int, 0, "non-defect images in the test split"),
    "image_size": Key(int, 128, "side of generated images in pixels"),
    "materials": Key(_list(str), ("steel", "foil", "textile", "paper"), "material presets to draw from"),
    "styles": Key(_list(str), ("dark", "bright", "speckle", "scratch"), "defect rendering styles"),
    "shape_kinds": Key(_list(str), ("rectangle", "ellipse", "stripe", "concave"), "defect region shapes"),
    "shape_size": Key(_list(float), (0.12, 0.3), "region extent range as fraction of the side"),
    "shape_count": Key(_list(int), (1, 3), "regions per defect image (min,max)"),
    "edge_probability": Key(float, 0.3, "chance a defect image uses edge-hugging placement"),
    # prep
    "sources": Key(_list(str), (), "source directories as dir:label[:material], comma separated"),
    "min_mean": Key(float, 0.02, "cleansing: lower mean-intensity bound"),
    "max_mean": Key(float, 0.98, "cleansing: upper mean-intensity bound"),
    "min_std": Key(float, 0.004, "cleansing: contrast floor"),
    "quota": Key(_opt(int), None, "per (class, material) cap; none disables balancing"),
    "test_fraction": Key(float, 0.0, "stratified test fraction; 0 keeps the input splits"),
    "rotations": Key(_list(int), (), "offline rotation angles for the train split, e.g. 90,180,270"),
    "rotate_labels": Key(_list(str), (), "labels to rotate; empty means all"),
    "synth_topup": Key(_bool, False, "generate synthetic defects to fill balancing shortfalls"),
    # network
    "network": Key(str, "surfnet", "surfnet | fastinf | multivis"),
    "plan": Key(_plan, None, "channel plan; lanes separated by ';' for multivis"),
    "merge_channels": Key(_opt(int), None, "multivis merge width"),
    "input_side": Key(int, 128, "network input side in pixels"),
    # training
    "batch_size": Key(int, 10, "mini-batch size"),
    "base_lr": Key(float, 1e-4, "initial learning rate"),
    "lr_step_epochs": Key(int, 3, "epochs between learning-rate drops"),
    "lr_multiplier": Key(float, 0.8, "learning-rate drop factor"),
    "weight_decay": Key(float, 0.1, "L2 weight decay on conv/FC weights"),
    "max_epochs": Key(int, 30, "training epochs"),
    "rmsprop_alpha": Key(float, 0.99, "RMSProp smoothing"),
    "rmsprop_eps": Key(float, 1e-8, "RMSProp epsilon"),
    "scale_range": Key(_list(int), (), "train scale-jitter range (min,max); empty means side..1.25*side"),
    "eval_batch_size": Key(int, 50, "batch size for evaluation passes"),
    # evaluation
    "checkpoint": Key(_opt(str), None, "checkpoint to evaluate"),
    "split": Key(str, "test", "manifest split to evaluate"),
    "folds": Key(int, 10, "cross-validation folds"),
    "neu_dir": Key(_opt(str), None, "NEU-CLS image directory (cross-validation)"),
    "networks": Key(_list(str), ("fastinf", "surfnet", "multivis"), "networks to benchmark"),
}


def parse_text(text: str, source: str = "<config>") -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


def resolve(config_path: Optional[str] = None, overrides: Optional[dict] = None) -> dict:
    """Defaults, then the file, then ``overrides`` (raw strings or typed values)."""
    values = {k: spec.default for k, spec in SCHEMA.items()}
    raw = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw.update(parse_text(path.read_text(encoding="utf-8"), str(path)))
    for key, value in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        raw[key] = value
    for key, value in raw.items():
        if isinstance(value, str):
            try:
                value = SCHEMA[key].parse(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        values[key] = value
    return values


def to_text(values: dict) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in values.items())
