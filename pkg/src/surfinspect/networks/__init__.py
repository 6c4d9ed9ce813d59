"""SurfNet, FastInf and MultiVis: layer graphs, executors and checkpoints."""
from .builders import (
    FASTINF_PLAN,
    MULTIVIS_MERGE,
    MULTIVIS_PLANS,
    SURFNET_PLAN,
    build_fastinf,
    build_multivis,
    build_surfnet,
    fastinf_spec,
    make_spec,
    multivis_spec,
    surfnet_spec,
)
from .checkpoint import CheckpointError, checkpoint_bytes, load_checkpoint, save_checkpoint
from .executor import ModeError, backward, forward, predict
from .spec import BuildError, LayerSpec, NetworkSpec, predict_shapes, validate
from .state import NetworkState, init_state

__all__ = [
    "FASTINF_PLAN", "MULTIVIS_MERGE", "MULTIVIS_PLANS", "SURFNET_PLAN", "BuildError",
    "CheckpointError", "LayerSpec", "ModeError", "NetworkSpec", "NetworkState", "backward",
    "build_fastinf", "build_multivis", "build_surfnet", "checkpoint_bytes", "fastinf_spec",
    "forward", "init_state", "load_checkpoint", "make_spec", "multivis_spec", "predict",
    "predict_shapes", "save_checkpoint", "surfnet_spec", "validate",
]
