"""Builders for the three inspection networks.

Channel widths are not given for any of the networks, so every builder takes
an overridable plan; the defaults below are our own choices.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .spec import BuildError, LayerSpec, NetworkSpec, conv_block, residual_block, validate
from .state import NetworkState, init_state

# (kernel, stride) of the nine SurfNet convolutions; every 1x1 carries a shortcut.
SURFNET_LAYOUT = ((5, 2), (1, 1), (5, 2), (1, 1), (5, 2), (1, 1), (1, 1), (1, 1), (1, 1))
SURFNET_PLAN = (32, 32, 64, 64, 128, 128, 128, 128, 128)

FASTINF_LAYOUT = ((3, 2), (1, 1), (3, 2))
FASTINF_PLAN = (8, 8, 1024)

# Lane entries are (kernel, stride) for convolutions or "maxpool".
MULTIVIS_LAYOUTS = (
    ((3, 2), (1, 1), (3, 2), (1, 1), (3, 2)),
    ((5, 2), (1, 1), (5, 2), (1, 1), (3, 2)),
    ((3, 2), (1, 1), "maxpool", (3, 2)),
)
MULTIVIS_PLANS = (
    (32, 32, 64, 64, 64),
    (32, 32, 64, 64, 64),
    (32, 32, 64),
)
MULTIVIS_MERGE = 128


def _head(spec_lanes: int, merge_in: Optional[int], merge_out: Optional[int]) -> tuple:
    head: list[LayerSpec] = []
    if spec_lanes > 1:
        head.append(LayerSpec("concat", "concat"))
    if merge_out is not None:
        head.extend(conv_block("merge", merge_in, merge_out, 1, 1))
    head.append(LayerSpec("fc", "fc"))
    return tuple(head)


def _finish(spec: NetworkSpec, seed) -> tuple[NetworkSpec, NetworkState]:
    validate(spec)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return spec, init_state(spec, rng)


def surfnet_spec(channels_plan: Sequence[int] = SURFNET_PLAN, input_side: int = 128,
                 class_count: int = 2, in_channels: int = 1) -> NetworkSpec:
    plan = tuple(int(c) for c in channels_plan)
    if len(plan) != len(SURFNET_LAYOUT):
        raise BuildError(f"SurfNet needs {len(SURFNET_LAYOUT)} channel entries, got {len(plan)}")
    lane: list[LayerSpec] = []
    cin = in_channels
    for i, ((k, s), cout) in enumerate(zip(SURFNET_LAYOUT, plan)):
        name = f"l0.b{i}"
        if k == 1:
            if cout != cin:
                raise BuildError(
                    f"{name}: shortcut-wrapped 1x1 conv must keep channels ({cin} -> {cout})"
                )
            lane.extend(residual_block(name, cout))
        else:
            lane.extend(conv_block(name, cin, cout, k, s))
        cin = cout
    return NetworkSpec("surfnet", (tuple(lane),), _head(1, None, None), class_count,
                       input_side, in_channels, plan={"channels": list(plan)})


def build_surfnet(channels_plan: Sequence[int] = SURFNET_PLAN, input_side: int = 128,
                  class_count: int = 2, seed=0, in_channels: int = 1):
    """Nine conv blocks (5x5/2 and shortcut 1x1 alternating, then three 1x1) and an FC."""
    return _finish(surfnet_spec(channels_plan, input_side, class_count, in_channels), seed)


def fastinf_spec(width_plan: Sequence[int] = FASTINF_PLAN, input_side: int = 128,
                 class_count: int = 2, in_channels: int = 1) -> NetworkSpec:
    plan = tuple(int(c) for c in width_plan)
    if len(plan) != len(FASTINF_LAYOUT):
        raise BuildError(f"FastInf needs {len(FASTINF_LAYOUT)} width entries, got {len(plan)}")
    lane: list[LayerSpec] = []
    cin = in_channels
    for i, ((k, s), cout) in enumerate(zip(FASTINF_LAYOUT, plan)):
        lane.extend(conv_block(f"l0.b{i}", cin, cout, k, s))
        cin = cout
    return NetworkSpec("fastinf", (tuple(lane),), _head(1, None, None), class_count,
                       input_side, in_channels, plan={"channels": list(plan)})


def build_fastinf(width_plan: Sequence[int] = FASTINF_PLAN, input_side: int = 128,
                  class_count: int = 2, seed=0, in_channels: int = 1):
    return _finish(fastinf_spec(width_plan, input_side, class_count, in_channels), seed)


def multivis_spec(lane_plans: Sequence[Sequence[int]] = MULTIVIS_PLANS, input_side: int = 128,
                  class_count: int = 2, merge_channels: int = MULTIVIS_MERGE,
                  in_channels: int = 1, lane_layouts=MULTIVIS_LAYOUTS) -> NetworkSpec:
    if len(lane_plans) != len(lane_layouts):
        raise BuildError(f"expected {len(lane_layouts)} lane plans, got {len(lane_plans)}")
    lanes = []
    for li, (layout, plan) in enumerate(zip(lane_layouts, lane_plans)):
        convs = [e for e in layout if e != "maxpool"]
        if len(plan) != len(convs):
            raise BuildError(f"lane {li} has {len(convs)} convolutions but {len(plan)} widths")
        widths = iter(plan)
        cin = in_channels
        lane: list[LayerSpec] = []
        for bi, entry in enumerate(layout):
            name = f"l{li}.b{bi}"
            if entry == "maxpool":
                lane.append(LayerSpec("maxpool", f"{name}.pool", 2, 2, 0, cin, cin))
                continue
            k, s = entry
            cout = int(next(widths))
            lane.extend(conv_block(name, cin, cout, k, s))
            cin = cout
        lanes.append(tuple(lane))
    merge_in = sum(int(p[-1]) for p in lane_plans)
    spec = NetworkSpec("multivis", tuple(lanes), _head(len(lanes), merge_in, int(merge_channels)),
                       class_count, input_side, in_channels,
                       plan={"lanes": [list(map(int, p)) for p in lane_plans],
                             "merge": int(merge_channels)})
    return spec


def build_multivis(lane_plans: Sequence[Sequence[int]] = MULTIVIS_PLANS, input_side: int = 128,
                   class_count: int = 2, merge_channels: int = MULTIVIS_MERGE, seed=0,
                   in_channels: int = 1, lane_layouts=MULTIVIS_LAYOUTS):
    """Three parallel lanes reaching 1/8 resolution, concatenated, merged by a 1x1 block, then FC."""
    spec = multivis_spec(lane_plans, input_side, class_count, merge_channels, in_channels,
                         lane_layouts)
    return _finish(spec, seed)


BUILDERS = {
    "surfnet": (surfnet_spec, SURFNET_PLAN),
    "fastinf": (fastinf_spec, FASTINF_PLAN),
    "multivis": (multivis_spec, MULTIVIS_PLANS),
}


def make_spec(name: str, plan=None, input_side: int = 128, class_count: int = 2,
              merge_channels: Optional[int] = None) -> NetworkSpec:
    """Look up a builder by network name."""
    try:
        fn, default = BUILDERS[name]
    except KeyError:
        raise BuildError(f"unknown network {name!r}; choose from {sorted(BUILDERS)}") from None
    plan = default if plan is None else plan
    if name == "multivis":
        spec = fn(plan, input_side, class_count,
                  MULTIVIS_MERGE if merge_channels is None else merge_channels)
    else:
        spec = fn(plan, input_side, class_count)
    validate(spec)
    return spec
