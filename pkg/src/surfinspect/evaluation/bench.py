"""Single-image inference latency."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data.transforms import test_preprocess
from ..networks import forward
from ..networks.spec import NetworkSpec
from ..networks.state import NetworkState

RUNS = 10
MIN_WARMUP = 3
SCOPE = "decoded uint8 image -> test preprocessing -> eval forward -> logits; disk I/O excluded"


@dataclass
class LatencyReport:
    network: str
    runs_ms: list
    batch_size: int = 1
    warmup: int = MIN_WARMUP

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.runs_ms))

    @property
    def min_ms(self) -> float:
        return float(np.min(self.runs_ms))

    def to_text(self) -> str:
        runs = ",".join(f"{v:.4f}" for v in self.runs_ms)
        return (f"# scope: {SCOPE}\n# batch={self.batch_size} warmup={self.warmup} runs={len(self.runs_ms)}\n"
                f"{self.network}\tmean_ms={self.mean_ms:.4f}\tmin_ms={self.min_ms:.4f}\truns_ms={runs}\n")


def benchmark_inference(spec: NetworkSpec, state: NetworkState, input_side: Optional[int] = None,
                        batch_size: int = 1, warmup: int = MIN_WARMUP, runs: int = RUNS,
                        image: Optional[np.ndarray] = None) -> LatencyReport:
    """Time ``runs`` single-image forwards after ``warmup`` untimed ones."""
    if batch_size != 1:
        raise ValueError("latency is measured per image: batch size must be 1")
    if warmup < MIN_WARMUP:
        raise ValueError(f"at least {MIN_WARMUP} warm-up runs are required")
    if runs != RUNS:
        raise ValueError(f"the latency protocol averages exactly {RUNS} runs")
    side = input_side or spec.input_side
    if side != spec.input_side:
        raise ValueError(f"{spec.name} is built for {spec.input_side}px inputs, not {side}")
    if image is None:
        image = np.random.default_rng(0).integers(0, 256, (side, side), dtype=np.uint8)

    def once():
        x = test_preprocess(image, side)[None]
        return forward(spec, state, x, mode="eval")

    for _ in range(warmup):
        once()
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        once()
        times.append((time.perf_counter() - t0) * 1e3)
    return LatencyReport(spec.name, times, batch_size, warmup)
