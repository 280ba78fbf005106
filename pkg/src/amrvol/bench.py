"""Step-size sweep benchmarking: median frame times over a dt grid."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .camera import Channel
from .render import RenderSettings, Scene, frame_time_ms, render_frame


@dataclass
class BenchPlan:
    dt_min: float = 0.25
    dt_max: float = 4.0
    samples: int = 5
    spacing: str = "log"       # "linear" | "log"
    repetitions: int = 5
    warmup: int = 2

    def __post_init__(self):
        if self.dt_min <= 0.0:
            raise ValueError("dt_min must be positive")
        if self.dt_max < self.dt_min:
            raise ValueError("dt_max must be >= dt_min")
        if self.samples < 2:
            raise ValueError("need at least 2 dt samples")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing must be 'linear' or 'log'")
        if self.repetitions < 1 or self.warmup < 0:
            raise ValueError("repetitions must be >= 1 and warmup >= 0")

    def dt_values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.dt_min, self.dt_max, self.samples)
        return np.linspace(self.dt_min, self.dt_max, self.samples)


def run_sweep(scene: Scene, channels: Sequence[Channel], settings: RenderSettings,
              plan: BenchPlan, workers=None) -> list[tuple[float, float]]:
    """Measure each dt: warmup frames, then the median of repeated frames.

    Returns (dt, median frame time ms) rows sorted ascending by dt; the
    frame time of a stereo/multi-channel frame is that of its slowest
    channel.
    """
    rows = []
    for dt in plan.dt_values():
        s = replace(settings, dt=float(dt))
        for _ in range(plan.warmup):
            render_frame(channels, scene, s, workers=workers)
        times = []
        for _ in range(plan.repetitions):
            stats = render_frame(channels, scene, s, workers=workers)
            times.append(frame_time_ms(stats))
        rows.append((float(dt), statistics.median(times)))
    rows.sort()
    return rows
