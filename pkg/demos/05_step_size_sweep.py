"""Sweep the base step scale dt and chart frame time vs. sampling rate.

dt scales the marching step relative to the local finest cell width, so
it trades sampling quality against speed.  Cost falls as dt grows, but
past dt=2 each region contributes only a handful of samples and the
returns diminish while quality keeps degrading.
"""

from amrvol import BrickStructure, Channel, RenderSettings, look_at, perspective, synth
from amrvol.bench import BenchPlan, run_sweep
from amrvol.cli import default_tf
from amrvol.io_formats import write_bench_csv
from amrvol.render import Scene

import numpy as np

field = synth.generate(blobs=4, levels=3, threshold=0.09, seed=3, root=8)
scene = Scene(field, BrickStructure.build(field), default_tf(field))

lo, hi = field.world_bounds
center = 0.5 * (lo + hi)
extent = float((hi - lo).max())
eye = center + np.array([1.0, 0.7, 1.5]) / np.linalg.norm([1.0, 0.7, 1.5]) * 2.3 * extent
ch = Channel(view=look_at(eye, center, (0, 1, 0)),
             proj=perspective(45.0, 1.0, 0.01 * extent, 100.0 * extent),
             width=512, height=512)

plan = BenchPlan(dt_min=0.25, dt_max=4.0, samples=5, spacing="log",
                 repetitions=3, warmup=1)
rows = run_sweep(scene, [ch], RenderSettings(), plan)
write_bench_csv("dt_sweep.csv", rows)

print(f"{'dt':>8} {'ms':>10} {'fps':>8}")
for dt, ms in rows:
    print(f"{dt:8.3f} {ms:10.1f} {1000.0 / ms:8.2f}")
print("-> dt_sweep.csv")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dts = [r[0] for r in rows]
    fps = [1000.0 / r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(dts, fps, "o-")
    ax.set_xscale("log")
    ax.set_xlabel("base step scale dt")
    ax.set_ylabel("frames per second")
    ax.set_title("frame rate vs. sampling rate")
    fig.tight_layout()
    fig.savefig("dt_sweep.png", dpi=130)
    print("-> dt_sweep.png")
except ImportError:
    pass
