"""Render one frame offline and write PPM + PNG images.

Demonstrates the full pipeline: transfer-function classification,
adaptive front-to-back marching, and the optional iso-surface and slice
modes layered into the same frame.
"""

import numpy as np

from amrvol import BrickStructure, Channel, RenderSettings, TransferFunction
from amrvol import look_at, perspective, synth
from amrvol.io_formats import write_image
from amrvol.render import Scene, render_frame

field = synth.generate(blobs=4, levels=3, threshold=0.1, seed=42, root=8)
structure = BrickStructure.build(field)

lo, hi = field.value_range
entries = np.zeros((32, 4))
t = np.linspace(0, 1, 32)
entries[:, 0] = t                       # red ramps up
entries[:, 1] = 0.2 + 0.6 * t ** 2
entries[:, 2] = 1.0 - t                 # blue ramps down
entries[:, 3] = t ** 1.5                # denser regions more opaque
tf = TransferFunction(entries, (lo, hi), opacity_scale=1.4)
scene = Scene(field, structure, tf)

blo, bhi = field.world_bounds
center = 0.5 * (blo + bhi)
extent = float((bhi - blo).max())
eye = center + np.array([0.9, 0.6, 1.3]) / np.linalg.norm([0.9, 0.6, 1.3]) * 2.2 * extent
view = look_at(eye, center, (0, 1, 0))
proj = perspective(45.0, 1.0, 0.01 * extent, 100.0 * extent)

ch = Channel(view=view, proj=proj, width=480, height=480)
stats = render_frame([ch], scene, RenderSettings(dt=0.5))
write_image("volume.ppm", ch.framebuffer)
write_image("volume.png", ch.framebuffer)
print(f"volume only: {stats[0].frame_time_ms:.0f} ms, "
      f"{stats[0].samples} samples -> volume.ppm / volume.png")

iso_and_slice = RenderSettings(
    dt=0.5,
    iso=True, iso_value=0.5 * (lo + hi),
    slice=True, slice_normal=(0.0, 0.0, 1.0), slice_offset=float(center[2]),
    background=(0.04, 0.04, 0.08, 1.0),
)
stats = render_frame([ch], scene, iso_and_slice)
write_image("iso_slice.png", ch.framebuffer)
print(f"iso + slice: {stats[0].frame_time_ms:.0f} ms -> iso_slice.png")
