"""Off-axis frusta and stereo pairs.

Head-tracked stereo walls need asymmetric frusta whose eye point is not
centered on the image plane.  Rays are generated backwards through
inverse(proj @ view), so they follow whatever frustum the matrices
encode; shifting the eye sideways while keeping the projection window
fixed produces a correct off-axis pair.
"""

import numpy as np

from amrvol import Channel, RenderSettings, frustum, look_at, ray_for_ndc, translate
from amrvol import BrickStructure, synth
from amrvol.cli import default_tf
from amrvol.io_formats import write_image
from amrvol.render import Scene, render_frame

field = synth.generate(blobs=4, levels=3, threshold=0.12, seed=9, root=8)
scene = Scene(field, BrickStructure.build(field), default_tf(field))

blo, bhi = field.world_bounds
center = 0.5 * (blo + bhi)
extent = float((bhi - blo).max())

# a "projection wall" in front of the viewer: fixed window, movable eye
near, far = 0.05 * extent, 50.0 * extent
half = 0.35 * extent
eye = center + np.array([0.0, 0.0, 2.0 * extent])
view = look_at(eye, center, (0, 1, 0))

# demonstrate the off-axis property: corner rays of an asymmetric frustum
off = frustum(-0.2 * half, half, -half, half, near, far)
for ndc in ((-1, -1), (1, 1)):
    ray = ray_for_ndc(view, off, *ndc)
    print(f"ndc {ndc}: origin {np.round(ray.origin, 2)}, dir {np.round(ray.direction, 3)}")
print("(the ray hull matches the asymmetric window; no recentering happens)")

ipd = 0.03 * extent  # exaggerated eye separation for visible parallax
proj = frustum(-half, half, -half, half, near, far)
left = Channel(view=translate((+ipd / 2, 0, 0)) @ view, proj=proj, width=320, height=320)
right = Channel(view=translate((-ipd / 2, 0, 0)) @ view, proj=proj, width=320, height=320)

stats = render_frame([left, right], scene, RenderSettings(dt=1.0))
pair = np.concatenate([left.framebuffer, right.framebuffer], axis=1)
write_image("stereo.png", pair)
slowest = max(s.frame_time_ms for s in stats)
print(f"\nstereo pair rendered: slowest channel {slowest:.0f} ms -> stereo.png")
print("(frame rate of a multi-wall setup is gated by its slowest viewport)")
