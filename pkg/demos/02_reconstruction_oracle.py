"""Fast per-region sampling versus the brute-force oracle.

The oracle sums tent-basis weights over *all* cells; the fast sampler
only visits the bricks listed by the region containing the point.  The
two agree to floating-point noise, and the blend stays continuous across
refinement-level boundaries.
"""

import time

import numpy as np

from amrvol import BrickStructure, oracle_sample_many, synth
from amrvol.sampling import sample_at

field = synth.generate(blobs=3, levels=3, threshold=0.12, seed=7, root=8)
structure = BrickStructure.build(field)

rng = np.random.default_rng(0)
lo, hi = field.world_bounds
pts = rng.uniform(lo, hi, size=(2000, 3))

t0 = time.perf_counter()
oracle_vals, has = oracle_sample_many(field, pts)
t_oracle = time.perf_counter() - t0

t0 = time.perf_counter()
fast_vals = np.array([sample_at(structure, field, p) or 0.0 for p in pts])
t_fast = time.perf_counter() - t0

err = np.abs(fast_vals[has] - oracle_vals[has]).max()
print(f"{has.sum()} in-domain points of {len(pts)}")
print(f"oracle (all {len(field)} cells): {t_oracle:.2f} s")
print(f"fast (per-region bricks):        {t_fast:.2f} s")
print(f"max |fast - oracle| = {err:.2e}")

# continuity across a refinement boundary: walk a short line through the
# domain and confirm there are no jumps anywhere near level transitions
p0 = 0.5 * (lo + hi) - [6, 0, 0]
steps = np.linspace(0.0, 12.0, 400)
vals = [sample_at(structure, field, p0 + [s, 0, 0]) for s in steps]
vals = np.array([v if v is not None else np.nan for v in vals])
jumps = np.nanmax(np.abs(np.diff(vals)))
print(f"\nlargest step between adjacent samples on a probe line: {jumps:.4f}")
print("(bounded by the local field slope; no discontinuities at level changes)")
