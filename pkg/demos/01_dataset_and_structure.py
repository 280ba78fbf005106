"""Build a synthetic AMR dataset and inspect its render structure.

Cells at several refinement levels are meshed into same-level bricks;
the overlapping tent-basis domains of those bricks are decomposed into
disjoint active brick regions (ABRs) that the ray marcher traverses.
"""

import numpy as np

from amrvol import BrickStructure, build_bricks, extended_domain, synth, validate

field = synth.generate(blobs=4, levels=3, threshold=0.1, seed=42, root=8)
report = validate(field)
print(f"cells: {len(field)}  (valid: {report.ok})")
print(f"levels: {[int(l) for l in np.unique(field.level)]}  value range: "
      f"[{field.value_range[0]:.3f}, {field.value_range[1]:.3f}]")

bricks = build_bricks(field)
print(f"\nbricks: {len(bricks)}")
for level in sorted({b.level for b in bricks}):
    per = [b for b in bricks if b.level == level]
    cells = sum(int(np.prod(b.size)) for b in per)
    print(f"  level {level}: {len(per):4d} bricks covering {cells:6d} cells")

b = bricks[0]
print(f"\nfirst brick: lower {tuple(map(int, b.lower))}, "
      f"size {tuple(map(int, b.size))}, cell width {b.width}")
print(f"  data box        {b.data_bounds.lo} .. {b.data_bounds.hi}")
print(f"  extended domain {extended_domain(b).lo} .. {extended_domain(b).hi}"
      "   (grown half a cell per side)")

structure = BrickStructure.build(field)
counts = [len(a.brick_ids) for a in structure.abrs]
print(f"\nactive brick regions: {len(structure.abrs)}")
print(f"  bricks per region: min {min(counts)}, max {max(counts)}, "
      f"mean {np.mean(counts):.2f}")
print(f"  regions touching >1 brick: {sum(c > 1 for c in counts)} "
      "(these blend across brick boundaries)")
