"""Tent-basis reconstruction: per-cell weights and the per-region sampler.

The per-region sampler visits only the bricks a region lists.  Within one
brick (a regular same-level grid) at most two cell centers per axis can
carry nonzero tent weight at a point, so a sample gathers at most 8 cells
per brick.  The region invariant guarantees every cell with nonzero weight
is reachable this way, which makes the result identical to the brute-force
:func:`amrvol.amr.oracle_sample`.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .amr import AMRField, Cell
from .bricks import BrickStructure


def basis_weight(cell: Cell, p) -> float:
    """Separable tent weight of ``cell`` at point ``p``.

    Peak 1 at the cell center, falling linearly to 0 at one cell width
    from the center per axis; the support equals the cell box grown by
    half a cell per side.
    """
    p = np.asarray(p, dtype=np.float64)
    w = float(cell.width)
    c = cell.center
    t = 1.0 - np.abs(p - c) / w
    if (t <= 0.0).any():
        return 0.0
    return float(t.prod())


def sample(structure: BrickStructure, field: AMRField, abr_id: int, p) -> Optional[float]:
    """Reconstruct the field at ``p`` using only the region's bricks.

    ``p`` must lie inside the region's bounds (checked by assertion).
    Returns None where the weight sum vanishes (holes in sparse fields).
    """
    p = np.asarray(p, dtype=np.float64)
    abr = structure.abrs[abr_id]
    assert abr.bounds.contains(p), "sample point outside the region bounds"

    acc_w = 0.0
    acc_v = 0.0
    for bid in abr.brick_ids:
        w, v = _brick_gather(structure, int(bid), p)
        acc_w += w
        acc_v += v
    if acc_w <= 0.0:
        return None
    return acc_v / acc_w


def sample_at(structure: BrickStructure, field: AMRField, p) -> Optional[float]:
    """Locate the region containing ``p`` and sample there."""
    abr_id = structure.locate(p)
    if abr_id < 0:
        return None
    return sample(structure, field, abr_id, p)


def _brick_gather(structure: BrickStructure, bid: int, p: np.ndarray) -> tuple[float, float]:
    """(weight sum, weighted value sum) of one brick's cells at ``p``."""
    lower = structure.brick_lower[bid]
    w = structure.brick_width[bid]
    size = structure.brick_size[bid]
    off = structure.brick_val_off[bid]
    vals = structure.brick_values

    rel = (p - lower) / w - 0.5        # fractional cell-center coordinates
    i0 = np.floor(rel).astype(np.int64)
    acc_w = 0.0
    acc_v = 0.0
    for dz in (0, 1):
        iz = i0[2] + dz
        if iz < 0 or iz >= size[2]:
            continue
        wz = 1.0 - abs(rel[2] - iz)
        if wz <= 0.0:
            continue
        for dy in (0, 1):
            iy = i0[1] + dy
            if iy < 0 or iy >= size[1]:
                continue
            wy = 1.0 - abs(rel[1] - iy)
            if wy <= 0.0:
                continue
            for dx in (0, 1):
                ix = i0[0] + dx
                if ix < 0 or ix >= size[0]:
                    continue
                wx = 1.0 - abs(rel[0] - ix)
                if wx <= 0.0:
                    continue
                wgt = wx * wy * wz
                idx = off + ix + size[0] * (iy + size[1] * iz)
                acc_w += wgt
                acc_v += wgt * float(vals[idx])
    return acc_w, acc_v
