"""Synthetic AMR datasets: smooth blob fields with spread-driven refinement.

An analytic sum of seeded Gaussian blobs is evaluated on a coarse root
grid; any cell whose 8-corner value spread exceeds the threshold splits
into its 8 children, recursively down to level 0.  This mimics how AMR
codes concentrate resolution where the field varies, and gives the test
suite deterministic multi-level fields of controllable size.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .amr import AMRField
from .io_formats import write_cells, write_config, write_scalars

_CORNERS = np.stack(np.meshgrid([0, 1], [0, 1], [0, 1], indexing="ij"), -1).reshape(-1, 3)


@dataclass
class BlobField:
    """Callable sum of isotropic Gaussians over (n, 3) point arrays."""

    centers: np.ndarray
    sigmas: np.ndarray
    amplitudes: np.ndarray

    def __call__(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.zeros(len(points))
        for c, s, a in zip(self.centers, self.sigmas, self.amplitudes):
            d2 = ((points - c) ** 2).sum(axis=1)
            out += a * np.exp(-d2 / (2.0 * s * s))
        return out


def make_blobs(k: int, extent: float, seed: int) -> BlobField:
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.2 * extent, 0.8 * extent, size=(k, 3))
    sigmas = rng.uniform(0.08 * extent, 0.2 * extent, size=k)
    amps = rng.uniform(0.5, 1.0, size=k)
    return BlobField(centers, sigmas, amps)


def generate(blobs: int = 4, levels: int = 3, threshold: float = 0.08,
             seed: int = 0, root: int = 8) -> AMRField:
    """Build a refined field on the domain [0, root * 2**(levels-1))^3."""
    if levels < 1:
        raise ValueError("need at least one level")
    if root < 1:
        raise ValueError("root grid must have at least one cell per axis")
    top = levels - 1
    extent = float(root << top)
    field = make_blobs(blobs, extent, seed)

    g = np.arange(root)
    cur = (np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
           * (1 << top)).astype(np.int64)
    level = top
    out_pos = []
    out_level = []
    while True:
        w = 1 << level
        corners = (cur[:, None, :] + _CORNERS[None, :, :] * w).reshape(-1, 3)
        vals = field(corners).reshape(-1, 8)
        spread = vals.max(axis=1) - vals.min(axis=1)
        split = (spread > threshold) if level > 0 else np.zeros(len(cur), dtype=bool)
        keep = cur[~split]
        out_pos.append(keep)
        out_level.append(np.full(len(keep), level, dtype=np.int32))
        if not split.any():
            break
        half = w >> 1
        cur = (cur[split][:, None, :] + _CORNERS[None, :, :] * half).reshape(-1, 3)
        level -= 1

    pos = np.concatenate(out_pos)
    lvl = np.concatenate(out_level)
    order = np.lexsort((pos[:, 0], pos[:, 1], pos[:, 2], lvl))
    pos, lvl = pos[order], lvl[order]
    centers = pos.astype(np.float64) + 0.5 * (1 << lvl.astype(np.int64))[:, None]
    scalars = field(centers).astype(np.float32)
    return AMRField(pos, lvl, scalars)


def write_dataset(config_path, field: AMRField) -> Path:
    """Emit <stem>.cells / <stem>.scalars next to the config and write it."""
    config_path = Path(config_path)
    stem = config_path.stem
    cells_name = f"{stem}.cells"
    scalars_name = f"{stem}.scalars"
    write_cells(config_path.parent / cells_name, field.pos, field.level)
    write_scalars(config_path.parent / scalars_name, field.scalars)
    write_config(config_path, cells_name, scalars_name)
    return config_path
