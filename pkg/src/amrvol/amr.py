"""Cell-centered AMR field model and the brute-force reference sampler.

Coordinate convention: a cell at refinement level ``L`` has width ``2**L``
in level-0 units, its lower corner ``pos`` is an integer 3-vector aligned
to the level's grid (every component a multiple of ``2**L``), and it
occupies the half-open box ``[pos, pos + 2**L)`` per axis.  Level 0 is the
finest level; larger ``L`` is coarser.

Scalars live at cell centers (``pos + 2**(L-1)``).  Reconstruction blends
them with separable tent (hat) bases:

    B(p) = prod_d max(0, 1 - |p_d - c_d| / 2**L)

``oracle_sample`` evaluates the normalized sum over *all* cells and is the
ground truth every faster sampling path is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Cell:
    """One AMR cell: integer lower corner, refinement level, scalar slot."""

    pos: tuple[int, int, int]
    level: int
    value_index: int = -1

    @property
    def width(self) -> int:
        return 1 << self.level

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.pos, dtype=np.float64) + 0.5 * self.width

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.pos, dtype=np.float64)
        return lo, lo + self.width


class AMRField:
    """Immutable cell-centered AMR scalar field.

    Cells are stored as flat arrays: ``pos`` (n, 3) int64 lower corners,
    ``level`` (n,) int32, ``scalars`` (n,) float32, with cell ``i`` owning
    ``scalars[i]``.  ``world_bounds`` is the bounding box of the union of
    all cell boxes; ``value_range`` the (min, max) of the scalars unless
    overridden by the loader.
    """

    def __init__(self, pos, level, scalars, value_range=None):
        pos = np.atleast_2d(np.asarray(pos, dtype=np.int64))
        level = np.asarray(level, dtype=np.int32)
        scalars = np.asarray(scalars, dtype=np.float32)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("pos must be an (n, 3) integer array")
        if len(pos) == 0:
            raise ValueError("empty field")
        self.pos = pos
        self.level = level
        self.scalars = scalars
        widths = (1 << level.astype(np.int64))
        self.widths = widths.astype(np.float64)
        self.centers = pos.astype(np.float64) + 0.5 * self.widths[:, None]
        lo = pos.min(axis=0).astype(np.float64)
        hi = (pos + widths[:, None]).max(axis=0).astype(np.float64)
        self.world_bounds = (lo, hi)
        if value_range is None and len(scalars):
            value_range = (float(scalars.min()), float(scalars.max()))
        self.value_range = value_range

    def __len__(self) -> int:
        return len(self.pos)

    def cell(self, i: int) -> Cell:
        return Cell(tuple(int(c) for c in self.pos[i]), int(self.level[i]), i)

    @classmethod
    def from_cells(cls, cells: Sequence[Cell], scalars, value_range=None) -> "AMRField":
        pos = [c.pos for c in cells]
        level = [c.level for c in cells]
        return cls(pos, level, scalars, value_range)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    cells: tuple[int, ...] = ()


@dataclass
class ValidationReport:
    violations: list[Violation] = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, message: str, cells: Iterable[int] = ()) -> None:
        self.violations.append(Violation(kind, message, tuple(cells)))


def validate(field: AMRField) -> ValidationReport:
    """Check field invariants; the field is acceptable iff the report is empty.

    Reported kinds: ``count_mismatch``, ``misaligned``, ``duplicate``,
    ``overlap``.  Overlaps are found by aligning each cell down to every
    coarser level present and probing a position hash, which finds exactly
    the pairs whose boxes intersect (a finer box intersects a coarser one
    iff it lies inside it, in power-of-two aligned grids).
    """
    report = ValidationReport()
    n = len(field)
    if len(field.scalars) != n:
        report.add(
            "count_mismatch",
            f"{n} cells but {len(field.scalars)} scalars",
        )

    widths = (1 << field.level.astype(np.int64))
    misaligned = np.nonzero((field.pos % widths[:, None] != 0).any(axis=1))[0]
    for i in misaligned:
        report.add(
            "misaligned",
            f"cell {i} at {tuple(field.pos[i])} not aligned to level-{field.level[i]} grid",
            (int(i),),
        )

    by_key: dict[tuple[int, int, int, int], int] = {}
    for i in range(n):
        key = (int(field.level[i]),) + tuple(int(c) for c in field.pos[i])
        j = by_key.setdefault(key, i)
        if j != i:
            report.add("duplicate", f"cells {j} and {i} coincide at {key[1:]} level {key[0]}", (j, i))

    # cross-level overlaps: cell i (level L) vs any coarser cell containing it
    levels_present = sorted(set(int(l) for l in field.level))
    pos_at_level = {
        L: {tuple(int(c) for c in field.pos[i]): i for i in range(n) if field.level[i] == L}
        for L in levels_present
    }
    for i in range(n):
        li = int(field.level[i])
        for L in levels_present:
            if L <= li:
                continue
            w = 1 << L
            anchor = tuple(int(c) for c in (field.pos[i] // w) * w)
            j = pos_at_level[L].get(anchor)
            if j is not None:
                report.add(
                    "overlap",
                    f"cell {i} (level {li}) lies inside cell {j} (level {L})",
                    (int(min(i, j)), int(max(i, j))),
                )
    return report


def oracle_sample(field: AMRField, p) -> Optional[float]:
    """Brute-force tent-basis reconstruction over all cells.

    Returns ``sum_i B_i(p) v_i / sum_i B_i(p)``, or None where every basis
    weight vanishes.  Quadratic in field size by design: this is the
    reference the accelerated samplers are verified against.
    """
    p = np.asarray(p, dtype=np.float64)
    w = _all_weights(field, p[None, :])[0]
    total = w.sum()
    if total <= 0.0:
        return None
    return float((w * field.scalars).sum() / total)


def oracle_sample_many(field: AMRField, points, chunk: int = 64):
    """Vectorized :func:`oracle_sample` over an (m, 3) point array.

    Returns ``(values, has_value)``; ``values`` is 0 where ``has_value`` is
    False.
    """
    points = np.asarray(points, dtype=np.float64)
    m = len(points)
    values = np.zeros(m)
    has = np.zeros(m, dtype=bool)
    scal = field.scalars.astype(np.float64)
    for start in range(0, m, chunk):
        pts = points[start:start + chunk]
        w = _all_weights(field, pts)
        tot = w.sum(axis=1)
        nz = tot > 0.0
        vals = np.zeros(len(pts))
        vals[nz] = (w[nz] @ scal) / tot[nz]
        values[start:start + chunk] = vals
        has[start:start + chunk] = nz
    return values, has


def _all_weights(field: AMRField, pts: np.ndarray) -> np.ndarray:
    # (m, n) tent weights of every cell at every point
    w = np.ones((len(pts), len(field)))
    for d in range(3):
        t = 1.0 - np.abs(pts[:, d, None] - field.centers[None, :, d]) / field.widths[None, :]
        np.maximum(t, 0.0, out=t)
        w *= t
    return w
