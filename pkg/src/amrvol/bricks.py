"""Bricks, overlap-region decomposition, and ray traversal structure.

Same-level cells are greedily meshed into axis-aligned *bricks*.  A brick's
cells' tent bases reach half a cell beyond its data box, so each brick owns
an *extended domain* grown by ``2**L / 2`` per side.  Extended domains of
neighboring bricks overlap; a volume integrator needs disjoint intervals,
so the union of all extended domains is decomposed into non-overlapping
axis-aligned boxes of constant overlapping-brick set: *active brick
regions* (ABRs).  Each region stores the bricks whose extended domain
covers it, its scalar range (for transfer-function culling) and the finest
level present (which scales the local ray-marching step).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .amr import AMRField
from .transfer import TransferFunction


class Box(NamedTuple):
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p, half_open: bool = False) -> bool:
        p = np.asarray(p, dtype=np.float64)
        if half_open:
            return bool((self.lo <= p).all() and (p < self.hi).all())
        return bool((self.lo <= p).all() and (p <= self.hi).all())

    def contains_open(self, p) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool((self.lo < p).all() and (p < self.hi).all())

    def overlaps_open(self, other: "Box") -> bool:
        """True iff the intersection has positive volume."""
        return bool((self.lo < other.hi).all() and (other.lo < self.hi).all())


@dataclass
class Brick:
    """Axis-aligned block of contiguous same-level cells.

    ``cell_ids`` maps brick-local positions in x-fastest order
    (``lx + size_x * (ly + size_y * lz)``) to field cell indices.
    """

    lower: np.ndarray          # integer lower corner, level-0 units
    level: int
    size: np.ndarray           # cells per axis
    cell_ids: np.ndarray

    @property
    def width(self) -> float:
        return float(1 << self.level)

    @property
    def data_bounds(self) -> Box:
        lo = self.lower.astype(np.float64)
        return Box(lo, lo + self.size * self.width)

    @property
    def domain(self) -> Box:
        return extended_domain(self)


def extended_domain(brick: Brick) -> Box:
    """Brick data box grown by half a cell width on every side.

    This is exactly the union of the supports of the brick's cells' tent
    bases, and the overlap that the region decomposition resolves.
    """
    lo, hi = brick.data_bounds
    h = 0.5 * brick.width
    return Box(lo - h, hi + h)


@dataclass
class ActiveBrickRegion:
    """One box of the disjoint decomposition of all extended brick domains.

    ``brick_ids`` is exactly the set of bricks whose extended domain has a
    positive-volume intersection with ``bounds``; every point of the region
    is covered by the same brick set.
    """

    bounds: Box
    brick_ids: np.ndarray
    finest_level: int
    value_range: Optional[tuple[float, float]] = None


def build_bricks(field: AMRField) -> list[Brick]:
    """Deterministic greedy meshing of same-level cells into bricks.

    Per level: sort cells by (z, y, x) in grid units, grow maximal runs
    along x, merge equal runs on adjacent y rows into plates, merge equal
    plates on adjacent z layers into bricks.  Every cell lands in exactly
    one brick.
    """
    bricks: list[Brick] = []
    for L in np.unique(field.level).tolist():
        sel = np.nonzero(field.level == L)[0]
        w = 1 << L
        grid = field.pos[sel] // w
        order = np.lexsort((grid[:, 0], grid[:, 1], grid[:, 2]))
        sel, grid = sel[order], grid[order]

        # maximal runs along x, keyed by (z, y)
        runs = []  # (z, y, x0, x1, cell ids in x order)
        i = 0
        n = len(sel)
        while i < n:
            j = i + 1
            while (
                j < n
                and grid[j, 2] == grid[i, 2]
                and grid[j, 1] == grid[i, 1]
                and grid[j, 0] == grid[j - 1, 0] + 1
            ):
                j += 1
            runs.append((int(grid[i, 2]), int(grid[i, 1]), int(grid[i, 0]),
                         int(grid[j - 1, 0]) + 1, list(sel[i:j])))
            i = j

        # merge runs of equal x-extent on adjacent y rows into plates
        plates = []  # (z, x0, x1, y0, y1, ids in x-then-y order)
        open_plates: dict[tuple[int, int], list] = {}
        for z, y, x0, x1, ids in runs:
            pl = open_plates.get((x0, x1))
            if pl is not None and pl[0] == z and pl[4] == y:
                pl[4] = y + 1
                pl[5].extend(ids)
            else:
                if pl is not None:
                    plates.append(tuple(pl))
                open_plates[(x0, x1)] = [z, x0, x1, y, y + 1, list(ids)]
        plates.extend(tuple(pl) for pl in open_plates.values())
        plates.sort(key=lambda p: (p[0], p[3], p[1]))

        # merge equal plates on adjacent z layers into bricks
        open_slabs: dict[tuple[int, int, int, int], list] = {}
        closed = []
        for z, x0, x1, y0, y1, ids in plates:
            sl = open_slabs.get((x0, x1, y0, y1))
            if sl is not None and sl[5] == z:
                sl[5] = z + 1
                sl[6].extend(ids)
            else:
                if sl is not None:
                    closed.append(sl)
                open_slabs[(x0, x1, y0, y1)] = [x0, x1, y0, y1, z, z + 1, list(ids)]
        closed.extend(open_slabs.values())

        for x0, x1, y0, y1, z0, z1, ids in closed:
            bricks.append(Brick(
                lower=np.array([x0, y0, z0], dtype=np.int64) * w,
                level=int(L),
                size=np.array([x1 - x0, y1 - y0, z1 - z0], dtype=np.int64),
                cell_ids=np.asarray(ids, dtype=np.int64),
            ))

    bricks.sort(key=lambda b: (b.level, b.lower[2], b.lower[1], b.lower[0]))
    return bricks


def build_abrs(bricks: Sequence[Brick]) -> list[ActiveBrickRegion]:
    """Decompose the union of extended domains into constant-set regions.

    Recursive kd-style subdivision: a region splits at the face coordinate
    (of a partially-overlapping domain) closest to the region's spatial
    median, and becomes a leaf once every intersecting domain fully
    contains it.  Uncovered space is not stored.  Face coordinates are
    multiples of 0.5, so the arithmetic below is exact.
    """
    if not bricks:
        return []
    dlo = np.stack([extended_domain(b).lo for b in bricks])
    dhi = np.stack([extended_domain(b).hi for b in bricks])
    levels = np.array([b.level for b in bricks])

    abrs: list[ActiveBrickRegion] = []
    stack = [(dlo.min(axis=0), dhi.max(axis=0), np.arange(len(bricks)))]
    while stack:
        lo, hi, cand = stack.pop()
        hit = (dlo[cand] < hi).all(axis=1) & (dhi[cand] > lo).all(axis=1)
        inter = cand[hit]
        if len(inter) == 0:
            continue
        contains = (dlo[inter] <= lo).all(axis=1) & (dhi[inter] >= hi).all(axis=1)
        if contains.all():
            ids = np.sort(inter)
            abrs.append(ActiveBrickRegion(
                bounds=Box(lo.copy(), hi.copy()),
                brick_ids=ids.astype(np.int32),
                finest_level=int(levels[ids].min()),
            ))
            continue

        part = inter[~contains]
        mid = 0.5 * (lo + hi)
        best = None  # (normalized distance to median, axis, coordinate)
        for axis in range(3):
            vals = np.concatenate((dlo[part, axis], dhi[part, axis]))
            vals = vals[(vals > lo[axis]) & (vals < hi[axis])]
            if vals.size == 0:
                continue
            scores = np.abs(vals - mid[axis]) / (hi[axis] - lo[axis])
            i = np.lexsort((vals, scores))[0]
            key = (float(scores[i]), axis, float(vals[i]))
            if best is None or key < best:
                best = key
        if best is None:
            raise AssertionError("no admissible split plane for a mixed region")
        axis, v = best[1], best[2]
        hi_left = hi.copy()
        hi_left[axis] = v
        lo_right = lo.copy()
        lo_right[axis] = v
        # push right first so the left child is processed first (stable order)
        stack.append((lo_right, hi, inter))
        stack.append((lo, hi_left, inter))

    abrs.sort(key=lambda a: tuple(a.bounds.lo))
    return abrs


def abr_value_range(abr: ActiveBrickRegion, bricks: Sequence[Brick], field: AMRField) -> tuple[float, float]:
    """Scalar (min, max) over every cell of every brick the region lists."""
    vmin = np.inf
    vmax = -np.inf
    for bid in abr.brick_ids:
        vals = field.scalars[bricks[bid].cell_ids]
        vmin = min(vmin, float(vals.min()))
        vmax = max(vmax, float(vals.max()))
    return (vmin, vmax)


def active_set(abrs: Sequence[ActiveBrickRegion], tf: TransferFunction) -> np.ndarray:
    """Boolean mask: region is active iff the transfer function reaches
    nonzero opacity anywhere inside its value range."""
    mask = np.zeros(len(abrs), dtype=bool)
    for i, abr in enumerate(abrs):
        if abr.value_range is None:
            raise ValueError("value ranges not computed; build the structure first")
        mask[i] = tf.max_alpha_in(*abr.value_range) > 0.0
    return mask


class BrickStructure:
    """Bricks + regions + a BVH over region bounds, ready for traversal.

    The flat numpy views (``abr_lo``, ``abr_hi``, ``abr_step``, CSR brick
    lists, BVH arrays) feed the compiled sampling and marching kernels.
    Immutable after construction; safe to share across threads.
    """

    def __init__(self, field: AMRField, bricks: list[Brick], abrs: list[ActiveBrickRegion]):
        self.bricks = bricks
        self.abrs = abrs
        for abr in abrs:
            if abr.value_range is None:
                abr.value_range = abr_value_range(abr, bricks, field)

        a = len(abrs)
        self.abr_lo = np.stack([x.bounds.lo for x in abrs]) if a else np.zeros((0, 3))
        self.abr_hi = np.stack([x.bounds.hi for x in abrs]) if a else np.zeros((0, 3))
        self.abr_step = np.array([float(1 << x.finest_level) for x in abrs])
        self.abr_vrange = np.array([x.value_range for x in abrs]) if a else np.zeros((0, 2))
        self.abr_brick_off = np.zeros(a + 1, dtype=np.int64)
        for i, x in enumerate(abrs):
            self.abr_brick_off[i + 1] = self.abr_brick_off[i] + len(x.brick_ids)
        self.abr_brick_ids = (
            np.concatenate([x.brick_ids for x in abrs]).astype(np.int32)
            if a else np.zeros(0, dtype=np.int32)
        )

        b = len(bricks)
        self.brick_lower = np.stack([x.lower.astype(np.float64) for x in bricks]) if b else np.zeros((0, 3))
        self.brick_width = np.array([x.width for x in bricks])
        self.brick_size = np.stack([x.size for x in bricks]).astype(np.int64) if b else np.zeros((0, 3), dtype=np.int64)
        self.brick_val_off = np.zeros(b + 1, dtype=np.int64)
        for i, x in enumerate(bricks):
            self.brick_val_off[i + 1] = self.brick_val_off[i] + len(x.cell_ids)
        self.brick_values = (
            np.concatenate([field.scalars[x.cell_ids] for x in bricks]).astype(np.float32)
            if b else np.zeros(0, dtype=np.float32)
        )

        (self.node_lo, self.node_hi, self.node_child,
         self.node_start, self.node_count, self.prim_ids) = _build_bvh(self.abr_lo, self.abr_hi)

    @classmethod
    def build(cls, field: AMRField) -> "BrickStructure":
        bricks = build_bricks(field)
        abrs = build_abrs(bricks)
        return cls(field, bricks, abrs)

    def locate(self, p) -> int:
        """Index of the region containing p (half-open bounds), or -1."""
        p = np.asarray(p, dtype=np.float64)
        return int(_kernels.locate_abr(
            p[0], p[1], p[2],
            self.node_lo, self.node_hi, self.node_child,
            self.node_start, self.node_count, self.prim_ids,
            self.abr_lo, self.abr_hi,
        ))


def traverse(ray, structure: BrickStructure, mask=None) -> list[tuple[int, float, float]]:
    """Ordered active-region segments ``(abr_id, t_enter, t_exit)`` along a ray.

    Segments are sorted ascending by ``t_enter`` and, by region
    disjointness, overlap at most at shared endpoints.  Zero-length grazes
    are dropped.
    """
    if mask is None:
        mask = np.ones(len(structure.abrs), dtype=bool)
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    o = np.asarray(ray.origin, dtype=np.float64)
    d = np.asarray(ray.direction, dtype=np.float64)
    if not np.any(d != 0.0):
        raise ValueError("ray direction must be non-zero")
    t0s, t1s, ids = _kernels.ray_segments(
        o[0], o[1], o[2], d[0], d[1], d[2],
        float(ray.t_min), float(ray.t_max),
        structure.node_lo, structure.node_hi, structure.node_child,
        structure.node_start, structure.node_count, structure.prim_ids,
        structure.abr_lo, structure.abr_hi, mask,
    )
    return [(int(i), float(a), float(b)) for i, a, b in zip(ids, t0s, t1s)]


def _build_bvh(lo: np.ndarray, hi: np.ndarray, leaf_size: int = 8):
    """Median-split BVH over boxes; flat arrays for the compiled traversal.

    Internal node: ``child`` = index of first child (second is child+1),
    ``count`` = 0.  Leaf: ``start``/``count`` index into ``prim_ids``.
    """
    n = len(lo)
    if n == 0:
        return (np.zeros((1, 3)), np.zeros((1, 3)),
                np.zeros(1, dtype=np.int32), np.zeros(1, dtype=np.int32),
                np.zeros(1, dtype=np.int32), np.zeros(0, dtype=np.int32))
    centroids = 0.5 * (lo + hi)
    prim = np.arange(n, dtype=np.int32)

    node_lo, node_hi, node_child, node_start, node_count = [], [], [], [], []

    def new_node():
        node_lo.append(None)
        node_hi.append(None)
        node_child.append(-1)
        node_start.append(-1)
        node_count.append(0)
        return len(node_lo) - 1

    out_prim = np.empty(n, dtype=np.int32)
    out_pos = 0
    stack = [(new_node(), prim)]
    while stack:
        idx, ids = stack.pop()
        node_lo[idx] = lo[ids].min(axis=0)
        node_hi[idx] = hi[ids].max(axis=0)
        if len(ids) <= leaf_size:
            node_start[idx] = out_pos
            node_count[idx] = len(ids)
            out_prim[out_pos:out_pos + len(ids)] = ids
            out_pos += len(ids)
            continue
        cen = centroids[ids]
        axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
        order = np.argsort(cen[:, axis], kind="stable")
        half = len(ids) // 2
        left = new_node()
        right = new_node()
        node_child[idx] = left
        # children were just appended, so right == left + 1
        assert right == left + 1
        stack.append((right, ids[order[half:]]))
        stack.append((left, ids[order[:half]]))

    return (np.stack(node_lo), np.stack(node_hi),
            np.asarray(node_child, dtype=np.int32),
            np.asarray(node_start, dtype=np.int32),
            np.asarray(node_count, dtype=np.int32),
            out_prim)
