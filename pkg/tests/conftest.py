import os

# allow multi-worker determinism checks even on single-CPU boxes; must be
# set before numba is first imported
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np
import pytest

from amrvol import AMRField, BrickStructure, TransferFunction, grayscale_ramp
from amrvol import synth
from amrvol.render import Scene


@pytest.fixture
def single_cell_field():
    return AMRField([[0, 0, 0]], [0], [5.0])


@pytest.fixture
def two_cell_field():
    return AMRField([[0, 0, 0], [1, 0, 0]], [0, 0], [0.0, 1.0])


@pytest.fixture
def lshape_field():
    return AMRField([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [0, 0, 0], [1.0, 2.0, 3.0])


@pytest.fixture
def cube8_field():
    pos = [[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    return AMRField(pos, [0] * 8, np.arange(8, dtype=np.float32))


@pytest.fixture
def two_brick_structure():
    """Two explicit 2x2x2 level-0 bricks side by side along x.

    A contiguous field would greedily mesh into one brick, so the bricks
    are constructed directly: domains [-0.5, 2.5]^3 and
    [1.5, 4.5] x [-0.5, 2.5]^2 overlap in x [1.5, 2.5], giving the
    canonical 3-region decomposition.
    """
    from amrvol.bricks import Brick, build_abrs

    pos = [[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1, 2, 3)]
    field = AMRField(pos, [0] * 16, np.arange(16, dtype=np.float32))
    ids = {tuple(p): i for i, p in enumerate(pos)}

    def brick_at(x0):
        cell_ids = [ids[(x0 + x, y, z)] for z in (0, 1) for y in (0, 1) for x in (0, 1)]
        return Brick(lower=np.array([x0, 0, 0], dtype=np.int64), level=0,
                     size=np.array([2, 2, 2], dtype=np.int64),
                     cell_ids=np.asarray(cell_ids, dtype=np.int64))

    bricks = [brick_at(0), brick_at(2)]
    return BrickStructure(field, bricks, build_abrs(bricks))


@pytest.fixture(scope="session")
def synthetic_field():
    """Multi-level blob field used by most sampling/render tests."""
    return synth.generate(blobs=3, levels=3, threshold=0.2, seed=11, root=6)


@pytest.fixture(scope="session")
def synthetic_structure(synthetic_field):
    return BrickStructure.build(synthetic_field)


@pytest.fixture(scope="session")
def synthetic_scene(synthetic_field, synthetic_structure):
    return Scene(synthetic_field, synthetic_structure,
                 grayscale_ramp(synthetic_field.value_range))


def partition_mismatches(structure, pts, chunk: int = 2048) -> int:
    """Point-set oracle check of the region decomposition, vectorized.

    For each point: it must lie in exactly one region (half-open bounds)
    iff some extended brick domain strictly contains it, and that region's
    brick list must equal the set of containing domains.  Returns the
    number of points violating this.
    """
    from amrvol.bricks import extended_domain

    pts = np.asarray(pts, dtype=np.float64)
    n_abr = len(structure.abrs)
    n_bricks = len(structure.bricks)
    abr_bricks = np.zeros((n_abr, n_bricks), dtype=bool)
    for i, a in enumerate(structure.abrs):
        abr_bricks[i, a.brick_ids] = True
    dlo = np.stack([extended_domain(b).lo for b in structure.bricks])
    dhi = np.stack([extended_domain(b).hi for b in structure.bricks])

    bad = 0
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        in_abr = ((structure.abr_lo[None, :, :] <= p[:, None, :])
                  & (p[:, None, :] < structure.abr_hi[None, :, :])).all(axis=2)
        in_dom = ((dlo[None, :, :] < p[:, None, :])
                  & (p[:, None, :] < dhi[None, :, :])).all(axis=2)
        n_in = in_abr.sum(axis=1)
        covered = in_dom.any(axis=1)
        bad += int((n_in[~covered] != 0).sum())
        ok = covered & (n_in == 1)
        bad += int((covered & (n_in != 1)).sum())
        idx = in_abr[ok].argmax(axis=1)
        bad += int((abr_bricks[idx] != in_dom[ok]).any(axis=1).sum())
    return bad


def segments_brute_force(ray, structure, mask=None):
    """Reference traversal: slab-test every region, no acceleration."""
    o = np.asarray(ray.origin, dtype=np.float64)
    d = np.asarray(ray.direction, dtype=np.float64)
    out = []
    for i, abr in enumerate(structure.abrs):
        if mask is not None and not mask[i]:
            continue
        t0, t1 = ray.t_min, ray.t_max
        ok = True
        for a in range(3):
            lo, hi = abr.bounds.lo[a], abr.bounds.hi[a]
            if d[a] != 0.0:
                ta, tb = (lo - o[a]) / d[a], (hi - o[a]) / d[a]
                if ta > tb:
                    ta, tb = tb, ta
                t0, t1 = max(t0, ta), min(t1, tb)
            elif not (lo <= o[a] < hi):
                ok = False
                break
        if ok and t1 > t0:
            out.append((i, t0, t1))
    out.sort(key=lambda s: (s[1], s[0]))
    return out
