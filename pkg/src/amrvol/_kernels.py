"""Compiled hot paths: BVH traversal, per-region sampling, ray marching.

Everything here operates on the flat numpy views published by
``BrickStructure`` so the whole per-pixel pipeline stays inside numba.
The scene is passed as one tuple of arrays (see ``render.scene_arrays``):

    (node_lo, node_hi, node_child, node_start, node_count, prim_ids,
     abr_lo, abr_hi, abr_step, abr_boff, abr_bids,
     b_lower, b_width, b_size, b_voff, b_vals)

Determinism contract: per-pixel work is fully independent and uses a fixed
operation order, so images are bit-identical for any worker count.
"""

import numpy as np
from numba import njit, prange

_STACK = 256  # BVH traversal stack; median splits keep depth ~ 2*log2(n)


@njit(inline="always")
def _slab(lox, loy, loz, hix, hiy, hiz, ox, oy, oz, dx, dy, dz, tmin, tmax):
    # Zero-direction axes use half-open containment [lo, hi) so a ray
    # lying exactly in a shared face plane belongs to exactly one side.
    t0 = tmin
    t1 = tmax
    if dx != 0.0:
        inv = 1.0 / dx
        a = (lox - ox) * inv
        b = (hix - ox) * inv
        if a > b:
            a, b = b, a
        if a > t0:
            t0 = a
        if b < t1:
            t1 = b
    elif ox < lox or ox >= hix:
        return False, 0.0, 0.0
    if dy != 0.0:
        inv = 1.0 / dy
        a = (loy - oy) * inv
        b = (hiy - oy) * inv
        if a > b:
            a, b = b, a
        if a > t0:
            t0 = a
        if b < t1:
            t1 = b
    elif oy < loy or oy >= hiy:
        return False, 0.0, 0.0
    if dz != 0.0:
        inv = 1.0 / dz
        a = (loz - oz) * inv
        b = (hiz - oz) * inv
        if a > b:
            a, b = b, a
        if a > t0:
            t0 = a
        if b < t1:
            t1 = b
    elif oz < loz or oz >= hiz:
        return False, 0.0, 0.0
    return t0 <= t1, t0, t1


@njit(cache=True)
def _segments_scan(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active,
                   out_t0, out_t1, out_id):
    """Collect active-region segments into the scratch arrays.

    Returns the segment count, or -1 if the scratch is too small (the
    caller retries with a larger one).
    """
    (node_lo, node_hi, node_child, node_start, node_count, prim_ids,
     abr_lo, abr_hi, _abr_step, _abr_boff, _abr_bids,
     _b_lower, _b_width, _b_size, _b_voff, _b_vals) = scene
    if prim_ids.size == 0:
        return 0
    cap = out_id.shape[0]
    stack = np.empty(_STACK, dtype=np.int32)
    stack[0] = 0
    sp = 1
    n = 0
    while sp > 0:
        sp -= 1
        nid = stack[sp]
        hit, _, _ = _slab(node_lo[nid, 0], node_lo[nid, 1], node_lo[nid, 2],
                          node_hi[nid, 0], node_hi[nid, 1], node_hi[nid, 2],
                          ox, oy, oz, dx, dy, dz, tmin, tmax)
        if not hit:
            continue
        cnt = node_count[nid]
        if cnt > 0:
            start = node_start[nid]
            for q in range(start, start + cnt):
                pid = prim_ids[q]
                if active[pid] == 0:
                    continue
                h2, s0, s1 = _slab(abr_lo[pid, 0], abr_lo[pid, 1], abr_lo[pid, 2],
                                   abr_hi[pid, 0], abr_hi[pid, 1], abr_hi[pid, 2],
                                   ox, oy, oz, dx, dy, dz, tmin, tmax)
                if h2 and s1 > s0:
                    if n >= cap:
                        return -1
                    out_t0[n] = s0
                    out_t1[n] = s1
                    out_id[n] = pid
                    n += 1
        else:
            c = node_child[nid]
            stack[sp] = c
            stack[sp + 1] = c + 1
            sp += 2
    return n


@njit(cache=True)
def _sort_segments(t0s, t1s, ids, n):
    # insertion sort by (t_enter, id); segment lists per ray are short
    for i in range(1, n):
        a = t0s[i]
        b = t1s[i]
        c = ids[i]
        j = i - 1
        while j >= 0 and (t0s[j] > a or (t0s[j] == a and ids[j] > c)):
            t0s[j + 1] = t0s[j]
            t1s[j + 1] = t1s[j]
            ids[j + 1] = ids[j]
            j -= 1
        t0s[j + 1] = a
        t1s[j + 1] = b
        ids[j + 1] = c


@njit(cache=True)
def _ray_segments(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active):
    cap = 128
    while True:
        t0s = np.empty(cap)
        t1s = np.empty(cap)
        ids = np.empty(cap, dtype=np.int32)
        n = _segments_scan(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active,
                           t0s, t1s, ids)
        if n >= 0:
            break
        cap *= 4
    _sort_segments(t0s, t1s, ids, n)
    return t0s[:n], t1s[:n], ids[:n]


@njit(cache=True)
def _locate(px, py, pz, scene):
    (node_lo, node_hi, node_child, node_start, node_count, prim_ids,
     abr_lo, abr_hi, _abr_step, _abr_boff, _abr_bids,
     _b_lower, _b_width, _b_size, _b_voff, _b_vals) = scene
    if prim_ids.size == 0:
        return -1
    stack = np.empty(_STACK, dtype=np.int32)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        nid = stack[sp]
        if (px < node_lo[nid, 0] or px >= node_hi[nid, 0]
                or py < node_lo[nid, 1] or py >= node_hi[nid, 1]
                or pz < node_lo[nid, 2] or pz >= node_hi[nid, 2]):
            continue
        cnt = node_count[nid]
        if cnt > 0:
            start = node_start[nid]
            for q in range(start, start + cnt):
                pid = prim_ids[q]
                if (abr_lo[pid, 0] <= px < abr_hi[pid, 0]
                        and abr_lo[pid, 1] <= py < abr_hi[pid, 1]
                        and abr_lo[pid, 2] <= pz < abr_hi[pid, 2]):
                    return pid
        else:
            c = node_child[nid]
            stack[sp] = c
            stack[sp + 1] = c + 1
            sp += 2
    return -1


@njit(inline="always")
def _gather_brick(bid, px, py, pz, b_lower, b_width, b_size, b_voff, b_vals):
    w = b_width[bid]
    rx = (px - b_lower[bid, 0]) / w - 0.5
    ry = (py - b_lower[bid, 1]) / w - 0.5
    rz = (pz - b_lower[bid, 2]) / w - 0.5
    ix0 = int(np.floor(rx))
    iy0 = int(np.floor(ry))
    iz0 = int(np.floor(rz))
    sx = b_size[bid, 0]
    sy = b_size[bid, 1]
    sz = b_size[bid, 2]
    off = b_voff[bid]
    acc_w = 0.0
    acc_v = 0.0
    for dz in range(2):
        iz = iz0 + dz
        if iz < 0 or iz >= sz:
            continue
        wz = 1.0 - abs(rz - iz)
        if wz <= 0.0:
            continue
        for dy in range(2):
            iy = iy0 + dy
            if iy < 0 or iy >= sy:
                continue
            wy = 1.0 - abs(ry - iy)
            if wy <= 0.0:
                continue
            for dx in range(2):
                ix = ix0 + dx
                if ix < 0 or ix >= sx:
                    continue
                wx = 1.0 - abs(rx - ix)
                if wx <= 0.0:
                    continue
                wgt = wx * wy * wz
                acc_w += wgt
                acc_v += wgt * b_vals[off + ix + sx * (iy + sy * iz)]
    return acc_w, acc_v


@njit(inline="always")
def _sample_abr(abr, px, py, pz, scene):
    (_node_lo, _node_hi, _node_child, _node_start, _node_count, _prim_ids,
     _abr_lo, _abr_hi, _abr_step, abr_boff, abr_bids,
     b_lower, b_width, b_size, b_voff, b_vals) = scene
    acc_w = 0.0
    acc_v = 0.0
    for q in range(abr_boff[abr], abr_boff[abr + 1]):
        bid = abr_bids[q]
        w, v = _gather_brick(bid, px, py, pz, b_lower, b_width, b_size, b_voff, b_vals)
        acc_w += w
        acc_v += v
    if acc_w <= 0.0:
        return 0.0, False
    return acc_v / acc_w, True


@njit(cache=True)
def _sample_at(px, py, pz, scene):
    abr = _locate(px, py, pz, scene)
    if abr < 0:
        return 0.0, False
    return _sample_abr(abr, px, py, pz, scene)


@njit(inline="always")
def _classify(entries, lo, hi, scale, v):
    u = (v - lo) / (hi - lo)
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    x = u * (entries.shape[0] - 1)
    i0 = int(x)
    if i0 > entries.shape[0] - 2:
        i0 = entries.shape[0] - 2
    frac = x - i0
    r = entries[i0, 0] * (1.0 - frac) + entries[i0 + 1, 0] * frac
    g = entries[i0, 1] * (1.0 - frac) + entries[i0 + 1, 1] * frac
    b = entries[i0, 2] * (1.0 - frac) + entries[i0 + 1, 2] * frac
    a = entries[i0, 3] * (1.0 - frac) + entries[i0 + 1, 3] * frac
    a *= scale
    if a > 1.0:
        a = 1.0
    return r, g, b, a


@njit(inline="always")
def _interval_counts(t0, t1, delta):
    """Split [t0, t1] into full steps of delta plus one clamped remainder."""
    total = t1 - t0
    nfull = int(total / delta)
    rem = total - nfull * delta
    if rem <= 1e-9 * delta:
        rem = 0.0
    return nfull, rem


@njit(inline="always")
def _interval_at(t0, delta, nfull, rem, k):
    """Sample position (interval midpoint) and covered length of step k."""
    if k < nfull:
        return t0 + (k + 0.5) * delta, delta
    return t0 + nfull * delta + 0.5 * rem, rem


@njit(cache=True)
def _bisect_iso(ta, tb, fa, fb, iso, ox, oy, oz, dx, dy, dz, scene):
    if fa == iso:
        return ta
    lo = ta
    hi = tb
    flo = fa
    fhi = fb
    for _ in range(8):
        mid = 0.5 * (lo + hi)
        fm, has = _sample_at(ox + mid * dx, oy + mid * dy, oz + mid * dz, scene)
        if not has:
            fm = flo
        if (flo - iso) * (fm - iso) <= 0.0:
            hi = mid
            fhi = fm
        else:
            lo = mid
            flo = fm
    # final secant step: exact on locally linear reconstructions
    if fhi != flo:
        t = lo + (iso - flo) / (fhi - flo) * (hi - lo)
        if lo <= t <= hi:
            return t
    return 0.5 * (lo + hi)


@njit(cache=True)
def _iso_shade(t_hit, ox, oy, oz, dx, dy, dz, scene, abr_step, iso_r, iso_g, iso_b):
    px = ox + t_hit * dx
    py = oy + t_hit * dy
    pz = oz + t_hit * dz
    fc, has_c = _sample_at(px, py, pz, scene)
    abr = _locate(px, py, pz, scene)
    h = 0.25 * (abr_step[abr] if abr >= 0 else 1.0)
    g = np.empty(3)
    for axis in range(3):
        qx, qy, qz = px, py, pz
        if axis == 0:
            qx = px + h
        elif axis == 1:
            qy = py + h
        else:
            qz = pz + h
        fp, hp = _sample_at(qx, qy, qz, scene)
        if not hp:
            fp = fc
        qx, qy, qz = px, py, pz
        if axis == 0:
            qx = px - h
        elif axis == 1:
            qy = py - h
        else:
            qz = pz - h
        fm, hm = _sample_at(qx, qy, qz, scene)
        if not hm:
            fm = fc
        g[axis] = (fp - fm) / (2.0 * h)
    norm = np.sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
    if norm < 1e-9:
        shade = 1.0  # flat, unshaded
    else:
        shade = abs((g[0] * dx + g[1] * dy + g[2] * dz) / norm)
    return iso_r * shade, iso_g * shade, iso_b * shade


@njit(cache=True)
def _march_ray(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active,
               tf_entries, tf_lo, tf_hi, tf_scale,
               dt, volume_on, iso_on, slice_on, iso_value,
               snx, sny, snz, soff, iso_r, iso_g, iso_b, term,
               t0s, t1s, ids):
    """Front-to-back march of one ray.

    ``t0s/t1s/ids`` are reusable segment scratch buffers.  Returns
    premultiplied (r, g, b, A) before background compositing, the ray
    parameter where accumulated opacity first crossed 0.5 (inf when it
    never did), and the number of field samples taken.
    """
    (_node_lo, _node_hi, _node_child, _node_start, _node_count, _prim_ids,
     _abr_lo, _abr_hi, abr_step, _abr_boff, _abr_bids,
     _b_lower, _b_width, _b_size, _b_voff, _b_vals) = scene

    nseg = _segments_scan(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active,
                          t0s, t1s, ids)
    if nseg < 0:
        cap = ids.shape[0]
        while nseg < 0:
            cap *= 4
            t0s = np.empty(cap)
            t1s = np.empty(cap)
            ids = np.empty(cap, dtype=np.int32)
            nseg = _segments_scan(ox, oy, oz, dx, dy, dz, tmin, tmax, scene,
                                  active, t0s, t1s, ids)
    _sort_segments(t0s, t1s, ids, nseg)
    cr = 0.0
    cg = 0.0
    cb = 0.0
    A = 0.0
    t_depth = np.inf
    nsamp = 0
    if nseg == 0 and not slice_on:
        return cr, cg, cb, A, t_depth, nsamp

    slice_pending = False
    t_c = 0.0
    if slice_on:
        denom = snx * dx + sny * dy + snz * dz
        if abs(denom) > 1e-12:
            t_c = (soff - (snx * ox + sny * oy + snz * oz)) / denom
            slice_pending = tmin <= t_c <= tmax

    prev_has = False
    prev_f = 0.0
    prev_t = 0.0
    prev_exit = -np.inf
    for s in range(nseg):
        t0 = t0s[s]
        t1 = t1s[s]
        abr = ids[s]
        if t0 - prev_exit > 1e-9:
            prev_has = False  # gap: no continuous field across it
        delta = dt * abr_step[abr]
        nfull, rem = _interval_counts(t0, t1, delta)
        count = nfull + (1 if rem > 0.0 else 0)
        for k in range(count):
            ts, seg_len = _interval_at(t0, delta, nfull, rem, k)
            px = ox + ts * dx
            py = oy + ts * dy
            pz = oz + ts * dz
            f, has = _sample_abr(abr, px, py, pz, scene)
            nsamp += 1

            t_hit = np.inf
            if iso_on and has and prev_has and (prev_f - iso_value) * (f - iso_value) <= 0.0:
                t_hit = _bisect_iso(prev_t, ts, prev_f, f, iso_value,
                                    ox, oy, oz, dx, dy, dz, scene)
            do_slice = slice_pending and t0 <= t_c <= ts

            # composite pending events in ray order; opaque events saturate A
            for _ev in range(2):
                if t_hit < np.inf and (not do_slice or t_hit <= t_c):
                    er, eg, eb = _iso_shade(t_hit, ox, oy, oz, dx, dy, dz,
                                            scene, abr_step, iso_r, iso_g, iso_b)
                    cr += (1.0 - A) * er
                    cg += (1.0 - A) * eg
                    cb += (1.0 - A) * eb
                    if A < 0.5:
                        t_depth = t_hit
                    A = 1.0
                    t_hit = np.inf
                elif do_slice:
                    fv, hv = _sample_abr(abr, ox + t_c * dx, oy + t_c * dy,
                                         oz + t_c * dz, scene)
                    if hv:
                        er, eg, eb, _ = _classify(tf_entries, tf_lo, tf_hi, tf_scale, fv)
                        cr += (1.0 - A) * er
                        cg += (1.0 - A) * eg
                        cb += (1.0 - A) * eb
                        if A < 0.5:
                            t_depth = t_c
                        A = 1.0
                    slice_pending = False
                    do_slice = False
            if A >= term:
                return cr, cg, cb, A, t_depth, nsamp

            if volume_on and has:
                r, g, b, a = _classify(tf_entries, tf_lo, tf_hi, tf_scale, f)
                a_eff = 1.0 - (1.0 - a) ** seg_len
                w = (1.0 - A) * a_eff
                cr += w * r
                cg += w * g
                cb += w * b
                newA = A + w
                if A < 0.5 <= newA:
                    t_depth = ts
                A = newA
                if A >= term:
                    return cr, cg, cb, A, t_depth, nsamp
            prev_f = f
            prev_t = ts
            prev_has = has

        # slice crossing past the last sample but still inside the segment
        if slice_pending and t0 <= t_c <= t1:
            fv, hv = _sample_abr(abr, ox + t_c * dx, oy + t_c * dy, oz + t_c * dz, scene)
            if hv:
                er, eg, eb, _ = _classify(tf_entries, tf_lo, tf_hi, tf_scale, fv)
                cr += (1.0 - A) * er
                cg += (1.0 - A) * eg
                cb += (1.0 - A) * eb
                if A < 0.5:
                    t_depth = t_c
                A = 1.0
            slice_pending = False
            if A >= term:
                return cr, cg, cb, A, t_depth, nsamp
        prev_exit = t1
    return cr, cg, cb, A, t_depth, nsamp


@njit(cache=True)
def ray_march(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active,
              tf_entries, tf_lo, tf_hi, tf_scale,
              dt, volume_on, iso_on, slice_on, iso_value,
              snx, sny, snz, soff, iso_r, iso_g, iso_b, term):
    t0s = np.empty(128)
    t1s = np.empty(128)
    ids = np.empty(128, dtype=np.int32)
    return _march_ray(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active,
                      tf_entries, tf_lo, tf_hi, tf_scale,
                      dt, volume_on, iso_on, slice_on, iso_value,
                      snx, sny, snz, soff, iso_r, iso_g, iso_b, term,
                      t0s, t1s, ids)


@njit(cache=True)
def ray_sample_positions(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active, dt):
    """All marching sample positions (t, covered length, abr) along a ray."""
    (_node_lo, _node_hi, _node_child, _node_start, _node_count, _prim_ids,
     _abr_lo, _abr_hi, abr_step, _abr_boff, _abr_bids,
     _b_lower, _b_width, _b_size, _b_voff, _b_vals) = scene
    t0s, t1s, ids = _ray_segments(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active)
    total = 0
    for s in range(len(ids)):
        delta = dt * abr_step[ids[s]]
        nfull, rem = _interval_counts(t0s[s], t1s[s], delta)
        total += nfull + (1 if rem > 0.0 else 0)
    ts = np.empty(total)
    lens = np.empty(total)
    abrs = np.empty(total, dtype=np.int32)
    n = 0
    for s in range(len(ids)):
        delta = dt * abr_step[ids[s]]
        nfull, rem = _interval_counts(t0s[s], t1s[s], delta)
        count = nfull + (1 if rem > 0.0 else 0)
        for k in range(count):
            t, L = _interval_at(t0s[s], delta, nfull, rem, k)
            ts[n] = t
            lens[n] = L
            abrs[n] = ids[s]
            n += 1
    return ts, lens, abrs


@njit(cache=True)
def sample_points(points, scene):
    """Vectorized locate+sample; returns (values, has_value)."""
    n = points.shape[0]
    vals = np.zeros(n)
    has = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        v, h = _sample_at(points[i, 0], points[i, 1], points[i, 2], scene)
        vals[i] = v
        has[i] = 1 if h else 0
    return vals, has


def ray_segments(ox, oy, oz, dx, dy, dz, tmin, tmax,
                 node_lo, node_hi, node_child, node_start, node_count, prim_ids,
                 abr_lo, abr_hi, active):
    scene = (node_lo, node_hi, node_child, node_start, node_count, prim_ids,
             abr_lo, abr_hi,
             np.zeros(0), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int32),
             np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3), dtype=np.int64),
             np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.float32))
    return _ray_segments(ox, oy, oz, dx, dy, dz, tmin, tmax, scene, active)


def locate_abr(px, py, pz, node_lo, node_hi, node_child, node_start, node_count,
               prim_ids, abr_lo, abr_hi):
    scene = (node_lo, node_hi, node_child, node_start, node_count, prim_ids,
             abr_lo, abr_hi,
             np.zeros(0), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int32),
             np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3), dtype=np.int64),
             np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.float32))
    return _locate(px, py, pz, scene)


@njit(parallel=True, cache=True)
def render_tiles(inv_pv, pv, width, height, tile, scene, active,
                 tf_entries, tf_lo, tf_hi, tf_scale,
                 dt, volume_on, iso_on, slice_on, iso_value,
                 snx, sny, snz, soff, iso_r, iso_g, iso_b, term,
                 bg_r, bg_g, bg_b, bg_a,
                 out_rgba, out_depth, out_samples):
    """Tile-parallel frame render; each pixel is owned by exactly one tile."""
    ntx = (width + tile - 1) // tile
    nty = (height + tile - 1) // tile
    for t in prange(ntx * nty):
        ty = t // ntx
        tx = t - ty * ntx
        y_end = min((ty + 1) * tile, height)
        x_end = min((tx + 1) * tile, width)
        cnt = 0
        seg_t0 = np.empty(256)
        seg_t1 = np.empty(256)
        seg_id = np.empty(256, dtype=np.int32)
        for jy in range(ty * tile, y_end):
            ny = 2.0 * (jy + 0.5) / height - 1.0
            for ix in range(tx * tile, x_end):
                nx = 2.0 * (ix + 0.5) / width - 1.0
                # unproject ndc (nx, ny, -1) and (nx, ny, +1)
                nw = inv_pv[3, 0] * nx + inv_pv[3, 1] * ny - inv_pv[3, 2] + inv_pv[3, 3]
                fw = inv_pv[3, 0] * nx + inv_pv[3, 1] * ny + inv_pv[3, 2] + inv_pv[3, 3]
                ox = (inv_pv[0, 0] * nx + inv_pv[0, 1] * ny - inv_pv[0, 2] + inv_pv[0, 3]) / nw
                oy = (inv_pv[1, 0] * nx + inv_pv[1, 1] * ny - inv_pv[1, 2] + inv_pv[1, 3]) / nw
                oz = (inv_pv[2, 0] * nx + inv_pv[2, 1] * ny - inv_pv[2, 2] + inv_pv[2, 3]) / nw
                fx = (inv_pv[0, 0] * nx + inv_pv[0, 1] * ny + inv_pv[0, 2] + inv_pv[0, 3]) / fw
                fy = (inv_pv[1, 0] * nx + inv_pv[1, 1] * ny + inv_pv[1, 2] + inv_pv[1, 3]) / fw
                fz = (inv_pv[2, 0] * nx + inv_pv[2, 1] * ny + inv_pv[2, 2] + inv_pv[2, 3]) / fw
                dx = fx - ox
                dy = fy - oy
                dz = fz - oz
                norm = np.sqrt(dx * dx + dy * dy + dz * dz)
                row = height - 1 - jy
                if norm == 0.0:
                    out_rgba[row, ix, 0] = _quantize(bg_r)
                    out_rgba[row, ix, 1] = _quantize(bg_g)
                    out_rgba[row, ix, 2] = _quantize(bg_b)
                    out_rgba[row, ix, 3] = _quantize(bg_a)
                    out_depth[row, ix] = 1.0
                    continue
                dx /= norm
                dy /= norm
                dz /= norm
                cr, cg, cb, A, t_depth, ns = _march_ray(
                    ox, oy, oz, dx, dy, dz, 0.0, np.inf, scene, active,
                    tf_entries, tf_lo, tf_hi, tf_scale,
                    dt, volume_on, iso_on, slice_on, iso_value,
                    snx, sny, snz, soff, iso_r, iso_g, iso_b, term,
                    seg_t0, seg_t1, seg_id)
                cnt += ns
                cr += (1.0 - A) * bg_r
                cg += (1.0 - A) * bg_g
                cb += (1.0 - A) * bg_b
                A = A + (1.0 - A) * bg_a
                out_rgba[row, ix, 0] = _quantize(cr)
                out_rgba[row, ix, 1] = _quantize(cg)
                out_rgba[row, ix, 2] = _quantize(cb)
                out_rgba[row, ix, 3] = _quantize(A)
                if t_depth == np.inf:
                    out_depth[row, ix] = 1.0
                else:
                    hx = ox + t_depth * dx
                    hy = oy + t_depth * dy
                    hz = oz + t_depth * dz
                    w = pv[3, 0] * hx + pv[3, 1] * hy + pv[3, 2] * hz + pv[3, 3]
                    z = pv[2, 0] * hx + pv[2, 1] * hy + pv[2, 2] * hz + pv[2, 3]
                    d = 0.5 * (z / w + 1.0)
                    if d < 0.0:
                        d = 0.0
                    elif d > 1.0:
                        d = 1.0
                    out_depth[row, ix] = d
        out_samples[t] = cnt


@njit(inline="always")
def _quantize(c):
    v = c * 255.0 + 0.5
    if v < 0.0:
        v = 0.0
    elif v > 255.0:
        v = 255.0
    return np.uint8(v)
