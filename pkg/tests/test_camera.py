import math

import numpy as np
import pytest

from amrvol import (
    Channel,
    Ray,
    SingularMatrixError,
    frustum,
    look_at,
    perspective,
    ray_for_ndc,
    ray_for_pixel,
    translate,
)
from amrvol.camera import emit_row_major, ingest_row_major, ndc_depth


def random_camera(rng):
    eye = rng.uniform(-5, 5, 3)
    center = eye + rng.uniform(-1, 1, 3) + [0, 0, -2]
    view = look_at(eye, center, (0, 1, 0))
    proj = perspective(rng.uniform(30, 90), rng.uniform(0.5, 2.0),
                       rng.uniform(0.05, 0.5), rng.uniform(10, 200))
    return view, proj


def test_identity_center_pixel_ray():
    ch = Channel(view=np.eye(4), proj=np.eye(4), width=5, height=5)
    ray = ray_for_pixel(ch, 2, 2)
    assert np.allclose(ray.origin, [0, 0, -1])
    assert np.allclose(ray.direction, [0, 0, 1])


def test_symmetric_perspective_center_ray_looks_down_minus_z():
    proj = perspective(90.0, 1.0, 0.1, 100.0)
    ch = Channel(view=np.eye(4), proj=proj, width=11, height=11)
    ray = ray_for_pixel(ch, 5, 5)
    # analytic pinhole: the center ray of a symmetric frustum is -z
    assert np.allclose(ray.direction, [0, 0, -1], atol=1e-5)
    # an off-center pixel matches tan-based pinhole directions
    ray2 = ray_for_pixel(ch, 10, 5)
    nx = 2 * (10 + 0.5) / 11 - 1
    expected = np.array([nx * math.tan(math.radians(45.0)), 0.0, -1.0])
    expected /= np.linalg.norm(expected)
    assert np.allclose(ray2.direction, expected, atol=1e-5)


def test_off_axis_corner_rays_hit_near_plane_window():
    l, r, b, t, n, f = 0.0, 1.0, 0.0, 1.0, 1.0, 10.0
    proj = frustum(l, r, b, t, n, f)
    view = np.eye(4)
    corners = {(-1, -1): (l, b), (1, -1): (r, b), (-1, 1): (l, t), (1, 1): (r, t)}
    for (nx, ny), (ex, ey) in corners.items():
        ray = ray_for_ndc(view, proj, nx, ny)
        # intersect with the near plane z = -n
        s = (-n - ray.origin[2]) / ray.direction[2]
        p = ray.origin + s * ray.direction
        assert np.allclose(p, [ex, ey, -n], atol=1e-4)


def test_symmetric_frustum_equals_perspective():
    fovy, aspect, n, f = 60.0, 1.5, 0.2, 50.0
    t = n * math.tan(math.radians(fovy) / 2)
    r = t * aspect
    assert np.allclose(frustum(-r, r, -t, t, n, f), perspective(fovy, aspect, n, f))


def test_look_at_maps_eye_to_origin():
    view = look_at((0, 0, 5), (0, 0, 0), (0, 1, 0))
    assert np.allclose(view @ [0, 0, 5, 1], [0, 0, 0, 1])
    # center lies on the -z axis in view space
    mapped = view @ [0, 0, 0, 1]
    assert np.allclose(mapped, [0, 0, -5, 1])


def test_project_unproject_round_trip():
    rng = np.random.default_rng(8)
    view, proj = random_camera(rng)
    pv = proj @ view
    inv = np.linalg.inv(pv)
    # random in-frustum points via random NDC and depths
    ndc = rng.uniform(-0.99, 0.99, size=(1000, 3))
    h = (inv @ np.column_stack([ndc, np.ones(len(ndc))]).T).T
    world = h[:, :3] / h[:, 3:4]
    back = (pv @ np.column_stack([world, np.ones(len(world))]).T).T
    back = back[:, :3] / back[:, 3:4]
    assert np.abs(back - ndc).max() < 1e-4


def test_pixel_ray_reprojects_to_its_ndc():
    rng = np.random.default_rng(9)
    for _ in range(20):
        view, proj = random_camera(rng)
        ch = Channel(view=view, proj=proj, width=64, height=48)
        pv = proj @ view
        for _ in range(50):
            i = int(rng.integers(0, 64))
            j = int(rng.integers(0, 48))
            ray = ray_for_pixel(ch, i, j)
            h = pv @ np.append(ray.origin, 1.0)
            got = h[:2] / h[3]
            expected = [2 * (i + 0.5) / 64 - 1, 2 * (j + 0.5) / 48 - 1]
            assert np.abs(got - expected).max() < 1e-4


def test_stereo_offset_shifts_origins_exactly():
    rng = np.random.default_rng(10)
    view, proj = random_camera(rng)
    offset = np.array([0.065, 0.0, 0.01])
    shifted = view @ translate(-offset)  # camera moved by +offset in world
    cha = Channel(view=view, proj=proj, width=9, height=9)
    chb = Channel(view=shifted, proj=proj, width=9, height=9)
    for i, j in ((0, 0), (4, 4), (8, 2)):
        ra = ray_for_pixel(cha, i, j)
        rb = ray_for_pixel(chb, i, j)
        assert np.allclose(rb.origin - ra.origin, offset, atol=1e-9)
        assert np.allclose(ra.direction, rb.direction, atol=1e-12)


def test_singular_matrix_raises():
    proj = np.zeros((4, 4))
    with pytest.raises(SingularMatrixError):
        ray_for_ndc(np.eye(4), proj, 0.0, 0.0)


def test_degenerate_parameters_raise():
    with pytest.raises(ValueError):
        perspective(60.0, 1.0, -0.1, 10.0)
    with pytest.raises(ValueError):
        perspective(60.0, 1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        frustum(0.0, 0.0, 0.0, 1.0, 0.1, 10.0)
    with pytest.raises(ValueError):
        look_at((0, 0, 5), (0, 0, 0), (0, 0, 1))  # up parallel to view


def test_ray_normalizes_direction():
    ray = Ray((0, 0, 0), (0, 0, 10))
    assert np.allclose(ray.direction, [0, 0, 1])
    with pytest.raises(ValueError):
        Ray((0, 0, 0), (0, 0, 0))


def test_row_major_round_trip():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(4, 4))
    assert np.allclose(ingest_row_major(emit_row_major(m)), m)
    # translation components of a row-vector matrix live at indices 12..14
    t = translate((1.0, 2.0, 3.0))
    emitted = emit_row_major(t)
    assert emitted[12:15] == [1.0, 2.0, 3.0]


def test_ndc_depth_range():
    view = look_at((0, 0, 5), (0, 0, 0), (0, 1, 0))
    proj = perspective(60.0, 1.0, 0.1, 100.0)
    near_pt = ndc_depth(view, proj, (0, 0, 5 - 0.1001))
    far_pt = ndc_depth(view, proj, (0, 0, 5 - 99.0))
    assert -1.0 <= near_pt < far_pt <= 1.0


def test_zero_size_channel_rejected():
    with pytest.raises(ValueError):
        Channel(view=np.eye(4), proj=np.eye(4), width=0, height=4)
