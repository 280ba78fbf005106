import json
import zlib

import numpy as np
import pytest

from amrvol import TransferFunction, perspective, look_at
from amrvol.io_formats import (
    CameraSpec,
    FormatError,
    dataset_size_on_disc,
    load_camera,
    load_cells,
    load_config,
    load_field,
    load_scalars,
    load_transfer_function,
    read_ppm,
    save_camera,
    save_transfer_function,
    write_bench_csv,
    write_cells,
    write_config,
    write_image,
    write_png,
    write_ppm,
    write_scalars,
)


def test_single_cell_record(tmp_path):
    p = tmp_path / "one.cells"
    p.write_bytes(np.array([0, 0, 0, 0], dtype="<i4").tobytes())
    pos, level = load_cells(p)
    assert pos.shape == (1, 3) and level[0] == 0


def test_empty_cells_file(tmp_path):
    p = tmp_path / "empty.cells"
    p.write_bytes(b"")
    with pytest.raises(FormatError, match="empty field"):
        load_cells(p)


def test_truncated_cells_file(tmp_path):
    p = tmp_path / "trunc.cells"
    p.write_bytes(b"\x00" * 17)
    with pytest.raises(FormatError, match="multiple of 16"):
        load_cells(p)


def test_negative_level_rejected(tmp_path):
    p = tmp_path / "neg.cells"
    p.write_bytes(np.array([0, 0, 0, -1], dtype="<i4").tobytes())
    with pytest.raises(FormatError, match="negative"):
        load_cells(p)


def test_cells_round_trip_10k(tmp_path):
    rng = np.random.default_rng(0)
    level = rng.integers(0, 5, size=10000).astype(np.int32)
    pos = (rng.integers(-1000, 1000, size=(10000, 3)) * (1 << level)[:, None]).astype(np.int64)
    p = tmp_path / "rt.cells"
    write_cells(p, pos, level)
    pos2, level2 = load_cells(p)
    assert np.array_equal(pos, pos2) and np.array_equal(level, level2)


def test_scalars_round_trip_and_count_check(tmp_path):
    vals = np.linspace(0, 1, 64, dtype=np.float32)
    p = tmp_path / "v.scalars"
    write_scalars(p, vals)
    assert np.array_equal(load_scalars(p, 64), vals)
    with pytest.raises(FormatError, match="expected 65"):
        load_scalars(p, 65)


def test_config_round_trip(tmp_path):
    write_cells(tmp_path / "d.cells", [[0, 0, 0]], [0])
    write_scalars(tmp_path / "d.scalars", [1.0])
    write_config(tmp_path / "d.config", "d.cells", "d.scalars", (0.0, 2.0))
    cfg = load_config(tmp_path / "d.config")
    assert cfg.cells_path == tmp_path / "d.cells"
    assert cfg.value_range == (0.0, 2.0)
    field = load_field(cfg)
    assert len(field) == 1 and field.value_range == (0.0, 2.0)
    assert dataset_size_on_disc(cfg) == 16 + 4


def test_config_comments_and_errors(tmp_path):
    write_cells(tmp_path / "d.cells", [[0, 0, 0]], [0])
    write_scalars(tmp_path / "d.scalars", [1.0])
    (tmp_path / "ok.config").write_text(
        "# a comment\n\ncells d.cells\nscalars d.scalars\n")
    assert load_config(tmp_path / "ok.config").value_range is None

    (tmp_path / "bad.config").write_text("cells d.cells\nbogus line\n")
    with pytest.raises(FormatError, match="bad.config:2"):
        load_config(tmp_path / "bad.config")

    (tmp_path / "missing.config").write_text("cells nope.cells\nscalars d.scalars\n")
    with pytest.raises(FormatError, match="does not exist"):
        load_config(tmp_path / "missing.config")


def test_config_size_consistency(tmp_path):
    write_cells(tmp_path / "d.cells", [[0, 0, 0], [1, 0, 0]], [0, 0])
    write_scalars(tmp_path / "d.scalars", [1.0])
    write_config(tmp_path / "d.config", "d.cells", "d.scalars")
    with pytest.raises(FormatError, match="inconsistent"):
        load_config(tmp_path / "d.config")


def test_tf_round_trip_exact(tmp_path):
    tf = TransferFunction([[0.125, 0.25, 0.5, 0.75], [1, 0, 0.3, 1]],
                          (-2.0, 3.0), opacity_scale=1.5)
    p = tmp_path / "tf.json"
    save_transfer_function(p, tf)
    assert load_transfer_function(p) == tf


def test_tf_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n "domain": [0, 1],\n "entries": [[0,0,0,0],]\n}')
    with pytest.raises(FormatError, match="line 3"):
        load_transfer_function(p)


def test_camera_lookat_round_trip(tmp_path):
    spec = CameraSpec(eye=(1.0, 2.0, 3.0), center=(0.0, 0.0, 0.0),
                      up=(0.0, 1.0, 0.0), fovy_deg=50.0, near=0.5, far=100.0)
    p = tmp_path / "cam.json"
    save_camera(p, spec)
    got = load_camera(p)
    assert got.eye == spec.eye and got.fovy_deg == 50.0 and got.near == 0.5
    view, proj = got.resolve(640, 480)
    assert np.allclose(view, look_at(spec.eye, spec.center, spec.up))
    assert np.allclose(proj, perspective(50.0, 640 / 480, 0.5, 100.0))


def test_camera_matrix_round_trip(tmp_path):
    view = look_at((0, 1, 5), (0, 0, 0), (0, 1, 0))
    proj = perspective(60.0, 1.25, 0.1, 50.0)
    p = tmp_path / "cam.json"
    save_camera(p, CameraSpec(view=view, proj=proj))
    got = load_camera(p)
    assert np.allclose(got.view, view) and np.allclose(got.proj, proj)
    # wire format is row-vector/row-major: translation at indices 12..14
    doc = json.loads(p.read_text())
    assert np.allclose(doc["view"][12:15], view.T.flatten()[12:15])


def test_ppm_exact_bytes(tmp_path):
    img = np.array([[[255, 0, 0, 255], [0, 0, 255, 255]]], dtype=np.uint8)
    p = tmp_path / "two.ppm"
    write_ppm(p, img)
    data = p.read_bytes()
    assert data == b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 0, 255])
    assert np.array_equal(read_ppm(p), img[:, :, :3])


def test_write_image_dispatches_by_suffix(tmp_path):
    img = np.zeros((2, 3, 4), dtype=np.uint8)
    img[..., 1] = 200
    img[..., 3] = 255
    write_image(tmp_path / "a.ppm", img)
    assert (tmp_path / "a.ppm").read_bytes().startswith(b"P6")
    write_image(tmp_path / "a.png", img)
    data = (tmp_path / "a.png").read_bytes()
    assert data.startswith(b"\x89PNG\r\n\x1a\n")


def test_png_payload_decodes(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 255, size=(5, 4, 4)).astype(np.uint8)
    p = tmp_path / "r.png"
    write_png(p, img)
    data = p.read_bytes()
    start = data.index(b"IDAT") + 4
    length = int.from_bytes(data[start - 8:start - 4], "big")
    raw = zlib.decompress(data[start:start + length])
    rows = np.frombuffer(raw, dtype=np.uint8).reshape(5, 1 + 4 * 4)
    assert (rows[:, 0] == 0).all()  # filter byte: none
    assert np.array_equal(rows[:, 1:].reshape(5, 4, 4), img)


def test_bench_csv_format(tmp_path):
    p = tmp_path / "bench.csv"
    write_bench_csv(p, [(2.0, 10.0), (1.0, 20.0)])
    lines = p.read_text().splitlines()
    assert lines[0] == "dt,frame_time_ms,fps"
    assert lines[1] == "1.0,20.0,50.0"
    assert lines[2] == "2.0,10.0,100.0"
