import numpy as np
import pytest

from amrvol.cli import main
from amrvol.io_formats import read_ppm


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_data")
    cfg = root / "toy.config"
    rc = main(["synth", "--blobs", "2", "--levels", "2", "--threshold", "0.25",
               "--seed", "5", "--root", "4", "-o", str(cfg)])
    assert rc == 0
    return cfg


def test_synth_deterministic(tmp_path):
    a = tmp_path / "a.config"
    b = tmp_path / "b.config"
    for out in (a, b):
        assert main(["synth", "--seed", "9", "--root", "4", "--levels", "2",
                     "-o", str(out)]) == 0
    assert (tmp_path / "a.cells").read_bytes() == (tmp_path / "b.cells").read_bytes()
    assert (tmp_path / "a.scalars").read_bytes() == (tmp_path / "b.scalars").read_bytes()


def test_synth_no_blobs_single_brick(tmp_path, capsys):
    cfg = tmp_path / "flat.config"
    assert main(["synth", "--blobs", "0", "--levels", "3", "--root", "4",
                 "-o", str(cfg)]) == 0
    capsys.readouterr()
    assert main(["info", str(cfg)]) == 0
    out = capsys.readouterr().out
    row = out.splitlines()[1].split()
    assert row[0] == "64" and row[1] == "1" and row[2] == "1"


def test_synth_infinite_threshold_uniform(tmp_path):
    cfg = tmp_path / "uni.config"
    assert main(["synth", "--blobs", "3", "--levels", "3", "--threshold", "inf",
                 "--root", "4", "-o", str(cfg)]) == 0
    pos, level = np.frombuffer((tmp_path / "uni.cells").read_bytes(),
                               dtype="<i4").reshape(-1, 4)[:, :3], None
    levels = np.frombuffer((tmp_path / "uni.cells").read_bytes(),
                           dtype="<i4").reshape(-1, 4)[:, 3]
    assert len(pos) == 64 and (levels == 2).all()


def test_info_schema(dataset, capsys):
    assert main(["info", str(dataset)]) == 0
    out = capsys.readouterr().out
    header = out.splitlines()[0]
    assert header.index("Cells") < header.index("Bricks") < header.index("ABRs") < header.index("Size")


def test_render_deterministic_files(dataset, tmp_path):
    imgs = []
    for name in ("r1.ppm", "r2.ppm"):
        out = tmp_path / name
        rc = main(["render", str(dataset), "--size", "40x30", "--dt", "1.0",
                   "-o", str(out)])
        assert rc == 0
        imgs.append(out.read_bytes())
    assert imgs[0] == imgs[1]


def test_render_constant_field_uniform_color(tmp_path, capsys):
    cfg = tmp_path / "flat.config"
    main(["synth", "--blobs", "0", "--levels", "1", "--root", "4", "-o", str(cfg)])
    out = tmp_path / "flat.ppm"
    # constant zero field, grayscale tf: volume pixels classify to a single
    # color; with an opaque white tf the covered pixels are uniform
    tf = tmp_path / "tf.json"
    tf.write_text('{"domain": [-1, 1], "opacity_scale": 1.0, '
                  '"entries": [[0.2, 0.6, 0.9, 1.0], [0.2, 0.6, 0.9, 1.0]]}')
    rc = main(["render", str(cfg), "--tf", str(tf), "--size", "32x32",
               "-o", str(out)])
    assert rc == 0
    img = read_ppm(out)
    covered = (img != 0).any(axis=2)
    assert covered.any()
    colors = np.unique(img[covered], axis=0)
    assert len(colors) == 1
    assert tuple(colors[0]) == tuple(np.floor(np.array([0.2, 0.6, 0.9]) * 255 + 0.5).astype(int))


def test_render_dt_convergence_through_cli(dataset, tmp_path):
    outs = {}
    for dt in ("0.5", "1.0"):
        out = tmp_path / f"c{dt}.ppm"
        assert main(["render", str(dataset), "--dt", dt, "--size", "48x48",
                     "-o", str(out)]) == 0
        outs[dt] = read_ppm(out).astype(int)
    assert np.abs(outs["0.5"] - outs["1.0"]).max() <= 64


def test_render_stereo_side_by_side(dataset, tmp_path):
    out = tmp_path / "st.ppm"
    assert main(["render", str(dataset), "--stereo", "0.5", "--size", "32x24",
                 "-o", str(out)]) == 0
    img = read_ppm(out)
    assert img.shape == (24, 64, 3)
    left, right = img[:, :32], img[:, 32:]
    assert not np.array_equal(left, right)  # parallax


def test_bench_csv_rows(dataset, tmp_path, capsys):
    out = tmp_path / "b.csv"
    rc = main(["bench", str(dataset), "--dt-min", "1", "--dt-max", "2",
               "--samples", "2", "--spacing", "linear", "--reps", "2",
               "--warmup", "1", "--size", "24x24", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "dt,frame_time_ms,fps"
    rows = [line.split(",") for line in lines[1:]]
    assert [float(r[0]) for r in rows] == [1.0, 2.0]
    for r in rows:
        assert float(r[2]) == pytest.approx(1000.0 / float(r[1]))


def test_usage_error_exit_code():
    assert main(["render"]) == 1
    assert main(["bogus"]) == 1
    assert main(["render", "x.config", "--size", "7"]) == 1


def test_io_error_exit_code(tmp_path):
    assert main(["info", str(tmp_path / "missing.config")]) == 2
    bad = tmp_path / "bad.config"
    bad.write_text("cells nope\nscalars nope\n")
    assert main(["info", str(bad)]) == 2
