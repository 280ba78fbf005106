"""Readers and writers: binary cell/scalar dumps, text configs, JSON
transfer functions and cameras, PPM/PNG images, benchmark CSV.

All binary numbers are little-endian.  Cells are records of four int32
(x, y, z, level); scalars are float32, one per cell in cell order.  A
config is a small text file tying the two together:

    # comment
    cells <path>
    scalars <path>
    range <lo> <hi>        (optional value-range override)

Relative paths are resolved against the config file's directory.  Every
save/load pair round-trips exactly.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .amr import AMRField
from .camera import emit_row_major, ingest_row_major, look_at, perspective
from .transfer import TransferFunction


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


@dataclass
class ConfigFile:
    cells_path: Path
    scalars_path: Path
    value_range: Optional[tuple[float, float]] = None


def load_cells(path) -> tuple[np.ndarray, np.ndarray]:
    """Cell records -> (pos (n,3) int64, level (n,) int32)."""
    data = Path(path).read_bytes()
    if len(data) == 0:
        raise FormatError(f"{path}: empty field")
    if len(data) % 16 != 0:
        raise FormatError(f"{path}: size {len(data)} is not a multiple of 16 bytes")
    raw = np.frombuffer(data, dtype="<i4").reshape(-1, 4)
    if (raw[:, 3] < 0).any():
        bad = int(np.nonzero(raw[:, 3] < 0)[0][0])
        raise FormatError(f"{path}: negative refinement level in record {bad}")
    return raw[:, :3].astype(np.int64), raw[:, 3].astype(np.int32)


def write_cells(path, pos, level) -> None:
    pos = np.asarray(pos, dtype=np.int64)
    level = np.asarray(level, dtype=np.int32)
    raw = np.empty((len(pos), 4), dtype="<i4")
    raw[:, :3] = pos
    raw[:, 3] = level
    Path(path).write_bytes(raw.tobytes())


def load_scalars(path, n: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) != 4 * n:
        raise FormatError(
            f"{path}: expected {n} scalars ({4 * n} bytes), found {len(data)} bytes")
    return np.frombuffer(data, dtype="<f4").copy()


def write_scalars(path, scalars) -> None:
    Path(path).write_bytes(np.asarray(scalars, dtype="<f4").tobytes())


def load_config(path) -> ConfigFile:
    path = Path(path)
    cells_path = scalars_path = None
    value_range = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "cells" and len(parts) == 2:
            cells_path = path.parent / parts[1]
        elif parts[0] == "scalars" and len(parts) == 2:
            scalars_path = path.parent / parts[1]
        elif parts[0] == "range" and len(parts) == 3:
            value_range = (float(parts[1]), float(parts[2]))
        else:
            raise FormatError(f"{path}:{lineno}: unrecognized directive {line!r}")
    if cells_path is None or scalars_path is None:
        raise FormatError(f"{path}: config must name both cells and scalars files")
    for p in (cells_path, scalars_path):
        if not p.exists():
            raise FormatError(f"{path}: referenced file {p} does not exist")
    nc = cells_path.stat().st_size // 16
    ns = scalars_path.stat().st_size // 4
    if nc != ns:
        raise FormatError(
            f"{path}: {nc} cells but {ns} scalars; the files are inconsistent")
    return ConfigFile(cells_path, scalars_path, value_range)


def write_config(path, cells_name: str, scalars_name: str,
                 value_range: Optional[tuple[float, float]] = None) -> None:
    lines = [f"cells {cells_name}", f"scalars {scalars_name}"]
    if value_range is not None:
        lines.append(f"range {value_range[0]} {value_range[1]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_field(config) -> AMRField:
    """Load and assemble the field a config points at."""
    cfg = config if isinstance(config, ConfigFile) else load_config(config)
    pos, level = load_cells(cfg.cells_path)
    scalars = load_scalars(cfg.scalars_path, len(pos))
    return AMRField(pos, level, scalars, value_range=cfg.value_range)


def dataset_size_on_disc(cfg: ConfigFile) -> int:
    return cfg.cells_path.stat().st_size + cfg.scalars_path.stat().st_size


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: line {e.lineno}: {e.msg}") from e


def save_transfer_function(path, tf: TransferFunction) -> None:
    doc = {
        "domain": [tf.domain[0], tf.domain[1]],
        "opacity_scale": tf.opacity_scale,
        "entries": [[float(c) for c in row] for row in tf.entries],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_transfer_function(path) -> TransferFunction:
    doc = _load_json(path)
    try:
        return TransferFunction(doc["entries"], tuple(doc["domain"]),
                                doc.get("opacity_scale", 1.0))
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: {e}") from e


@dataclass
class CameraSpec:
    """Either explicit matrices or a look-at description.

    Explicit 16-value matrices are stored row-major in the row-vector
    convention (translation in elements 12..14) and transposed on ingest.
    """

    view: Optional[np.ndarray] = None
    proj: Optional[np.ndarray] = None
    eye: Optional[tuple] = None
    center: tuple = (0.0, 0.0, 0.0)
    up: tuple = (0.0, 1.0, 0.0)
    fovy_deg: float = 60.0
    near: float = 0.1
    far: float = 1.0e4

    def resolve(self, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
        if self.view is not None and self.proj is not None:
            return self.view, self.proj
        view = look_at(self.eye, self.center, self.up)
        proj = perspective(self.fovy_deg, width / height, self.near, self.far)
        return view, proj


def save_camera(path, spec: CameraSpec) -> None:
    if spec.view is not None and spec.proj is not None:
        doc = {"view": emit_row_major(spec.view), "proj": emit_row_major(spec.proj)}
    else:
        doc = {
            "eye": list(spec.eye),
            "center": list(spec.center),
            "up": list(spec.up),
            "fovy_deg": spec.fovy_deg,
            "near": spec.near,
            "far": spec.far,
        }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_camera(path) -> CameraSpec:
    doc = _load_json(path)
    if "view" in doc or "proj" in doc:
        try:
            return CameraSpec(view=ingest_row_major(doc["view"]),
                              proj=ingest_row_major(doc["proj"]))
        except (KeyError, ValueError) as e:
            raise FormatError(f"{path}: camera matrices malformed: {e}") from e
    try:
        return CameraSpec(
            eye=tuple(doc["eye"]),
            center=tuple(doc.get("center", (0.0, 0.0, 0.0))),
            up=tuple(doc.get("up", (0.0, 1.0, 0.0))),
            fovy_deg=float(doc.get("fovy_deg", 60.0)),
            near=float(doc.get("near", 0.1)),
            far=float(doc.get("far", 1.0e4)),
        )
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: camera description malformed: {e}") from e


def write_image(path, rgba: np.ndarray) -> None:
    """Write an image from a (H, W, 3|4) uint8 array; row 0 is the top.

    ``.ppm`` writes binary P6 (RGB, alpha dropped); ``.png`` writes RGBA.
    """
    path = Path(path)
    if path.suffix.lower() == ".png":
        write_png(path, rgba)
    else:
        write_ppm(path, rgba)


def write_ppm(path, rgba: np.ndarray) -> None:
    rgba = np.asarray(rgba, dtype=np.uint8)
    h, w = rgba.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode()
    Path(path).write_bytes(header + rgba[:, :, :3].tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields = []
    i = 0
    while len(fields) < 4:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        fields.append(data[i:j])
        i = j
    if fields[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise FormatError(f"{path}: unsupported max value {maxval}")
    i += 1  # single whitespace after the header
    pixels = np.frombuffer(data[i:i + 3 * w * h], dtype=np.uint8)
    if pixels.size != 3 * w * h:
        raise FormatError(f"{path}: truncated pixel payload")
    return pixels.reshape(h, w, 3).copy()


def png_bytes(rgba: np.ndarray) -> bytes:
    rgba = np.asarray(rgba, dtype=np.uint8)
    h, w = rgba.shape[:2]
    if rgba.ndim == 2:
        rgba = rgba[:, :, None]
    if rgba.shape[2] == 3:
        rgba = np.concatenate(
            [rgba, np.full((h, w, 1), 255, dtype=np.uint8)], axis=2)
    raw = b"".join(b"\x00" + rgba[r].tobytes() for r in range(h))

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (struct.pack(">I", len(payload)) + tag + payload
                + struct.pack(">I", zlib.crc32(tag + payload)))

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n"
            + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(raw, 9))
            + chunk(b"IEND", b""))


def write_png(path, rgba: np.ndarray) -> None:
    Path(path).write_bytes(png_bytes(rgba))


def write_bench_csv(path, rows) -> None:
    """Rows of (dt, frame_time_ms); fps is derived.  Sorted by dt."""
    lines = ["dt,frame_time_ms,fps"]
    for dt, ms in sorted(rows):
        lines.append(f"{float(dt)},{float(ms)},{1000.0 / float(ms)}")
    Path(path).write_text("\n".join(lines) + "\n")
