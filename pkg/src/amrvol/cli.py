"""Command-line entry points: info, render, bench, synth, serve.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 render
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io_formats, synth
from .bench import BenchPlan, run_sweep
from .bricks import BrickStructure
from .camera import Channel, SingularMatrixError, translate
from .io_formats import CameraSpec, FormatError
from .render import RenderSettings, Scene, frame_time_ms, render_frame
from .transfer import TransferFunction, grayscale_ramp

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_RENDER = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _human_size(nbytes: int) -> str:
    units = ["B", "KB", "MB", "GB", "TB"]
    size = float(nbytes)
    for u in units:
        if size < 1024.0 or u == units[-1]:
            return f"{size:.1f} {u}" if u != "B" else f"{int(size)} B"
        size /= 1024.0
    return f"{size:.1f} TB"


def default_tf(field) -> TransferFunction:
    lo, hi = field.value_range
    if not lo < hi:  # constant fields still need a usable domain
        lo, hi = lo - 0.5, lo + 0.5
    return grayscale_ramp((lo, hi))


def _load_scene(config_path, tf_path=None):
    cfg = io_formats.load_config(config_path)
    field = io_formats.load_field(cfg)
    structure = BrickStructure.build(field)
    if tf_path is not None:
        tf = io_formats.load_transfer_function(tf_path)
    else:
        tf = default_tf(field)
    return cfg, Scene(field, structure, tf)


def default_camera(field) -> CameraSpec:
    """Frame the dataset bounds from an oblique overview position."""
    lo, hi = field.world_bounds
    center = 0.5 * (lo + hi)
    extent = float((hi - lo).max())
    direction = np.array([0.9, 0.55, 1.25])
    eye = center + direction / np.linalg.norm(direction) * 2.2 * extent
    return CameraSpec(eye=tuple(eye), center=tuple(center), up=(0.0, 1.0, 0.0),
                      fovy_deg=45.0, near=0.01 * extent, far=100.0 * extent)


def _make_channels(spec: CameraSpec, width, height, stereo_offset):
    view, proj = spec.resolve(width, height)
    if stereo_offset is None:
        return [Channel(view=view, proj=proj, width=width, height=height)]
    half = 0.5 * float(stereo_offset)
    # shifting the camera by +d along its right axis pre-translates the
    # view by -d in view space
    left = translate((+half, 0.0, 0.0)) @ view
    right = translate((-half, 0.0, 0.0)) @ view
    return [Channel(view=left, proj=proj, width=width, height=height),
            Channel(view=right, proj=proj, width=width, height=height)]


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise _UsageError(f"--size expects WxH, got {text!r}")
    if w <= 0 or h <= 0:
        raise _UsageError("--size must be positive")
    return w, h


def _settings_from_args(args) -> RenderSettings:
    kw = dict(dt=args.dt)
    if getattr(args, "iso", None) is not None:
        kw.update(iso=True, iso_value=args.iso)
    if getattr(args, "slice", None) is not None:
        parts = [float(x) for x in args.slice.split(",")]
        if len(parts) != 4:
            raise _UsageError("--slice expects nx,ny,nz,offset")
        kw.update(slice=True, slice_normal=tuple(parts[:3]), slice_offset=parts[3])
    if getattr(args, "no_volume", False):
        kw.update(volume=False)
    return RenderSettings(**kw)


def cmd_info(args) -> dict:
    cfg, scene = _load_scene(args.config)
    size = io_formats.dataset_size_on_disc(cfg)
    stats = {
        "cells": len(scene.field),
        "bricks": len(scene.structure.bricks),
        "abrs": len(scene.structure.abrs),
        "size_on_disc": size,
        "value_range": scene.field.value_range,
    }
    print(f"{'# Cells':>12} {'# Bricks':>12} {'# ABRs':>12} {'Size on Disc':>14}  Value Range")
    vr = stats["value_range"]
    print(f"{stats['cells']:>12} {stats['bricks']:>12} {stats['abrs']:>12} "
          f"{_human_size(size):>14}  [{vr[0]:g}, {vr[1]:g}]")
    return stats


def cmd_render(args):
    width, height = _parse_size(args.size)
    settings = _settings_from_args(args)
    cfg, scene = _load_scene(args.config, args.tf)
    spec = io_formats.load_camera(args.camera) if args.camera else default_camera(scene.field)
    channels = _make_channels(spec, width, height, args.stereo)
    stats = render_frame(channels, scene, settings, workers=args.workers)
    if len(channels) == 1:
        image = channels[0].framebuffer
    else:
        image = np.concatenate([ch.framebuffer for ch in channels], axis=1)
    io_formats.write_image(args.output, image)
    for i, s in enumerate(stats):
        print(f"channel {i}: {s.frame_time_ms:.2f} ms, {s.rays} rays, {s.samples} samples")
    print(f"frame: {frame_time_ms(stats):.2f} ms -> {args.output}")
    return stats


def cmd_bench(args):
    width, height = _parse_size(args.size)
    plan = BenchPlan(dt_min=args.dt_min, dt_max=args.dt_max, samples=args.samples,
                     spacing=args.spacing, repetitions=args.reps, warmup=args.warmup)
    cfg, scene = _load_scene(args.config, args.tf)
    spec = io_formats.load_camera(args.camera) if args.camera else default_camera(scene.field)
    channels = _make_channels(spec, width, height, args.stereo)
    settings = RenderSettings()
    rows = run_sweep(scene, channels, settings, plan, workers=args.workers)
    io_formats.write_bench_csv(args.output, rows)
    for dt, ms in rows:
        print(f"dt={dt:<8g} {ms:8.2f} ms   {1000.0 / ms:7.2f} fps")
    print(f"-> {args.output}")
    return rows


def cmd_synth(args):
    field = synth.generate(blobs=args.blobs, levels=args.levels,
                           threshold=args.threshold, seed=args.seed, root=args.root)
    out = synth.write_dataset(args.output, field)
    print(f"{len(field)} cells over {len(np.unique(field.level))} level(s) -> {out}")
    return out


def cmd_serve(args):
    from . import service  # deferred: pulls in fastapi/uvicorn

    host, _, port = args.listen.rpartition(":")
    try:
        port = int(port)
    except ValueError:
        raise _UsageError(f"--listen expects host:port, got {args.listen!r}")
    width, height = _parse_size(args.size)
    service.run(args.config, host=host or "127.0.0.1", port=port,
                width=width, height=height, stereo=args.stereo)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="amrvol", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("info", help="dataset statistics")
    q.add_argument("config")
    q.set_defaults(func=cmd_info)

    q = sub.add_parser("render", help="render one frame offline")
    q.add_argument("config")
    q.add_argument("--camera", help="camera JSON (default: auto-framed overview)")
    q.add_argument("--tf", help="transfer function JSON (default: grayscale ramp)")
    q.add_argument("--dt", type=float, default=1.0)
    q.add_argument("--size", default="512x512")
    q.add_argument("--stereo", type=float, help="stereo eye offset in world units")
    q.add_argument("--iso", type=float, help="render the iso surface at this value")
    q.add_argument("--slice", help="slice plane as nx,ny,nz,offset")
    q.add_argument("--no-volume", action="store_true", help="disable volume integration")
    q.add_argument("--workers", type=int)
    q.add_argument("-o", "--output", default="frame.ppm")
    q.set_defaults(func=cmd_render)

    q = sub.add_parser("bench", help="dt sweep benchmark")
    q.add_argument("config")
    q.add_argument("--camera")
    q.add_argument("--tf")
    q.add_argument("--dt-min", type=float, default=0.25)
    q.add_argument("--dt-max", type=float, default=4.0)
    q.add_argument("--samples", type=int, default=5)
    q.add_argument("--spacing", choices=("linear", "log"), default="log")
    q.add_argument("--reps", type=int, default=5)
    q.add_argument("--warmup", type=int, default=2)
    q.add_argument("--size", default="512x512")
    q.add_argument("--stereo", type=float)
    q.add_argument("--workers", type=int)
    q.add_argument("-o", "--output", default="bench.csv")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("synth", help="generate a synthetic AMR dataset")
    q.add_argument("--blobs", type=int, default=4)
    q.add_argument("--levels", type=int, default=3)
    q.add_argument("--threshold", type=float, default=0.08)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--root", type=int, default=8)
    q.add_argument("-o", "--output", default="synth.config")
    q.set_defaults(func=cmd_synth)

    q = sub.add_parser("serve", help="run the frame-streaming viewer service")
    q.add_argument("--config", required=True)
    q.add_argument("--listen", default="127.0.0.1:8707")
    q.add_argument("--size", default="640x480")
    q.add_argument("--stereo", type=float)
    q.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return EXIT_OK
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (SingularMatrixError, ValueError) as e:
        print(f"render error: {e}", file=sys.stderr)
        return EXIT_RENDER


if __name__ == "__main__":
    sys.exit(main())
