"""Front-to-back absorption-emission rendering over the region structure.

Marching is adaptive: inside a region the world-space step is
``settings.dt * 2**finest_level``, so ``dt`` scales sampling density
relative to the local cell size instead of being an absolute step.  Each
step's opacity is corrected by ``alpha' = 1 - (1 - alpha)**step_len``
(alpha is opacity per unit world length), which makes homogeneous media
invariant under the step size.  The final partial step of a region is
clamped to the exit face and sampled at its midpoint.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numba
import numpy as np

from . import _kernels, camera
from .amr import AMRField
from .bricks import BrickStructure, active_set
from .camera import Channel, Ray
from .transfer import TransferFunction

TILE = 32


@dataclass
class RenderSettings:
    """Step scale, mode toggles, and compositing parameters."""

    dt: float = 1.0
    volume: bool = True
    iso: bool = False
    slice: bool = False
    iso_value: float = 0.0
    slice_normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    slice_offset: float = 0.0
    background: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)
    termination_alpha: float = 0.999
    culling: bool = True

    def __post_init__(self):
        if not 0.0 < self.dt <= 100.0:
            raise ValueError("dt must lie in (0, 100]")
        n = np.asarray(self.slice_normal, dtype=np.float64)
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise ValueError("slice normal must be non-zero")
        self.slice_normal = tuple(n / norm)
        if not 0.0 < self.termination_alpha <= 1.0:
            raise ValueError("termination alpha must lie in (0, 1]")


@dataclass
class FrameStats:
    frame_time_ms: float
    rays: int
    samples: int


@dataclass
class Scene:
    """Everything a frame needs: field, traversal structure, classification."""

    field: AMRField
    structure: BrickStructure
    tf: TransferFunction

    @classmethod
    def build(cls, field: AMRField, tf: TransferFunction) -> "Scene":
        return cls(field, BrickStructure.build(field), tf)


def scene_arrays(structure: BrickStructure):
    t = getattr(structure, "_scene_tuple", None)
    if t is None:
        t = (structure.node_lo, structure.node_hi, structure.node_child,
             structure.node_start, structure.node_count, structure.prim_ids,
             structure.abr_lo, structure.abr_hi, structure.abr_step,
             structure.abr_brick_off, structure.abr_brick_ids,
             structure.brick_lower, structure.brick_width, structure.brick_size,
             structure.brick_val_off, structure.brick_values)
        structure._scene_tuple = t
    return t


def compute_active_mask(structure: BrickStructure, tf: TransferFunction,
                        settings: RenderSettings) -> np.ndarray:
    """Per-region activity for the current classification and modes.

    Transfer-function culling applies to the volume integral; regions that
    can contain the iso level or the slice plane stay active regardless,
    since those render independently of volume opacity.
    """
    n = len(structure.abrs)
    if not settings.culling:
        return np.ones(n, dtype=bool)
    mask = np.zeros(n, dtype=bool)
    if settings.volume:
        mask |= active_set(structure.abrs, tf)
    if settings.iso and n:
        vr = structure.abr_vrange
        mask |= (vr[:, 0] <= settings.iso_value) & (settings.iso_value <= vr[:, 1])
    if settings.slice and n:
        sn = np.asarray(settings.slice_normal)
        proj = structure.abr_lo * sn, structure.abr_hi * sn
        pmin = np.minimum(*proj).sum(axis=1)
        pmax = np.maximum(*proj).sum(axis=1)
        mask |= (pmin <= settings.slice_offset) & (settings.slice_offset <= pmax)
    return mask


def _tf_args(tf: TransferFunction):
    entries = np.ascontiguousarray(tf.entries, dtype=np.float64)
    return entries, float(tf.domain[0]), float(tf.domain[1]), float(tf.opacity_scale)


def _march_args(tf: TransferFunction, settings: RenderSettings):
    entries, lo, hi, scale = _tf_args(tf)
    iso_rgba = tf.classify(settings.iso_value)
    sn = settings.slice_normal
    return (entries, lo, hi, scale,
            float(settings.dt), bool(settings.volume), bool(settings.iso),
            bool(settings.slice), float(settings.iso_value),
            float(sn[0]), float(sn[1]), float(sn[2]), float(settings.slice_offset),
            float(iso_rgba[0]), float(iso_rgba[1]), float(iso_rgba[2]),
            float(settings.termination_alpha))


def march(ray: Ray, structure: BrickStructure, field: AMRField,
          tf: TransferFunction, settings: RenderSettings,
          mask: Optional[np.ndarray] = None):
    """March one ray; returns (premultiplied RGBA, depth t, sample count).

    RGBA is the accumulated volume/surface contribution *before*
    background compositing; ``depth t`` is the ray parameter where
    accumulated opacity first crossed 0.5 (inf if never).
    """
    if mask is None:
        mask = compute_active_mask(structure, tf, settings)
    mask8 = np.ascontiguousarray(mask, dtype=np.uint8)
    o, d = ray.origin, ray.direction
    cr, cg, cb, a, t_depth, nsamp = _kernels.ray_march(
        float(o[0]), float(o[1]), float(o[2]),
        float(d[0]), float(d[1]), float(d[2]),
        float(ray.t_min), float(ray.t_max),
        scene_arrays(structure), mask8, *_march_args(tf, settings))
    return np.array([cr, cg, cb, a]), float(t_depth), int(nsamp)


def sample_positions(ray: Ray, structure: BrickStructure, settings: RenderSettings,
                     mask: Optional[np.ndarray] = None):
    """Marching sample stations along a ray: (t, covered length, region id).

    Uses the exact stepping arithmetic of the march kernel; intended for
    step-size diagnostics and tests.
    """
    if mask is None:
        mask = np.ones(len(structure.abrs), dtype=bool)
    mask8 = np.ascontiguousarray(mask, dtype=np.uint8)
    o, d = ray.origin, ray.direction
    return _kernels.ray_sample_positions(
        float(o[0]), float(o[1]), float(o[2]),
        float(d[0]), float(d[1]), float(d[2]),
        float(ray.t_min), float(ray.t_max),
        scene_arrays(structure), mask8, float(settings.dt))


def render_frame(channels: Sequence[Channel], scene: Scene,
                 settings: RenderSettings, workers: Optional[int] = None,
                 mask: Optional[np.ndarray] = None) -> list[FrameStats]:
    """Render every channel; deterministic regardless of tile scheduling.

    Returns per-channel stats; for a multi-channel frame the frame time is
    conventionally the maximum over channels (slowest viewport wins).
    """
    if not channels:
        raise ValueError("need at least one channel")
    if mask is None:
        mask = compute_active_mask(scene.structure, scene.tf, settings)
    mask8 = np.ascontiguousarray(mask, dtype=np.uint8)
    args = _march_args(scene.tf, settings)
    bg = settings.background
    arrays = scene_arrays(scene.structure)

    old_threads = numba.get_num_threads()
    if workers is not None:
        numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))
    stats = []
    try:
        for ch in channels:
            if ch.width <= 0 or ch.height <= 0:
                raise ValueError("zero-sized channel")
            inv_pv = camera.inverse_view_proj(ch.view, ch.proj)
            pv = np.ascontiguousarray(ch.proj @ ch.view)
            ntiles = ((ch.width + TILE - 1) // TILE) * ((ch.height + TILE - 1) // TILE)
            out_samples = np.zeros(ntiles, dtype=np.int64)
            start = time.perf_counter()
            _kernels.render_tiles(
                np.ascontiguousarray(inv_pv), pv, ch.width, ch.height, TILE,
                arrays, mask8, *args,
                float(bg[0]), float(bg[1]), float(bg[2]), float(bg[3]),
                ch.framebuffer, ch.depthbuffer, out_samples)
            elapsed = (time.perf_counter() - start) * 1000.0
            stats.append(FrameStats(
                frame_time_ms=elapsed,
                rays=ch.width * ch.height,
                samples=int(out_samples.sum()),
            ))
    finally:
        if workers is not None:
            numba.set_num_threads(old_threads)
    return stats


def frame_time_ms(stats: Sequence[FrameStats]) -> float:
    """Frame time of a multi-channel frame: the slowest channel."""
    return max(s.frame_time_ms for s in stats)
