"""Matrix builders, viewports, and inverse-projection ray generation.

Matrices are numpy (4, 4) float64 in column-vector convention
(``clip = proj @ view @ world``), right-handed, looking down -z in view
space, NDC z in [-1, 1].  Primary rays are generated backwards: the NDC
points ``(x, y, -1)`` and ``(x, y, +1)`` are pulled through
``inverse(proj @ view)`` with perspective divide, so whatever frustum the
matrices encode -- symmetric or off-axis -- the ray set matches it.

External 16-value matrices (files, wire) are exchanged in row-major order
of the row-vector convention and transposed on ingest/emit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np


class SingularMatrixError(ValueError):
    """The projection * view product cannot be inverted."""


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    t_min: float = 0.0
    t_max: float = math.inf

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            raise ValueError("ray direction must be non-zero")
        self.direction = d / norm
        if self.t_min > self.t_max:
            raise ValueError("t_min must be <= t_max")

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass
class Channel:
    """One viewport: matrices plus RGBA8 and depth buffers.

    Buffer row 0 is the *top* image row; pixel coordinate ``j`` in
    :func:`ray_for_pixel` counts up from the bottom (NDC convention), so
    pixel (i, j) lives at ``framebuffer[height - 1 - j, i]``.  Depth values
    are NDC z remapped to [0, 1].
    """

    view: np.ndarray
    proj: np.ndarray
    width: int
    height: int
    framebuffer: Optional[np.ndarray] = None
    depthbuffer: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("channel must have positive pixel dimensions")
        self.view = np.asarray(self.view, dtype=np.float64).reshape(4, 4)
        self.proj = np.asarray(self.proj, dtype=np.float64).reshape(4, 4)
        if self.framebuffer is None:
            self.framebuffer = np.zeros((self.height, self.width, 4), dtype=np.uint8)
        if self.depthbuffer is None:
            self.depthbuffer = np.ones((self.height, self.width), dtype=np.float32)


def perspective(fovy_deg: float, aspect: float, near: float, far: float) -> np.ndarray:
    """Symmetric right-handed perspective projection (GL conventions)."""
    if near <= 0.0 or far <= near:
        raise ValueError("need 0 < near < far")
    if fovy_deg <= 0.0 or fovy_deg >= 180.0 or aspect <= 0.0:
        raise ValueError("degenerate field of view")
    f = 1.0 / math.tan(math.radians(fovy_deg) / 2.0)
    m = np.zeros((4, 4))
    m[0, 0] = f / aspect
    m[1, 1] = f
    m[2, 2] = (far + near) / (near - far)
    m[2, 3] = 2.0 * far * near / (near - far)
    m[3, 2] = -1.0
    return m


def frustum(left: float, right: float, bottom: float, top: float,
            near: float, far: float) -> np.ndarray:
    """Off-axis perspective: near-plane window [l, r] x [b, t] at z = -near."""
    if near <= 0.0 or far <= near:
        raise ValueError("need 0 < near < far")
    if right == left or top == bottom:
        raise ValueError("degenerate frustum window")
    m = np.zeros((4, 4))
    m[0, 0] = 2.0 * near / (right - left)
    m[1, 1] = 2.0 * near / (top - bottom)
    m[0, 2] = (right + left) / (right - left)
    m[1, 2] = (top + bottom) / (top - bottom)
    m[2, 2] = -(far + near) / (far - near)
    m[2, 3] = -2.0 * far * near / (far - near)
    m[3, 2] = -1.0
    return m


def look_at(eye, center, up) -> np.ndarray:
    eye = np.asarray(eye, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    fwd = center - eye
    n = np.linalg.norm(fwd)
    if n == 0.0:
        raise ValueError("eye and center coincide")
    fwd = fwd / n
    side = np.cross(fwd, up)
    n = np.linalg.norm(side)
    if n < 1e-12:
        raise ValueError("up is parallel to the view direction")
    side = side / n
    upv = np.cross(side, fwd)
    m = np.eye(4)
    m[0, :3] = side
    m[1, :3] = upv
    m[2, :3] = -fwd
    m[:3, 3] = m[:3, :3] @ -eye
    return m


def translate(offset) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = np.asarray(offset, dtype=np.float64)
    return m


def inverse_view_proj(view: np.ndarray, proj: np.ndarray) -> np.ndarray:
    pv = proj @ view
    if abs(np.linalg.det(pv)) <= 1e-12:
        raise SingularMatrixError("projection * view is singular")
    return np.linalg.inv(pv)


def ray_for_ndc(view: np.ndarray, proj: np.ndarray, nx: float, ny: float,
                inv_pv: Optional[np.ndarray] = None) -> Ray:
    """World-space ray through NDC (nx, ny): unproject z=-1 and z=+1."""
    if inv_pv is None:
        inv_pv = inverse_view_proj(view, proj)
    near_h = inv_pv @ np.array([nx, ny, -1.0, 1.0])
    far_h = inv_pv @ np.array([nx, ny, 1.0, 1.0])
    if abs(near_h[3]) < 1e-15 or abs(far_h[3]) < 1e-15:
        raise SingularMatrixError("unprojected point at infinity")
    near = near_h[:3] / near_h[3]
    far = far_h[:3] / far_h[3]
    return Ray(origin=near, direction=far - near)


def ray_for_pixel(channel: Channel, i: int, j: int) -> Ray:
    """Primary ray through the center of pixel (i, j); j counts from the bottom."""
    if not (0 <= i < channel.width and 0 <= j < channel.height):
        raise ValueError("pixel outside the channel")
    nx = 2.0 * (i + 0.5) / channel.width - 1.0
    ny = 2.0 * (j + 0.5) / channel.height - 1.0
    return ray_for_ndc(channel.view, channel.proj, nx, ny)


def ndc_depth(view: np.ndarray, proj: np.ndarray, point) -> float:
    """NDC z of a world point under proj @ view, in [-1, 1] inside the frustum."""
    h = (proj @ view) @ np.append(np.asarray(point, dtype=np.float64), 1.0)
    if abs(h[3]) < 1e-15:
        raise SingularMatrixError("point projects to infinity")
    return float(h[2] / h[3])


def ingest_row_major(values) -> np.ndarray:
    """16 values in row-major/row-vector layout -> column-vector matrix."""
    arr = np.asarray(values, dtype=np.float64).reshape(4, 4)
    return arr.T.copy()


def emit_row_major(m: np.ndarray) -> list[float]:
    return [float(x) for x in np.asarray(m, dtype=np.float64).T.flatten()]
