"""1-D RGBA transfer functions for scalar classification."""

from __future__ import annotations

import numpy as np


class TransferFunction:
    """Piecewise-linear RGBA lookup over a scalar domain.

    ``entries`` is an (N >= 2, 4) array of RGBA tuples with components in
    [0, 1], spread evenly over ``domain = (lo, hi)``.  The effective alpha
    of a lookup is ``min(1, entry_alpha * opacity_scale)``.
    """

    def __init__(self, entries, domain=(0.0, 1.0), opacity_scale: float = 1.0):
        entries = np.asarray(entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[1] != 4 or entries.shape[0] < 2:
            raise ValueError("entries must be an (N >= 2, 4) RGBA array")
        if ((entries < 0.0) | (entries > 1.0)).any():
            raise ValueError("entry components must lie in [0, 1]")
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise ValueError(f"domain lo must be < hi, got ({lo}, {hi})")
        if opacity_scale < 0.0:
            raise ValueError("opacity_scale must be >= 0")
        self.entries = entries
        self.domain = (lo, hi)
        self.opacity_scale = float(opacity_scale)

    def classify(self, v: float) -> np.ndarray:
        """RGBA for scalar ``v``: clamp to domain, lerp entries, scale alpha."""
        return self.classify_array(np.asarray([v], dtype=np.float64))[0]

    def classify_array(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        lo, hi = self.domain
        u = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
        x = u * (len(self.entries) - 1)
        i0 = np.minimum(x.astype(np.int64), len(self.entries) - 2)
        frac = (x - i0)[:, None]
        rgba = self.entries[i0] * (1.0 - frac) + self.entries[i0 + 1] * frac
        rgba[:, 3] = np.minimum(rgba[:, 3] * self.opacity_scale, 1.0)
        return rgba

    def max_alpha_in(self, vmin: float, vmax: float) -> float:
        """Max effective alpha the piecewise-linear curve reaches on [vmin, vmax].

        The interval is clamped to the domain first (out-of-domain values
        classify to the nearest end).  The max over a clamped interval is
        attained at its ends or at interior entry knots.
        """
        lo, hi = self.domain
        a = min(max(vmin, lo), hi)
        b = min(max(vmax, lo), hi)
        if b < a:
            a, b = b, a
        candidates = [a, b]
        n = len(self.entries)
        knots = lo + (hi - lo) * np.arange(n) / (n - 1)
        candidates.extend(k for k in knots if a < k < b)
        alpha = self.classify_array(np.asarray(candidates))[:, 3]
        return float(alpha.max())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TransferFunction)
            and np.array_equal(self.entries, other.entries)
            and self.domain == other.domain
            and self.opacity_scale == other.opacity_scale
        )


def grayscale_ramp(domain, n: int = 16, opacity_scale: float = 1.0) -> TransferFunction:
    """Default map: value ramps both luminance and alpha from 0 to 1."""
    t = np.linspace(0.0, 1.0, n)
    entries = np.stack([t, t, t, t], axis=1)
    return TransferFunction(entries, domain, opacity_scale)
