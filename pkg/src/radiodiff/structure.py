"""Structure-tensor field and critical-point detection on a rough map.

The local appearance change E(u, v) of a map under a window shift (u, v)
is, to second order, the quadratic form [u v] M [u v]^T with M the
Gaussian-weighted sum of gradient outer products.  Cells where both
eigenvalues of M are large change under every shift direction; those are
the critical points handed to the sampler enrichment stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ParameterError
from .grids import BuildingLayout, RadioMap, check_same_shape

DEFAULT_SIGMA_W = 1.0
# Window truncated at 4 sigma so the weights decay essentially to zero.
_TRUNCATE = 4.0
NMS_RADIUS = 2.0
# Relative response threshold, with an absolute floor against fp dust.
TAU_FRACTION = 0.05
TAU_FLOOR = 1e-12

__all__ = ["StructureTensorField", "structure_field", "critical_points", "gradients"]


def gradients(values):
    """Central differences; second-order one-sided at the borders.

    Exact for affine fields everywhere, so planar ramps produce a
    rank-one tensor with zero minimum eigenvalue instead of border
    artifacts.
    """
    gy, gx = np.gradient(np.asarray(values, dtype=np.float64))
    return gy, gx


@dataclass(frozen=True)
class StructureTensorField:
    """Per-cell symmetric 2x2 matrices [[a, b], [b, c]]."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    sigma_w: float

    @property
    def shape(self):
        return self.a.shape

    def eigenvalues(self):
        """(lam1, lam2) with lam1 >= lam2, closed form for 2x2 symmetric."""
        half_trace = (self.a + self.c) / 2.0
        spread = np.sqrt(((self.a - self.c) / 2.0) ** 2 + self.b ** 2)
        return half_trace + spread, half_trace - spread

    def response(self):
        """Minimum-eigenvalue corner response."""
        return self.eigenvalues()[1]

    def quadratic_form(self, u, v):
        """E(u, v) to second order: the form evaluated at shift (v rows, u cols)."""
        return self.a * u * u + 2.0 * self.b * u * v + self.c * v * v


def structure_field(rough, sigma_w=DEFAULT_SIGMA_W):
    if not sigma_w > 0:
        raise ParameterError(f"window width must be positive, got {sigma_w}")
    values = rough.values if isinstance(rough, RadioMap) else np.asarray(rough, float)
    gy, gx = gradients(values)
    smooth = lambda f: gaussian_filter(f, sigma_w, truncate=_TRUNCATE)
    return StructureTensorField(
        a=smooth(gx * gx), b=smooth(gx * gy), c=smooth(gy * gy), sigma_w=sigma_w
    )


def critical_points(field, layout, max_n, tau=None):
    """Top cells by min-eigenvalue response with greedy non-maximum suppression.

    tau defaults to 5% of the peak response (floored at a tiny absolute
    value); building cells are excluded.  Returned list is ordered by
    decreasing response, length <= max_n.
    """
    if max_n < 0:
        raise ParameterError(f"max_n must be non-negative, got {max_n}")
    if isinstance(layout, BuildingLayout):
        check_same_shape(field, layout)
        occupied = layout.occupancy.astype(bool)
    else:
        occupied = np.zeros(field.shape, dtype=bool)
    response = field.response().copy()
    response[occupied] = -np.inf
    if tau is None:
        peak = response.max()
        tau = max(TAU_FRACTION * peak, TAU_FLOOR) \
            if np.isfinite(peak) and peak > 0 else TAU_FLOOR
    if max_n == 0:
        return []
    h, w = response.shape
    order = np.argsort(response, axis=None)[::-1]
    suppressed = np.zeros((h, w), dtype=bool)
    radius = int(np.floor(NMS_RADIUS))
    picked = []
    for flat in order:
        r, c = divmod(int(flat), w)
        if response[r, c] <= tau:
            break
        if suppressed[r, c]:
            continue
        picked.append((r, c))
        if len(picked) == max_n:
            break
        r0, r1 = max(0, r - radius), min(h, r + radius + 1)
        c0, c1 = max(0, c - radius), min(w, c + radius + 1)
        for rr in range(r0, r1):
            for cc in range(c0, c1):
                if (rr - r) ** 2 + (cc - c) ** 2 <= NMS_RADIUS ** 2:
                    suppressed[rr, cc] = True
    return picked
