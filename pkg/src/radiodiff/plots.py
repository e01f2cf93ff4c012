"""Deterministic raster rendering of maps through a fixed colormap LUT."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import ParameterError
from .grids import RadioMap

__all__ = ["colormap_lut", "render_map", "emit_plot"]


def colormap_lut(colormap_id="viridis"):
    """(256, 3) uint8 lookup table for a named matplotlib colormap."""
    import matplotlib

    try:
        cmap = matplotlib.colormaps[colormap_id]
    except KeyError:
        raise ParameterError(f"unknown colormap {colormap_id!r}") from None
    ramp = cmap(np.linspace(0.0, 1.0, 256))[:, :3]
    return (ramp * 255.0 + 0.5).astype(np.uint8)


def render_map(rmap, colormap_id="viridis"):
    """(H, W, 3) uint8 image; value 0 and 1 hit the colormap endpoints."""
    values = rmap.values if isinstance(rmap, RadioMap) else np.asarray(rmap, float)
    lut = colormap_lut(colormap_id)
    index = np.clip(values * 255.0 + 0.5, 0, 255).astype(np.uint8)
    return lut[index]


def emit_plot(rmap, out_path, colormap_id="viridis"):
    """Write a PNG; byte-identical output for identical inputs."""
    image = Image.fromarray(render_map(rmap, colormap_id))
    image.save(out_path, format="PNG")
    return out_path
