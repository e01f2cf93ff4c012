"""Assembly of the enriched sample set fed to the diffusion conditioner."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .grids import EnrichedSampleSet, RadioMap, check_same_shape

# Reference point budgets at 256 x 256, scaled by grid area elsewhere.
REF_AREA = 256 * 256
REF_MAX_CRITICAL = 100
REF_N_RANDOM = 100

__all__ = ["assemble_es", "scaled_budget"]


def scaled_budget(height, width, reference=REF_MAX_CRITICAL):
    """Point budget scaled by area relative to the 256 x 256 reference."""
    return max(1, round(reference * (height * width) / REF_AREA))


def assemble_es(x_a, samples, crit, n_random, seed, layout=None):
    """Union of measured samples, critical points and random fill-ins.

    Critical and random cells carry the rough-map value; measured entries
    win every collision.  Random cells are drawn uniformly without
    replacement from unoccupied cells when a layout is given, from all
    cells otherwise.  Deterministic given the seed.
    """
    if n_random < 0:
        raise ParameterError(f"n_random must be non-negative, got {n_random}")
    if not isinstance(x_a, RadioMap):
        raise TypeError("x_a must be a RadioMap")
    check_same_shape(x_a, samples)
    h, w = x_a.shape
    values = x_a.values
    # Precedence by insertion order: random, then critical, then measured.
    chosen = {}
    if n_random:
        rng = np.random.default_rng(seed)
        if layout is not None:
            check_same_shape(x_a, layout)
            eligible = layout.free_cells()
        else:
            eligible = np.argwhere(np.ones((h, w), dtype=bool))
        n = min(n_random, len(eligible))
        for idx in rng.choice(len(eligible), size=n, replace=False):
            r, c = int(eligible[idx][0]), int(eligible[idx][1])
            chosen[(r, c)] = (values[r, c], "random")
    for r, c in crit:
        r, c = int(r), int(c)
        if not (0 <= r < h and 0 <= c < w):
            raise IndexError(f"critical point ({r}, {c}) out of bounds")
        chosen[(r, c)] = (values[r, c], "critical")
    for r, c, v in samples.entries():
        chosen[(r, c)] = (v, "measured")
    cells = sorted(chosen)
    rows = np.array([r for r, _ in cells], dtype=np.int64)
    cols = np.array([c for _, c in cells], dtype=np.int64)
    rss = np.array([chosen[cell][0] for cell in cells], dtype=np.float64)
    origin = np.array([chosen[cell][1] for cell in cells], dtype=object)
    return EnrichedSampleSet(h, w, rows, cols, rss, origin)
