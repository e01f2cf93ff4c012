"""Synthetic indoor propagation generator.

A deliberately simple substitute for ray-traced ground truth: log-distance
pathloss per transmitter, a fixed per-cell penetration loss for every
occupied cell the direct ray crosses, linear-power superposition, and a
noise floor.  Reflections and diffraction are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geokern
from .errors import CapacityError, ParameterError, PlacementError
from .grids import BuildingLayout, RadioMap, SampleSet, normalize_rss

# Clamp for the pathloss singularity at the transmitter cell.
D_MIN = 0.5

__all__ = [
    "Transmitter",
    "SynthParams",
    "gen_layout",
    "draw_transmitters",
    "synth_map",
    "place_sensors",
]


@dataclass(frozen=True)
class Transmitter:
    """Point emitter at real-valued cell coordinates."""

    row: float
    col: float
    power: float              # dBm
    pathloss_exponent: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.row) and np.isfinite(self.col)):
            raise ParameterError("transmitter center must be finite")
        if not np.isfinite(self.power):
            raise ParameterError("transmitter power must be finite")
        if not self.pathloss_exponent > 0:
            raise ParameterError(
                f"pathloss exponent must be positive, got {self.pathloss_exponent}"
            )

    def cell(self):
        """Containing cell under the [i-0.5, i+0.5) convention."""
        return int(np.floor(self.row + 0.5)), int(np.floor(self.col + 0.5))


@dataclass(frozen=True)
class SynthParams:
    height: int = 64
    width: int = 64
    tx_count: tuple = (1, 3)
    tx_power: tuple = (-10.0, 0.0)     # dBm draw range per transmitter
    pathloss_exponent: float = 2.0
    wall_loss_per_cell: float = 3.0    # dB per occupied cell crossed
    noise_floor: float = -90.0         # dBm
    rss_hi: float = 0.0                # dBm mapped to 1.0
    density: float = 0.2
    rect_side: tuple = (3, 12)
    seed: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ParameterError("grid must be at least 1x1")
        lo, hi = self.tx_count
        if not (1 <= lo <= hi):
            raise ParameterError(f"bad transmitter count range {self.tx_count}")
        if self.wall_loss_per_cell < 0:
            raise ParameterError("wall loss must be non-negative")
        if not 0.0 <= self.density <= 0.5:
            raise ParameterError(f"density {self.density} outside [0, 0.5]")
        slo, shi = self.rect_side
        if not (1 <= slo <= shi):
            raise ParameterError(f"bad rectangle side range {self.rect_side}")
        if not self.noise_floor < self.rss_hi:
            raise ParameterError("noise floor must sit below the top of scale")


def gen_layout(params, seed):
    """Drop random axis-aligned rectangles until the target density is hit."""
    rng = np.random.default_rng(seed)
    occ = np.zeros((params.height, params.width), dtype=np.uint8)
    total = occ.size
    slo, shi = params.rect_side
    # Cap keeps degenerate parameter choices from spinning forever.
    for _ in range(64 * total):
        if occ.sum() >= params.density * total:
            break
        h = int(rng.integers(slo, shi + 1))
        w = int(rng.integers(slo, shi + 1))
        h = min(h, params.height)
        w = min(w, params.width)
        r0 = int(rng.integers(0, params.height - h + 1))
        c0 = int(rng.integers(0, params.width - w + 1))
        occ[r0:r0 + h, c0:c0 + w] = 1
    return BuildingLayout(occ)


def draw_transmitters(params, layout, rng):
    """Sample 1..3 (configurable) transmitters on free cells with sub-cell jitter."""
    free = layout.free_cells()
    if len(free) == 0:
        raise CapacityError("layout has no free cell for a transmitter")
    lo, hi = params.tx_count
    n = int(rng.integers(lo, hi + 1))
    picks = rng.choice(len(free), size=min(n, len(free)), replace=False)
    txs = []
    for idx in picks:
        r, c = free[idx]
        jr, jc = rng.uniform(-0.5, 0.5, size=2)
        power = float(rng.uniform(*params.tx_power))
        txs.append(Transmitter(float(r + jr), float(c + jc), power,
                               params.pathloss_exponent))
    return txs


def synth_map(layout, txs, params):
    """Render ground-truth RSS for a layout and a set of transmitters.

    Per cell and transmitter: power - 10 n log10(max(d, 0.5)) minus the
    wall loss accumulated along the direct ray, summed in linear power,
    floored, then normalized to [0, 1] with building cells zeroed.
    """
    if not txs:
        raise ParameterError("need at least one transmitter")
    occ = layout.occupancy
    h, w = occ.shape
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    linear = np.zeros((h, w), dtype=np.float64)
    for tx in txs:
        ti, tj = tx.cell()
        if not (0 <= ti < h and 0 <= tj < w):
            raise PlacementError(f"transmitter at ({tx.row}, {tx.col}) off the grid")
        if occ[ti, tj]:
            raise PlacementError(
                f"transmitter at ({tx.row}, {tx.col}) inside a building cell"
            )
        d = np.hypot(rows - tx.row, cols - tx.col)
        np.maximum(d, D_MIN, out=d)
        crossings = geokern.wall_crossings(occ, tx.row, tx.col)
        dbm = (tx.power
               - 10.0 * tx.pathloss_exponent * np.log10(d)
               - params.wall_loss_per_cell * crossings)
        linear += 10.0 ** (dbm / 10.0)
    total = 10.0 * np.log10(linear)
    np.maximum(total, params.noise_floor, out=total)
    norm = normalize_rss(total, params.noise_floor, params.rss_hi).values
    norm[occ == 1] = 0.0
    # Quantize to the on-disk precision so save/load round trips are exact.
    return RadioMap(norm.astype(np.float32).astype(np.float64))


def place_sensors(truth, layout, k, seed):
    """Draw k distinct free cells uniformly without replacement."""
    if k < 0:
        raise ParameterError(f"sensor count must be non-negative, got {k}")
    free = layout.free_cells()
    if k > len(free):
        raise CapacityError(f"requested {k} sensors but only {len(free)} free cells")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(free), size=k, replace=False)
    rows = free[picks, 0]
    cols = free[picks, 1]
    rss = truth.values[rows, cols]
    return SampleSet(truth.height, truth.width, rows, cols, rss)
