"""Grid-valued domain types: radio maps, building layouts, sparse sample sets.

Conventions used throughout the package:

* grids are indexed ``(row, col)`` with row 0 at the top;
* radio maps hold unit-interval RSS values (min-max normalised from dBm);
* cells occupied by a building carry no RSS and are forced to exactly 0;
* the continuous coordinate of cell ``(i, j)`` is its centre ``(i, j)``,
  i.e. cell ``i`` spans ``[i - 0.5, i + 0.5)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass
class RadioMap:
    """An H x W grid of unit-interval RSS values."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ShapeError(f"radio map must be a 2-D grid, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ParameterError("radio map contains non-finite values")
        lo, hi = float(self.values.min()), float(self.values.max())
        if lo < 0.0 or hi > 1.0:
            raise ParameterError(f"radio map values must lie in [0, 1], got [{lo}, {hi}]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def copy(self) -> "RadioMap":
        return RadioMap(self.values.copy())

    def masked(self, layout: "BuildingLayout") -> "RadioMap":
        """Return a copy with occupied cells forced to 0."""
        check_same_shape(self, layout)
        out = self.values.copy()
        out[layout.occupancy != 0] = 0.0
        return RadioMap(out)


@dataclass
class BuildingLayout:
    """An H x W binary occupancy grid (1 = building, 0 = free space)."""

    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupancy)
        if occ.ndim != 2 or min(occ.shape) < 1:
            raise ShapeError(f"layout must be a 2-D grid, got shape {occ.shape}")
        if not np.isin(occ, (0, 1)).all():
            raise ParameterError("layout occupancy must contain only 0 and 1")
        self.occupancy = occ.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape

    @property
    def free_fraction(self) -> float:
        return float((self.occupancy == 0).mean())

    def free_cells(self) -> np.ndarray:
        """(N, 2) array of (row, col) indices of unoccupied cells."""
        return np.argwhere(self.occupancy == 0)


@dataclass
class SampleSet:
    """Sparse sensor measurements: distinct in-bounds (row, col, rss) entries."""

    height: int
    width: int
    rows: np.ndarray
    cols: np.ndarray
    rss: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).ravel()
        self.cols = np.asarray(self.cols, dtype=np.int64).ravel()
        self.rss = np.asarray(self.rss, dtype=np.float64).ravel()
        if not (len(self.rows) == len(self.cols) == len(self.rss)):
            raise ShapeError("rows, cols and rss must have equal length")
        if len(self.rows):
            if self.rows.min() < 0 or self.rows.max() >= self.height \
                    or self.cols.min() < 0 or self.cols.max() >= self.width:
                raise IndexError("sample location out of grid bounds")
            flat = self.rows * self.width + self.cols
            if len(np.unique(flat)) != len(flat):
                raise ParameterError("duplicate sample locations")
            if self.rss.min() < 0.0 or self.rss.max() > 1.0:
                raise ParameterError("sample rss values must lie in [0, 1]")

    @classmethod
    def from_entries(cls, height, width, entries) -> "SampleSet":
        entries = list(entries)
        if not entries:
            return cls(height, width, np.empty(0, np.int64), np.empty(0, np.int64),
                       np.empty(0, np.float64))
        r, c, v = zip(*entries)
        return cls(height, width, np.array(r), np.array(c), np.array(v))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def entries(self) -> list[tuple[int, int, float]]:
        return [(int(r), int(c), float(v)) for r, c, v in zip(self.rows, self.cols, self.rss)]

    def dense(self) -> np.ndarray:
        """Dense H x W view: rss at sample cells, 0 elsewhere."""
        out = np.zeros((self.height, self.width), dtype=np.float64)
        out[self.rows, self.cols] = self.rss
        return out

    def mask(self) -> np.ndarray:
        """Binary H x W sensor-location mask."""
        out = np.zeros((self.height, self.width), dtype=np.float64)
        out[self.rows, self.cols] = 1.0
        return out

    def check_off_buildings(self, layout: BuildingLayout) -> None:
        check_same_shape(self, layout)
        if len(self.rows) and layout.occupancy[self.rows, self.cols].any():
            raise ParameterError("sample placed on an occupied cell")


def check_same_shape(*objs) -> tuple[int, int]:
    shapes = {tuple(o.shape) for o in objs}
    if len(shapes) != 1:
        raise ShapeError(f"grid shape mismatch: {sorted(shapes)}")
    return shapes.pop()


def normalize_rss(raw: np.ndarray, lo: float, hi: float) -> RadioMap:
    """Min-max normalise a dBm grid into a unit-interval RadioMap.

    ``value = clip((raw - lo) / (hi - lo), 0, 1)``. The inverse transform is
    :func:`denormalize_rss`.
    """
    if not hi > lo:
        raise ParameterError(f"normalisation range requires hi > lo, got lo={lo}, hi={hi}")
    raw = np.asarray(raw, dtype=np.float64)
    return RadioMap(np.clip((raw - lo) / (hi - lo), 0.0, 1.0))


def denormalize_rss(rmap: RadioMap, lo: float, hi: float) -> np.ndarray:
    """Map a unit-interval RadioMap back to the dBm grid it came from."""
    if not hi > lo:
        raise ParameterError(f"normalisation range requires hi > lo, got lo={lo}, hi={hi}")
    return rmap.values * (hi - lo) + lo


def masked_overwrite(base: RadioMap, samples: SampleSet) -> RadioMap:
    """Overwrite the base map with sample values at the sample cells.

    Idempotent, and commutes with itself on disjoint sample sets.
    """
    check_same_shape(base, samples)
    if len(samples.rows):
        if samples.rows.max() >= base.height or samples.cols.max() >= base.width:
            raise IndexError("sample location outside base map")
    out = base.values.copy()
    out[samples.rows, samples.cols] = samples.rss
    return RadioMap(out)


@dataclass
class EnrichedSampleSet:
    """Measured samples augmented with predicted RSS at critical/random cells.

    ``origin`` tags each entry as ``measured``, ``critical`` or ``random``;
    measured entries always take precedence at colliding cells.
    """

    height: int
    width: int
    rows: np.ndarray
    cols: np.ndarray
    rss: np.ndarray
    origin: np.ndarray = field(default=None)  # type: ignore[assignment]

    ORIGINS = ("measured", "critical", "random")

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).ravel()
        self.cols = np.asarray(self.cols, dtype=np.int64).ravel()
        self.rss = np.asarray(self.rss, dtype=np.float64).ravel()
        self.origin = np.asarray(self.origin, dtype=object).ravel()
        if not (len(self.rows) == len(self.cols) == len(self.rss) == len(self.origin)):
            raise ShapeError("entry arrays must have equal length")
        if len(self.rows):
            flat = self.rows * self.width + self.cols
            if len(np.unique(flat)) != len(flat):
                raise ParameterError("duplicate enriched-sample locations")
            bad = set(self.origin) - set(self.ORIGINS)
            if bad:
                raise ParameterError(f"unknown entry origins: {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.height, self.width), dtype=np.float64)
        out[self.rows, self.cols] = self.rss
        return out

    def by_origin(self, origin: str) -> np.ndarray:
        """(N, 2) array of (row, col) for entries with the given origin."""
        sel = self.origin == origin
        return np.stack([self.rows[sel], self.cols[sel]], axis=1) if sel.any() \
            else np.empty((0, 2), dtype=np.int64)


@dataclass(frozen=True)
class Condition:
    """Conditioning pair for the generator: occupancy plus enriched samples."""

    layout: BuildingLayout
    enriched: EnrichedSampleSet

    def __post_init__(self):
        check_same_shape(self.layout, self.enriched)

    @property
    def shape(self) -> tuple[int, int]:
        return self.layout.shape

    def channels(self) -> np.ndarray:
        """(2, H, W) stack: occupancy then the dense enriched view."""
        return np.stack([self.layout.occupancy.astype(np.float64),
                         self.enriched.dense()])
