"""Classical scattered-data interpolators behind the estimator contract.

All three share the post-processing contract: estimates clipped to
[0, 1] and building cells zeroed.  Each returns (RadioMap, info) where
info carries method-specific diagnostics (fallback flags, fitted
variogram).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import curve_fit

from .errors import NumericalError, ParameterError
from .grids import BuildingLayout, RadioMap, SampleSet, check_same_shape

VARIOGRAM_BINS = 15
_JITTER = 1e-10

__all__ = [
    "VariogramModel",
    "fit_variogram",
    "rbf_interpolate",
    "spline_interpolate",
    "kriging_interpolate",
]


def _cell_grid(h, w):
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    cols = np.tile(np.arange(w, dtype=np.float64), h)
    return np.stack([rows, cols], axis=1)


def _check_distinct(samples):
    pts = np.stack([samples.rows, samples.cols], axis=1).astype(np.float64)
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    np.fill_diagonal(d, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    if d[i, j] == 0.0:
        raise NumericalError(
            f"duplicate sample locations at ({samples.rows[i]}, {samples.cols[i]}) "
            f"and ({samples.rows[j]}, {samples.cols[j]})"
        )
    return pts, d


def _finalize(values, layout):
    out = np.clip(values, 0.0, 1.0)
    out[layout.occupancy == 1] = 0.0
    return RadioMap(out)


def _thin_plate(r):
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = r[pos] ** 2 * np.log(r[pos])
    return out


def _biharmonic(r):
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = r[pos] ** 2 * (np.log(r[pos]) - 1.0)
    return out


def _multiquadric(r, shape):
    return np.sqrt(r * r + shape * shape)


def rbf_interpolate(samples, layout, kernel="thin_plate", shape=1.0):
    """Radial basis interpolation; thin-plate carries an affine tail."""
    if samples.k < 1:
        raise ParameterError("radial basis interpolation needs at least one sample")
    check_same_shape(samples, layout)
    pts, dists = _check_distinct(samples) if samples.k > 1 \
        else (np.stack([samples.rows, samples.cols], axis=1).astype(np.float64), None)
    y = samples.rss
    k = samples.k
    if kernel == "thin_plate":
        phi = _thin_plate
    elif kernel == "multiquadric":
        phi = lambda r: _multiquadric(r, shape)
    else:
        raise ParameterError(f"unknown kernel {kernel!r}")
    pair_r = np.hypot(pts[:, None, 0] - pts[None, :, 0],
                      pts[:, None, 1] - pts[None, :, 1])
    grid = _cell_grid(*layout.shape)
    eval_r = np.hypot(grid[:, None, 0] - pts[None, :, 0],
                      grid[:, None, 1] - pts[None, :, 1])
    if kernel == "thin_plate":
        # Affine tail needs 3 unisolvent points; degrade gracefully below.
        n_tail = 3 if k >= 3 else 1
        tail = np.concatenate([np.ones((k, 1)), pts], axis=1)[:, :n_tail]
        a = np.zeros((k + n_tail, k + n_tail))
        a[:k, :k] = phi(pair_r)
        a[:k, k:] = tail
        a[k:, :k] = tail.T
        rhs = np.concatenate([y, np.zeros(n_tail)])
        try:
            coef = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular radial basis system: {exc}") from None
        tail_eval = np.concatenate([np.ones((len(grid), 1)), grid], axis=1)[:, :n_tail]
        values = phi(eval_r) @ coef[:k] + tail_eval @ coef[k:]
    else:
        try:
            coef = np.linalg.solve(phi(pair_r), y)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular radial basis system: {exc}") from None
        values = phi(eval_r) @ coef
    return _finalize(values.reshape(layout.shape), layout), {"kernel": kernel}


def _nearest_fill(samples, layout):
    grid = _cell_grid(*layout.shape)
    pts = np.stack([samples.rows, samples.cols], axis=1).astype(np.float64)
    d = np.hypot(grid[:, None, 0] - pts[None, :, 0],
                 grid[:, None, 1] - pts[None, :, 1])
    values = samples.rss[np.argmin(d, axis=1)]
    return values.reshape(layout.shape)


def spline_interpolate(samples, layout):
    """Biharmonic scattered-data spline; nearest-fill fallback when the
    geometry cannot support a surface (fewer than 3 or collinear points)."""
    if samples.k < 1:
        raise ParameterError("spline interpolation needs at least one sample")
    check_same_shape(samples, layout)
    pts = np.stack([samples.rows, samples.cols], axis=1).astype(np.float64)
    degenerate = samples.k < 3
    if not degenerate:
        _check_distinct(samples)
        centered = pts - pts.mean(axis=0)
        degenerate = np.linalg.matrix_rank(centered, tol=1e-9) < 2
    if degenerate:
        return _finalize(_nearest_fill(samples, layout), layout), {"fallback": True}
    pair_r = np.hypot(pts[:, None, 0] - pts[None, :, 0],
                      pts[:, None, 1] - pts[None, :, 1])
    try:
        coef = np.linalg.solve(_biharmonic(pair_r), samples.rss)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular spline system: {exc}") from None
    grid = _cell_grid(*layout.shape)
    eval_r = np.hypot(grid[:, None, 0] - pts[None, :, 0],
                      grid[:, None, 1] - pts[None, :, 1])
    values = (_biharmonic(eval_r) @ coef).reshape(layout.shape)
    return _finalize(values, layout), {"fallback": False}


@dataclass(frozen=True)
class VariogramModel:
    kind: str = "exponential"
    nugget: float = 0.0
    sill: float = 1.0
    range_: float = 10.0

    def __post_init__(self):
        if self.kind not in ("exponential", "spherical", "gaussian"):
            raise ParameterError(f"unknown variogram kind {self.kind!r}")
        if self.nugget < 0 or self.sill <= 0 or self.range_ <= 0:
            raise ParameterError("need nugget >= 0, sill > 0, range > 0")
        if self.sill < self.nugget:
            raise ParameterError("sill must not fall below the nugget")

    def gamma(self, h):
        h = np.asarray(h, dtype=np.float64)
        partial = self.sill - self.nugget
        if self.kind == "exponential":
            # Practical-range convention: gamma reaches ~95% of the sill
            # at h = range.
            structure = 1.0 - np.exp(-3.0 * h / self.range_)
        elif self.kind == "gaussian":
            structure = 1.0 - np.exp(-3.0 * (h / self.range_) ** 2)
        else:
            ratio = np.minimum(h / self.range_, 1.0)
            structure = 1.5 * ratio - 0.5 * ratio ** 3
        out = self.nugget + partial * structure
        return np.where(h > 0, out, 0.0)


def empirical_variogram(samples, n_bins=VARIOGRAM_BINS):
    """(lag centers, semivariances, pair counts) over distance bins."""
    pts = np.stack([samples.rows, samples.cols], axis=1).astype(np.float64)
    iu = np.triu_indices(samples.k, 1)
    d = np.hypot(pts[iu[0], 0] - pts[iu[1], 0], pts[iu[0], 1] - pts[iu[1], 1])
    sv = 0.5 * (samples.rss[iu[0]] - samples.rss[iu[1]]) ** 2
    edges = np.linspace(0.0, d.max(), n_bins + 1)
    centers, gammas, counts = [], [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (d > lo) & (d <= hi)
        if sel.any():
            centers.append(d[sel].mean())
            gammas.append(sv[sel].mean())
            counts.append(int(sel.sum()))
    return np.array(centers), np.array(gammas), np.array(counts)


def fit_variogram(samples, kind="exponential", n_bins=VARIOGRAM_BINS):
    """Least-squares fit of the chosen model to the binned semivariogram."""
    centers, gammas, counts = empirical_variogram(samples, n_bins)
    var = float(np.var(samples.rss))
    span = float(centers.max()) if len(centers) else 10.0
    fallback = VariogramModel(kind, 0.0, max(var, 1e-6), max(span / 2.0, 1.0))
    if len(centers) < 3:
        return fallback
    def gamma_of(h, sill, range_):
        return VariogramModel(kind, 0.0, sill, range_).gamma(h)
    try:
        popt, _ = curve_fit(
            gamma_of, centers, gammas,
            p0=[fallback.sill, fallback.range_],
            sigma=1.0 / np.sqrt(counts),
            bounds=([1e-9, 1e-3], [np.inf, np.inf]),
            maxfev=2000,
        )
        return VariogramModel(kind, 0.0, float(popt[0]), float(popt[1]))
    except (RuntimeError, ValueError):
        return fallback


def kriging_interpolate(samples, layout, model="auto", chunk=4096):
    """Ordinary kriging with a Lagrange multiplier enforcing unit weight sum."""
    if samples.k < 2:
        raise ParameterError("ordinary kriging needs at least two samples")
    check_same_shape(samples, layout)
    pts, _ = _check_distinct(samples)
    if model == "auto":
        model = fit_variogram(samples)
    elif not isinstance(model, VariogramModel):
        raise ParameterError("model must be 'auto' or a VariogramModel")
    k = samples.k
    pair_r = np.hypot(pts[:, None, 0] - pts[None, :, 0],
                      pts[:, None, 1] - pts[None, :, 1])
    a = np.zeros((k + 1, k + 1))
    a[:k, :k] = model.gamma(pair_r)
    a[:k, k] = 1.0
    a[k, :k] = 1.0
    factor = None
    for attempt in range(2):
        try:
            factor = lu_factor(a)
            probe = lu_solve(factor, np.ones(k + 1))
            if np.all(np.isfinite(probe)):
                break
            raise np.linalg.LinAlgError("non-finite solution")
        except (np.linalg.LinAlgError, ValueError) as exc:
            if attempt == 1:
                raise NumericalError(f"kriging system not solvable: {exc}") from None
            a[:k, :k] += _JITTER * np.eye(k)
    grid = _cell_grid(*layout.shape)
    values = np.empty(len(grid))
    weight_sums = np.empty(len(grid))
    for start in range(0, len(grid), chunk):
        block = grid[start:start + chunk]
        r = np.hypot(block[:, None, 0] - pts[None, :, 0],
                     block[:, None, 1] - pts[None, :, 1])
        rhs = np.concatenate([model.gamma(r), np.ones((len(block), 1))], axis=1)
        sol = lu_solve(factor, rhs.T)
        weights = sol[:k]
        values[start:start + chunk] = weights.T @ samples.rss
        weight_sums[start:start + chunk] = weights.sum(axis=0)
    if not np.all(np.isfinite(values)):
        raise NumericalError("kriging produced non-finite estimates")
    info = {"variogram": {"kind": model.kind, "nugget": model.nugget,
                          "sill": model.sill, "range": model.range_},
            "max_weight_sum_error": float(np.abs(weight_sums - 1.0).max())}
    return _finalize(values.reshape(layout.shape), layout), info
