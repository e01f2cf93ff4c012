"""Block 3: candidate scoring and selection.

Three signals rank the candidate set: the masked sample error spMSE, a
learned correction of the rough-map error, and a physics guide built
from per-candidate transmitter estimates (ring consistency with the
far-field pathloss fit plus a ray-smoothness count).  Terms are z-scored
across the candidate set before the lambda-weighted sum; z-scoring is
monotone per term, so single-term reductions keep their exact argmin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve, gaussian_filter

from . import geokern
from .errors import GeometryError, ParameterError
from .grids import BuildingLayout, RadioMap, SampleSet, check_same_shape
from .metrics import mse

_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
# Regressor for the far-field fit: value ~ A + B * (-20 n log10 d), n = 2.
_PATHLOSS_N = 2.0

__all__ = [
    "TxEstimate",
    "ElectionParams",
    "RatePhyScore",
    "sp_mse",
    "locate_transmitters",
    "ring_profile",
    "rate_phy",
    "log_filter",
    "elect",
]


@dataclass(frozen=True)
class TxEstimate:
    """Candidate transmitter: peak cell plus its pathloss fit."""

    row: int
    col: int
    fitted_power: float   # intercept A of the normalized-log-domain fit
    slope: float          # coefficient B on -20 n log10(d)
    fit_residual: float

    def __post_init__(self):
        if self.fit_residual < 0:
            raise ParameterError("fit residual cannot be negative")

    def predict(self, d):
        """Fitted RSS at distance d (cells), with the d_min clamp."""
        d = np.maximum(np.asarray(d, dtype=np.float64), 0.5)
        return self.fitted_power - self.slope * 20.0 * _PATHLOSS_N * np.log10(d)


@dataclass(frozen=True)
class ElectionParams:
    lam: float = 0.7
    alpha: float = 0.5
    sigma: float = 0.05
    ring_radii: tuple = (3.0, 5.0, 7.0)
    angular_samples: int = 64
    ray_count: int = 16
    ray_start: float = 3.0
    nms_radius: float = 5.0
    min_peak: float = 0.5
    max_peaks: int = 5
    fit_annulus: tuple = (1.5, 9.0)
    k_branch: int = 100
    log_sigma: float = 1.0
    high_power_quantile: float = 0.9
    res_inside_lambda: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ParameterError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.ring_radii or any(r <= 0 for r in self.ring_radii):
            raise ParameterError("ring radii must be positive")
        if self.angular_samples < 1 or self.ray_count < 1:
            raise ParameterError("angular and ray counts must be positive")
        lo, hi = self.fit_annulus
        if not 0 < lo < hi:
            raise ParameterError(f"bad fit annulus {self.fit_annulus}")


@dataclass(frozen=True)
class RatePhyScore:
    total: float
    ring: float
    ray: float
    fallback: bool = False

    def __float__(self):
        return self.total


def sp_mse(candidate, samples):
    """Mean squared error over the k sensor cells only."""
    if samples.k < 1:
        raise ParameterError("sp_mse needs at least one sample")
    check_same_shape(candidate, samples)
    diff = candidate.values[samples.rows, samples.cols] - samples.rss
    return float(np.mean(diff * diff))


def log_filter(rmap, sigma=1.0):
    """Gaussian smoothing followed by the 5-point discrete Laplacian."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    values = rmap.values if isinstance(rmap, RadioMap) else np.asarray(rmap, float)
    return convolve(gaussian_filter(values, sigma, truncate=4.0), _LAPLACIAN,
                    mode="nearest")


def ring_profile(rmap, center, radius, n_theta):
    """Bilinear samples on a circle at n_theta equally spaced angles."""
    if n_theta < 1:
        raise ParameterError("need at least one angular sample")
    values = rmap.values if isinstance(rmap, RadioMap) else np.asarray(rmap, float)
    try:
        return geokern.ring_bilinear(np.ascontiguousarray(values, np.float64),
                                     float(center[0]), float(center[1]),
                                     float(radius), int(n_theta))
    except ValueError as exc:
        raise GeometryError(str(exc)) from None


def _masked_ring(values, center, radius, n_theta):
    """In-grid ring samples near map borders; (samples, valid count)."""
    h, w = values.shape
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    rr = center[0] + radius * np.sin(theta)
    cc = center[1] + radius * np.cos(theta)
    valid = (rr >= 0) & (rr <= h - 1) & (cc >= 0) & (cc <= w - 1)
    if not valid.any():
        return np.empty(0), 0
    rr, cc = rr[valid], cc[valid]
    i0 = np.minimum(rr.astype(np.int64), h - 2)
    j0 = np.minimum(cc.astype(np.int64), w - 2)
    fr, fc = rr - i0, cc - j0
    out = (values[i0, j0] * (1 - fr) * (1 - fc)
           + values[i0 + 1, j0] * fr * (1 - fc)
           + values[i0, j0 + 1] * (1 - fr) * fc
           + values[i0 + 1, j0 + 1] * fr * fc)
    return out, int(valid.sum())


def locate_transmitters(rmap, layout, nms_radius=5.0, min_peak=0.5, max_peaks=5,
                        fit_annulus=(1.5, 9.0)):
    """Peak detection plus a far-field pathloss fit per peak.

    Peaks are free-cell local maxima above min_peak, greedily suppressed
    within nms_radius.  Each peak gets a least-squares (A, B) fit of
    value against -20 n log10(d) over the unobstructed annulus around it.
    """
    values = rmap.values
    check_same_shape(rmap, layout)
    occ = layout.occupancy
    h, w = values.shape
    score = values.copy()
    score[occ == 1] = -np.inf
    order = np.argsort(score, axis=None)[::-1]
    suppressed = np.zeros((h, w), dtype=bool)
    rad_i = int(np.floor(nms_radius))
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    estimates = []
    for flat in order:
        r, c = divmod(int(flat), w)
        if score[r, c] < min_peak or len(estimates) >= max_peaks:
            break
        if suppressed[r, c]:
            continue
        # Require a genuine local maximum in the 8-neighborhood.
        r0, r1 = max(0, r - 1), min(h, r + 2)
        c0, c1 = max(0, c - 1), min(w, c + 2)
        if values[r, c] < values[r0:r1, c0:c1].max():
            continue
        estimates.append(_fit_peak(values, occ, r, c, rows, cols, fit_annulus))
        rr0, rr1 = max(0, r - rad_i), min(h, r + rad_i + 1)
        cc0, cc1 = max(0, c - rad_i), min(w, c + rad_i + 1)
        for rr in range(rr0, rr1):
            for cc in range(cc0, cc1):
                if (rr - r) ** 2 + (cc - c) ** 2 <= nms_radius ** 2:
                    suppressed[rr, cc] = True
    return estimates


def _fit_peak(values, occ, r, c, rows, cols, fit_annulus):
    d = np.hypot(rows - r, cols - c)
    crossings = geokern.wall_crossings(occ, float(r), float(c))
    lo, hi = fit_annulus
    sel = (d >= lo) & (d <= hi) & (occ == 0) & (crossings == 0)
    if sel.sum() < 4:
        return TxEstimate(r, c, float(values[r, c]), 0.0, 0.0)
    y = values[sel]
    g = -20.0 * _PATHLOSS_N * np.log10(d[sel])
    design = np.stack([np.ones_like(g), g], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return TxEstimate(r, c, float(coef[0]), float(coef[1]),
                      float(np.sqrt(np.mean(resid * resid))))


def rate_phy(candidate, layout, txs, params):
    """Physics inconsistency score; lower is more plausible.

    Per transmitter: alpha-weighted ring MSE against the fitted far-field
    law plus (1 - alpha)-weighted ray-volatility count.  With no
    transmitter estimate the ray term is evaluated from the global
    maximum cell and the result is flagged as a fallback.
    """
    check_same_shape(candidate, layout)
    values = np.ascontiguousarray(candidate.values, np.float64)
    occ = layout.occupancy
    if not txs:
        r, c = np.unravel_index(np.argmax(values), values.shape)
        ray = geokern.ray_volatility(values, occ, float(r), float(c),
                                     params.ray_count, params.sigma,
                                     params.ray_start)
        return RatePhyScore(float(ray), 0.0, float(ray), fallback=True)
    ring_total = 0.0
    ray_total = 0.0
    for tx in txs:
        ring_terms = []
        for radius in params.ring_radii:
            samples, n_valid = _masked_ring(values, (tx.row, tx.col), radius,
                                            params.angular_samples)
            if n_valid == 0:
                continue
            pred = tx.predict(radius)
            ring_terms.append(np.mean((samples - pred) ** 2))
        ring = float(np.mean(ring_terms)) if ring_terms else 0.0
        ray = float(geokern.ray_volatility(values, occ, float(tx.row),
                                           float(tx.col), params.ray_count,
                                           params.sigma, params.ray_start))
        ring_total += ring
        ray_total += ray
    n = len(txs)
    ring_total /= n
    ray_total /= n
    total = params.alpha * ring_total + (1.0 - params.alpha) * ray_total
    return RatePhyScore(float(total), ring_total, ray_total)


def _zscore(arr):
    arr = np.asarray(arr, dtype=np.float64)
    std = arr.std()
    if std == 0.0 or not np.isfinite(std):
        return np.zeros_like(arr)
    return (arr - arr.mean()) / std


def elect(candidates, samples, x_a, corrector, layout, params=None):
    """Pick the best candidate under the k-branched scoring rule.

    k > k_branch: argmin of lam * z(spMSE) + (1 - lam) * z(rate_phy).
    k <= k_branch: the correction branch, argmin of
    lam * z(mse(x_a, x_zi)) + z(res) + (1 - lam) * z(rate_phy), with res
    optionally pulled inside the lam weighting via params.  Without a
    rough map (ablation arm) the spMSE branch is forced.  Ties resolve
    to the lowest candidate index.
    """
    params = params or ElectionParams()
    n = candidates.m
    k = samples.k
    use_sp_branch = (k > params.k_branch) or x_a is None
    sp = np.full(n, np.nan)
    if k >= 1:
        sp = np.array([sp_mse(cand, samples) for cand in candidates])
    elif use_sp_branch:
        raise ParameterError("spMSE branch requires at least one sample")
    phy_scores = []
    for cand in candidates:
        txs = locate_transmitters(cand, layout, params.nms_radius,
                                  params.min_peak, params.max_peaks,
                                  params.fit_annulus)
        phy_scores.append(rate_phy(cand, layout, txs, params))
    phy = np.array([s.total for s in phy_scores])
    mse_xa = np.full(n, np.nan)
    res = np.zeros(n)
    if x_a is not None:
        mse_xa = np.array([mse(x_a, cand) for cand in candidates])
        if corrector is not None:
            res = np.array([corrector.predict(x_a, cand) for cand in candidates])
    if use_sp_branch:
        combined = params.lam * _zscore(sp) + (1.0 - params.lam) * _zscore(phy)
        branch = "sp"
    else:
        combined = params.lam * _zscore(mse_xa) + (1.0 - params.lam) * _zscore(phy)
        if corrector is not None:
            weight = params.lam if params.res_inside_lambda else 1.0
            combined = combined + weight * _zscore(res)
        branch = "corrected"
    best = int(np.argmin(combined))
    breakdown = {
        "branch": branch,
        "k": k,
        "selected_index": best,
        "candidates": [
            {
                "index": i,
                "sp_mse": None if np.isnan(sp[i]) else float(sp[i]),
                "corrected_mse": None if np.isnan(mse_xa[i])
                else float(mse_xa[i] + res[i]),
                "res": float(res[i]),
                "rate_phy_ring": float(phy_scores[i].ring),
                "rate_phy_ray": float(phy_scores[i].ray),
                "rate_phy_fallback": bool(phy_scores[i].fallback),
                "combined": float(combined[i]),
                "selected": i == best,
            }
            for i in range(n)
        ],
    }
    return candidates[best], breakdown
