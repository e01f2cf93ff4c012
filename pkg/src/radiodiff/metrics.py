"""Map-quality metrics: MSE, RMSE, NMSE and PSNR.

All four follow the usual image-restoration definitions over the full
H x W grid. PSNR uses ``max_value`` as the peak signal (default 1.0 for
unit-normalised maps) and returns ``+inf`` for identical maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grids import RadioMap, check_same_shape


@dataclass
class MetricReport:
    mse: float
    rmse: float
    nmse: float
    psnr: float

    def as_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "nmse": self.nmse, "psnr": self.psnr}


def mse(truth: RadioMap, estimate: RadioMap) -> float:
    """Mean over all cells of the squared difference between the two maps."""
    check_same_shape(truth, estimate)
    diff = truth.values - estimate.values
    return float(np.mean(diff * diff))


def metric_report(truth: RadioMap, estimate: RadioMap, max_value: float = 1.0) -> MetricReport:
    """Compute MSE, RMSE, NMSE and PSNR for an estimate against ground truth.

    Raises ZeroDivisionError for an all-zero truth map (NMSE undefined).
    PSNR is ``20*log10(max_value) - 10*log10(mse)``; identical maps yield
    ``psnr = +inf``.
    """
    if not max_value > 0:
        raise ParameterError(f"max_value must be positive, got {max_value}")
    check_same_shape(truth, estimate)
    diff = truth.values - estimate.values
    sq = float(np.sum(diff * diff))
    denom = float(np.sum(truth.values * truth.values))
    if denom == 0.0:
        raise ZeroDivisionError("NMSE undefined: truth map is identically zero")
    n = truth.values.size
    m = sq / n
    rmse = math.sqrt(m)
    nmse = sq / denom
    psnr = math.inf if m == 0.0 else 20.0 * math.log10(max_value) - 10.0 * math.log10(m)
    return MetricReport(mse=m, rmse=rmse, nmse=nmse, psnr=psnr)
