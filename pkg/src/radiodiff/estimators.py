"""Common estimator interface and registry.

An estimator is a callable (samples, layout, seed) -> (RadioMap, info).
The info dict carries per-call diagnostics: stage timings, election
breakdowns, fallback flags.  Learned estimators resolve their
checkpoints at construction so missing artifacts fail before any work.
"""

from __future__ import annotations

import os
import time

from .baselines import kriging_interpolate, rbf_interpolate, spline_interpolate
from .election import ElectionParams, elect
from .errors import ConfigurationError
from .escache import enrich_samples
from .grids import Condition
from .sampler import generate_candidates

ESTIMATOR_NAMES = ("wifidiffusion", "rbf", "spline", "kriging")

__all__ = ["ESTIMATOR_NAMES", "make_estimator", "WifiDiffusionEstimator"]


class _BaselineEstimator:
    def __init__(self, name, fn, **params):
        self.name = name
        self._fn = fn
        self._params = params

    def __call__(self, samples, layout, seed=0):
        t0 = time.perf_counter()
        estimate, info = self._fn(samples, layout, **self._params)
        info = dict(info)
        info["timings"] = {"estimate": time.perf_counter() - t0}
        return estimate, info


class WifiDiffusionEstimator:
    """Full three-block pipeline behind the estimator interface."""

    name = "wifidiffusion"

    def __init__(self, boost=None, denoiser=None, corrector=None, m=64, u=10,
                 eta=0.0, election=None, boost_on=True, election_on=True):
        if denoiser is None:
            raise ConfigurationError("pipeline estimator requires a denoiser model")
        self.boost = boost if boost_on else None
        self.denoiser = denoiser
        self.corrector = corrector
        self.m = int(m)
        self.u = int(u)
        self.eta = float(eta)
        self.election = election or ElectionParams()
        self.boost_on = boost_on
        self.election_on = election_on
        if boost_on and boost is None:
            raise ConfigurationError("boost stage enabled but no boost model given")

    def __call__(self, samples, layout, seed=0):
        timings = {}
        t0 = time.perf_counter()
        x_a, es = enrich_samples(self.boost, samples, layout, seed)
        timings["boost"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        cond = Condition(layout, es)
        candidates = generate_candidates(self.denoiser, cond, self.m, self.u,
                                         eta=self.eta, seed=seed)
        timings["generation"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        if self.election_on:
            best, breakdown = elect(candidates, samples, x_a, self.corrector,
                                    layout, self.election)
        else:
            best = candidates[0]
            breakdown = {"branch": "disabled", "k": samples.k,
                         "selected_index": 0, "candidates": []}
        timings["election"] = time.perf_counter() - t0
        info = {"breakdown": breakdown, "timings": timings,
                "m": self.m, "u": self.u, "eta": self.eta,
                "boost_on": self.boost_on, "election_on": self.election_on}
        return best, info


def _require(path, what):
    if not path or not os.path.exists(path):
        raise ConfigurationError(f"missing {what} checkpoint: {path}")
    return path


def make_estimator(name, run_dir=None, election=None, boost_on=True,
                   election_on=True, corrector_on=True, m=64, u=10, eta=0.0,
                   **baseline_params):
    """Build an estimator by registry name.

    Learned pipelines load boost.ckpt / denoiser.ckpt / corrector.ckpt
    from run_dir; the corrector is optional, the others are not.
    election may be an ElectionParams or a plain mapping of its field
    names, so configs stay JSON-serializable.
    """
    if isinstance(election, dict):
        from .config import election_params
        election = election_params({f"election.{k}": v for k, v in election.items()})
    if name == "rbf":
        return _BaselineEstimator(name, rbf_interpolate, **baseline_params)
    if name == "spline":
        return _BaselineEstimator(name, spline_interpolate, **baseline_params)
    if name == "kriging":
        return _BaselineEstimator(name, kriging_interpolate, **baseline_params)
    if name == "wifidiffusion":
        from .boost import BoostModel
        from .corrector import CorrectorModel
        from .denoiser import DenoiserModel
        if run_dir is None:
            raise ConfigurationError("wifidiffusion needs a run directory")
        denoiser = DenoiserModel.load(
            _require(os.path.join(run_dir, "denoiser.ckpt"), "denoiser"))
        boost = None
        if boost_on:
            boost = BoostModel.load(
                _require(os.path.join(run_dir, "boost.ckpt"), "boost"))
        corrector = None
        corrector_path = os.path.join(run_dir, "corrector.ckpt")
        if corrector_on and os.path.exists(corrector_path):
            corrector = CorrectorModel.load(corrector_path)
        return WifiDiffusionEstimator(boost, denoiser, corrector, m=m, u=u,
                                      eta=eta, election=election,
                                      boost_on=boost_on, election_on=election_on)
    raise ConfigurationError(
        f"unknown estimator {name!r} (choose from {', '.join(ESTIMATOR_NAMES)})"
    )
