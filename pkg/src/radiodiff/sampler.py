"""Reverse-process sampling: ancestral (DDPM) and accelerated (DDIM).

Both steps take a plain callable eps_fn(x, t, cond) -> noise estimate on
numpy arrays, so closed-form oracle models drop in for the algebraic
checks.  The sampler works in the model domain [-1, 1]; candidate
generation rescales the final state back to the unit map range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grids import BuildingLayout, Condition, RadioMap

__all__ = [
    "Condition",
    "CandidateSet",
    "predict_x0",
    "ddim_sigma",
    "ddpm_step",
    "ddim_step",
    "ddim_times",
    "generate_candidates",
]


@dataclass(frozen=True)
class CandidateSet:
    """m generated maps with the per-chain seeds and sampling settings."""

    maps: tuple
    seeds: tuple
    u: int
    eta: float

    def __post_init__(self):
        if len(self.maps) != len(self.seeds):
            raise ParameterError("one seed per candidate map required")
        if not self.maps:
            raise ParameterError("candidate set cannot be empty")

    @property
    def m(self):
        return len(self.maps)

    def __iter__(self):
        return iter(self.maps)

    def __getitem__(self, i):
        return self.maps[i]


def predict_x0(x_t, t, eps_hat, sched):
    """Invert the forward marginal for the given noise estimate."""
    ab = sched.alpha_bar(t)
    return (x_t - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)


def ddim_sigma(sched, t, t_prev, eta):
    """sigma_t(eta); eta=1 reproduces the ancestral posterior sigma."""
    ab_t = sched.alpha_bar(t)
    ab_prev = sched.alpha_bar(t_prev)
    return eta * np.sqrt((1.0 - ab_prev) / (1.0 - ab_t)) \
        * np.sqrt(1.0 - ab_t / ab_prev)


def ddpm_step(x_t, t, eps_fn, cond, sched, rng):
    """One ancestral step; the variance convention makes t=1 deterministic."""
    t = int(t)
    if t < 1:
        raise ParameterError(f"ancestral step needs t >= 1, got {t}")
    eps_hat = eps_fn(x_t, t, cond)
    beta = sched.beta_t(t)
    alpha = sched.alpha_t(t)
    ab_t = sched.alpha_bar(t)
    mean = (x_t - beta / np.sqrt(1.0 - ab_t) * eps_hat) / np.sqrt(alpha)
    var = sched.posterior_variance(t)
    if var > 0.0:
        mean = mean + np.sqrt(var) * rng.standard_normal(np.shape(x_t))
    return mean


def ddim_step(x_t, t, t_prev, eps_fn, cond, sched, eta=0.0, rng=None):
    """Three-term update toward t_prev; eta=0 is fully deterministic."""
    t, t_prev = int(t), int(t_prev)
    if not t > t_prev >= 0:
        raise ParameterError(f"need t > t_prev >= 0, got ({t}, {t_prev})")
    eps_hat = eps_fn(x_t, t, cond)
    ab_prev = sched.alpha_bar(t_prev)
    x0_hat = predict_x0(x_t, t, eps_hat, sched)
    sigma = ddim_sigma(sched, t, t_prev, eta)
    resid_var = 1.0 - ab_prev - sigma ** 2
    if resid_var < -1e-12:
        raise ParameterError(
            f"sigma^2 = {sigma ** 2:.3e} exceeds 1 - alpha_bar = {1.0 - ab_prev:.3e}"
        )
    out = np.sqrt(ab_prev) * x0_hat + np.sqrt(max(resid_var, 0.0)) * eps_hat
    if sigma > 0.0:
        if rng is None:
            raise ParameterError("stochastic step (eta > 0) needs an rng")
        out = out + sigma * rng.standard_normal(np.shape(x_t))
    return out


def ddim_times(T, u):
    """Uniform-stride step boundaries T = t_0 > t_1 > ... > t_u = 0."""
    if not 1 <= u <= T:
        raise ParameterError(f"need 1 <= u <= T, got u={u}, T={T}")
    times = np.unique(np.round(np.linspace(T, 0, u + 1)).astype(int))[::-1]
    return [int(t) for t in times]


def generate_candidates(model, cond, m, u, eta=0.0, seed=0):
    """m independent DDIM chains from seeded initial noise."""
    if m < 1:
        raise ParameterError(f"candidate count must be positive, got {m}")
    sched = model.schedule()
    eps_fn = model.eps_fn()
    times = ddim_times(sched.T, u)
    occupied = cond.layout.occupancy == 1
    shape = cond.layout.shape
    chain_seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(m)]
    maps = []
    for chain_seed in chain_seeds:
        rng = np.random.default_rng(chain_seed)
        x = rng.standard_normal(shape)
        for t, t_prev in zip(times[:-1], times[1:]):
            x = ddim_step(x, t, t_prev, eps_fn, cond, sched, eta=eta, rng=rng)
        values = np.clip((x + 1.0) / 2.0, 0.0, 1.0)
        values[occupied] = 0.0
        maps.append(RadioMap(values))
    return CandidateSet(tuple(maps), tuple(chain_seeds), u=u, eta=float(eta))
