"""Noise schedule and the closed-form forward marginal."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

DEFAULT_T = 1000
DEFAULT_BETA_1 = 1e-4
DEFAULT_BETA_T = 0.02

__all__ = ["NoiseSchedule", "make_schedule", "q_sample"]


@dataclass(frozen=True)
class NoiseSchedule:
    """beta_t for t = 1..T with the derived alpha and alpha-bar sequences.

    Lookups take the 1-based step index; index 0 is the clean-data
    boundary, where alpha_bar is exactly 1.
    """

    beta: np.ndarray
    kind: str = "linear"
    alpha: np.ndarray = field(init=False, repr=False)
    alpha_cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64).ravel()
        if beta.size < 1:
            raise ParameterError("schedule needs at least one step")
        if not np.all((beta > 0.0) & (beta < 1.0)):
            raise ParameterError("every beta_t must lie in (0, 1)")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", 1.0 - beta)
        # Leading 1.0 gives alpha_bar(0) = 1 without special-casing.
        object.__setattr__(
            self, "alpha_cum", np.concatenate([[1.0], np.cumprod(1.0 - beta)])
        )

    @property
    def T(self):
        return len(self.beta)

    def _check_t(self, t, lo=1):
        t = int(t)
        if not lo <= t <= self.T:
            raise ParameterError(f"step {t} outside [{lo}, {self.T}]")
        return t

    def beta_t(self, t):
        return float(self.beta[self._check_t(t) - 1])

    def alpha_t(self, t):
        return float(self.alpha[self._check_t(t) - 1])

    def alpha_bar(self, t):
        return float(self.alpha_cum[self._check_t(t, lo=0)])

    def posterior_variance(self, t):
        """Variance of q(x_{t-1} | x_t, x0); zero at the final step t=1."""
        t = self._check_t(t)
        ab_t = self.alpha_cum[t]
        ab_prev = self.alpha_cum[t - 1]
        return float((1.0 - ab_prev) / (1.0 - ab_t) * self.beta[t - 1])

    def params(self):
        return {
            "T": self.T,
            "beta_1": float(self.beta[0]),
            "beta_T": float(self.beta[-1]),
            "kind": self.kind,
        }


def make_schedule(T=DEFAULT_T, beta_1=DEFAULT_BETA_1, beta_T=DEFAULT_BETA_T,
                  kind="linear"):
    if kind != "linear":
        raise ParameterError(f"unknown schedule kind {kind!r}")
    if not 0.0 < beta_1 <= beta_T < 1.0:
        raise ParameterError(
            f"need 0 < beta_1 <= beta_T < 1, got ({beta_1}, {beta_T})"
        )
    if T < 1:
        raise ParameterError(f"step count must be positive, got {T}")
    if T == 1:
        beta = np.array([beta_1])
    else:
        steps = np.arange(T, dtype=np.float64)
        beta = beta_1 + steps * (beta_T - beta_1) / (T - 1)
    return NoiseSchedule(beta, kind=kind)


def q_sample(x0, t, eps, sched):
    """Forward marginal: sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    ab = sched.alpha_bar(sched._check_t(t))
    if np.shape(x0) != np.shape(eps):
        raise ParameterError("x0 and eps must share a shape")
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
