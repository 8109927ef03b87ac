"""Exponential weighting with uniform mixing and with box truncation."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ..simplex import as_losses, truncate_project, uniform
from ..errors import InfeasibleBoxError
from .rates import MIN_BIASED, VARIANCE, RateStats, check_rate_mode, learning_rate


class StepTrace(NamedTuple):
    """What one update did; consumed by the per-step inequality checkers."""

    round: int
    prev: np.ndarray
    losses: np.ndarray
    eta: float | None
    gamma: float
    mu: float
    z: float
    pre_projection: np.ndarray
    result: np.ndarray


def _exp_reweight(p: np.ndarray, l: np.ndarray, z: float, eta: float | None) -> np.ndarray:
    if eta is None:
        return p.copy()
    w = p * np.exp(-eta * (l - z))
    return w / w.sum()


@dataclass
class _ExponentialWeights:
    n_experts: int
    path_budget: float = 0.0
    rate_mode: str = MIN_BIASED
    weights: np.ndarray = None
    stats: RateStats = field(default_factory=RateStats)
    eta: float | None = None
    eta_floor_applied: bool = False
    last_step: StepTrace | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n_experts < 2:
            raise ValueError("need at least two experts")
        if self.path_budget < 0:
            raise ValueError("path budget must be nonnegative")
        check_rate_mode(self.rate_mode)
        if self.weights is None:
            self.weights = uniform(self.n_experts)
        else:
            self.weights = np.array(self.weights, dtype=np.float64)

    @property
    def decision(self) -> np.ndarray:
        return self.weights

    @property
    def round(self) -> int:
        return self.stats.round

    def rate_numerator(self) -> float:
        raise NotImplementedError

    def _finish(self, q: np.ndarray, t: int) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def step(self, losses) -> np.ndarray:
        """Consume round-``t`` losses and return the next decision."""
        l = as_losses(losses, self.n_experts)
        p = self.weights
        mu, z = self.stats.accumulate(p, l)
        eta, capped = learning_rate(self.rate_numerator(), self.stats, self.rate_mode)
        if eta is not None and self.eta is not None and self.eta < eta:
            eta, capped = self.eta, self.eta_floor_applied
        if eta is not None:
            self.eta = eta
            self.eta_floor_applied = capped
        q = _exp_reweight(p, l, z, eta)
        nxt, gamma = self._finish(q, self.stats.round)
        self.last_step = StepTrace(self.stats.round, p, l, eta, gamma, mu, z, q, nxt)
        self.weights = nxt
        return nxt

    def reset_rate(self) -> None:
        """Forget the rate statistics (weights are kept)."""
        self.stats.reset()
        self.eta = None
        self.eta_floor_applied = False

    def copy(self):
        # shallow copy plus the two mutable members; traces are immutable
        new = copy.copy(self)
        new.weights = self.weights.copy()
        new.stats = replace(self.stats)
        return new


@dataclass
class UniformMixLearner(_ExponentialWeights):
    """Exponential weights blended with the uniform distribution.

    After the round-``t`` update the weights are
    ``(1 - gamma_t) * softmax + gamma_t / M`` with ``gamma_t = 1/(t+1)``, so
    every weight stays at least ``1/((t+1) M)``.
    """

    horizon: int = 1

    def __post_init__(self):
        super().__post_init__()
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def rate_numerator(self) -> float:
        return math.log(self.n_experts * (self.horizon + 1)) * (2.0 + self.path_budget)

    def _finish(self, q, t):
        gamma = 1.0 / (t + 1)
        return (1.0 - gamma) * q + gamma / self.n_experts, gamma

    def bound(self, path: float | None = None) -> float:
        from .bounds import bound_value

        P = self.path_budget if path is None else max(path, self.path_budget)
        kind = "uniform_mix_variance" if self.rate_mode == VARIANCE else "uniform_mix_min"
        return bound_value(kind, {"M": self.n_experts, "T": self.horizon}, self.stats, P)


@dataclass
class TruncatedLearner(_ExponentialWeights):
    """Exponential weights followed by the scale-and-clip projection into ``[a, b]``."""

    box_low: float = 0.0
    box_high: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        M = self.n_experts
        a, b = self.box_low, self.box_high
        if not (0.0 <= a <= 1.0 / M + 1e-15 and 1.0 / M - 1e-15 <= b <= 1.0):
            raise InfeasibleBoxError(f"need 0 <= a <= 1/M <= b <= 1, got ({a}, {b}) for M={M}")
        self.weights = truncate_project(self.weights, a, b).projected

    def rate_numerator(self) -> float:
        a = self.box_low
        if a <= 0.0:
            return math.inf
        return math.log(self.n_experts / a) + math.log(1.0 / a) * self.path_budget

    def _finish(self, q, t):
        return truncate_project(q, self.box_low, self.box_high).projected, 0.0

    def bound(self, path: float | None = None) -> float:
        from .bounds import bound_value

        P = self.path_budget if path is None else max(path, self.path_budget)
        kind = "truncated_variance" if self.rate_mode == VARIANCE else "truncated_min"
        return bound_value(kind, {"M": self.n_experts, "a": self.box_low}, self.stats, P)
