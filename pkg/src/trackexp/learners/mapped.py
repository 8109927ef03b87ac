"""Truncated learning in the uniformly-mixed decision space.

Decisions ``p`` are mapped one-to-one to ``d = (1 - alpha) p + alpha u``,
which always lies in the box ``[alpha/M, (1 - alpha) + alpha/M]``. A
:class:`TruncatedLearner` runs on ``d`` with losses ``l / (1 - alpha)`` and
path budget ``(1 - alpha) P``; the reported decision is ``d`` unmixed.
Competitors are unrestricted, so the ``log T`` factor of plain mixing goes
away.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..mixer import alpha_hat, alpha_star
from ..simplex import as_losses, mix_uniform, unmix_uniform
from .exponential import TruncatedLearner
from .rates import MIN_BIASED, VARIANCE


def resolve_alpha(mode, n_experts: int, path: float) -> float:
    """``mode`` is ``"star"``, ``"hat"`` or a fixed float in ``[0, 1)``."""
    if mode == "star":
        return alpha_star(n_experts)
    if mode == "hat":
        return alpha_hat(n_experts, path)
    alpha = float(mode)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"fixed alpha must lie in [0, 1), got {alpha}")
    return alpha


def _inner_for(n_experts, alpha, path, rate_mode, weights=None) -> TruncatedLearner:
    return TruncatedLearner(
        n_experts,
        path_budget=(1.0 - alpha) * path,
        rate_mode=rate_mode,
        weights=weights,
        box_low=alpha / n_experts,
        box_high=(1.0 - alpha) + alpha / n_experts,
    )


@dataclass
class MappedLearner:
    n_experts: int
    path_budget: float = 0.0
    alpha_mode: object = "star"
    rate_mode: str = MIN_BIASED
    alpha: float = field(init=False)
    inner: TruncatedLearner = field(init=False)
    _decision: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.alpha = resolve_alpha(self.alpha_mode, self.n_experts, self.path_budget)
        self.inner = _inner_for(self.n_experts, self.alpha, self.path_budget, self.rate_mode)
        self._decision = unmix_uniform(self.inner.weights, self.alpha)

    @property
    def loss_scale(self) -> float:
        return 1.0 / (1.0 - self.alpha)

    @property
    def decision(self) -> np.ndarray:
        return self._decision

    @property
    def round(self) -> int:
        return self.inner.round

    @property
    def eta(self):
        return self.inner.eta

    def step(self, losses) -> np.ndarray:
        l = as_losses(losses, self.n_experts)
        d = self.inner.step(l / (1.0 - self.alpha))
        self._decision = unmix_uniform(d, self.alpha)
        return self._decision

    def retarget(self, path: float, *, reset_weights: bool = False) -> None:
        """Reset the rate statistics and switch to a new path budget.

        Used at doubling boundaries. The decision ``p`` is carried over
        unless ``reset_weights``; with ``alpha_mode="hat"`` the mixer (and so
        the box) may change, in which case ``p`` is re-embedded.
        """
        new_alpha = resolve_alpha(self.alpha_mode, self.n_experts, path)
        p = np.full(self.n_experts, 1.0 / self.n_experts) if reset_weights else self._decision
        if new_alpha != self.alpha or reset_weights:
            d = mix_uniform(p, new_alpha)
            self.inner = _inner_for(self.n_experts, new_alpha, path, self.rate_mode, weights=d)
            self.alpha = new_alpha
            self._decision = unmix_uniform(self.inner.weights, new_alpha)
        else:
            self.inner.reset_rate()
            self.inner.path_budget = (1.0 - self.alpha) * path
        self.path_budget = path

    def q_d(self) -> float:
        """``Q`` of the inner learner expressed in unscaled losses."""
        return self.inner.stats.Q * (1.0 - self.alpha) ** 2

    def bound(self, path: float | None = None) -> float:
        from .bounds import bound_value

        P = self.path_budget if path is None else max(path, self.path_budget)
        if self.rate_mode == MIN_BIASED and self.alpha_mode == "star":
            return bound_value("mapped", {"M": self.n_experts}, self.q_d(), P)
        # the inner game's regret equals the original one (scaled losses, shrunk gaps)
        kind = "truncated_variance" if self.rate_mode == VARIANCE else "truncated_min"
        params = {"M": self.n_experts, "a": self.inner.box_low}
        return bound_value(kind, params, self.inner.stats, (1.0 - self.alpha) * P)

    def copy(self):
        return copy.deepcopy(self)
