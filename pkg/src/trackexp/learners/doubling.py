"""Doubling-rate resets for the mapped learner."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..simplex import as_losses
from .mapped import MappedLearner
from .rates import MIN_BIASED


def _is_power_of_two(t: int) -> bool:
    return t > 0 and (t & (t - 1)) == 0


def cap_for_path(path: float) -> int:
    """Segment count ``K`` with ``2^(K-1) <= 1 + P < 2^K``."""
    if path < 0:
        raise ValueError("path must be nonnegative")
    K = 1
    while 2 ** K <= 1.0 + path:
        K += 1
    return K


def reset_schedule(horizon: int, terminal_cap: int | None = None) -> list[tuple[int, int]]:
    """``(round, path budget)`` pairs at which rates reset, up to ``horizon``."""
    out = []
    k = 1
    while True:
        t = 2 ** (k - 1)
        if t > horizon or (terminal_cap is not None and k > terminal_cap + 1):
            return out
        out.append((t, t - 1))
        k += 1


@dataclass
class DoublingLearner:
    """Mapped learner whose rate restarts right before rounds ``1, 2, 4, ...``.

    Segment ``k`` starts at ``t = 2^(k-1)`` with path budget ``2^(k-1) - 1``.
    With ``terminal_cap = K`` the last reset happens at ``t = 2^K`` and the
    budget ``2^K - 1`` is kept from then on. Weights survive resets unless
    ``reset_weights`` is set.
    """

    n_experts: int
    terminal_cap: int | None = None
    alpha_mode: object = "star"
    rate_mode: str = MIN_BIASED
    reset_weights: bool = False
    inner: MappedLearner = field(init=False)
    segment_index: int = field(init=False, default=0)
    segment_start: int = field(init=False, default=0)
    path_cap: float = field(init=False, default=0.0)
    q_total: float = field(init=False, default=0.0)
    t: int = field(init=False, default=0)

    def __post_init__(self):
        if self.terminal_cap is not None and self.terminal_cap < 0:
            raise ValueError("terminal_cap must be >= 0")
        self.inner = MappedLearner(self.n_experts, 0.0, self.alpha_mode, self.rate_mode)

    @classmethod
    def for_path(cls, n_experts: int, path: float, **kw) -> "DoublingLearner":
        """Learner tuned for a known total path ``P`` (``K`` from :func:`cap_for_path`)."""
        return cls(n_experts, terminal_cap=cap_for_path(path), **kw)

    @property
    def decision(self) -> np.ndarray:
        return self.inner.decision

    @property
    def round(self) -> int:
        return self.t

    @property
    def eta(self):
        return self.inner.eta

    @property
    def target_path(self) -> float | None:
        if self.terminal_cap is None:
            return None
        return 2.0 ** self.terminal_cap - 1.0

    def _resets_at(self, t: int) -> bool:
        if not _is_power_of_two(t):
            return False
        return self.terminal_cap is None or t <= 2 ** self.terminal_cap

    def step(self, losses) -> np.ndarray:
        l = as_losses(losses, self.n_experts)
        t = self.t + 1
        if self._resets_at(t):
            self.segment_index += 1
            self.segment_start = t
            self.path_cap = float(t - 1)
            self.inner.retarget(self.path_cap, reset_weights=self.reset_weights and t > 1)
        d = self.inner.inner.weights
        low = l - l.min()
        self.q_total += float(d @ (low * low))
        self.t = t
        return self.inner.step(l)

    def bound(self, path: float | None = None) -> float:
        """Doubling-rate guarantee at path ``max(path, 2^(K-1) - 1)``.

        The floor is the smallest total path consistent with the cap ``K``;
        without a cap the value is reported but not guaranteed.
        """
        from .bounds import bound_value

        P = 0.0 if path is None else float(path)
        if self.terminal_cap:
            P = max(P, 2.0 ** (self.terminal_cap - 1) - 1.0)
        return bound_value("doubling", {"M": self.n_experts}, self.q_total, P)

    def copy(self):
        return copy.deepcopy(self)
