"""Universal truncated exponential weighting (UTEW).

A chain of doubling learners ``A_1, A_2, ...`` (``A_k`` tuned for path
``2^(k-1) - 1``) combined pairwise by two-expert mapped learners
``B_0, B_1, ...``: ``B_j`` mixes ``A_{j+1}`` with ``B_{j+1}``, and the last
``B_k`` simply forwards ``A_k``. A new run is branched off the deepest one
at every ``t = 2^k``, so memory and time per round grow like ``log t``.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from ..simplex import as_losses, uniform
from .doubling import DoublingLearner
from .mapped import MappedLearner
from .rates import MIN_BIASED


@dataclass
class UtewLearner:
    n_experts: int
    rate_mode: str = MIN_BIASED
    mixer_alpha: object = "star"
    runs: list = field(init=False)
    mixers: list = field(init=False)
    t: int = field(init=False, default=0)
    combined: np.ndarray = field(init=False)
    sq_range_sum: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.n_experts < 2:
            raise ValueError("need at least two experts")
        self.runs = [DoublingLearner(self.n_experts, terminal_cap=0, rate_mode=self.rate_mode)]
        self.mixers = [self._new_mixer()]
        self.combined = uniform(self.n_experts)

    def _new_mixer(self) -> MappedLearner:
        return MappedLearner(2, 0.0, self.mixer_alpha, self.rate_mode)

    @property
    def depth(self) -> int:
        """Current ``k``: number of runs, and of live mixers ``B_0..B_{k-1}``."""
        return len(self.runs)

    @property
    def decision(self) -> np.ndarray:
        return self.combined

    @property
    def round(self) -> int:
        return self.t

    @property
    def eta(self):
        return self.mixers[0].eta

    def _spawn(self) -> None:
        k = self.depth
        branch = self.runs[-1].copy()
        branch.terminal_cap = k
        self.runs.append(branch)
        # B_k stops forwarding A_k and starts mixing {A_{k+1}, B_{k+1}}
        self.mixers.append(self._new_mixer())

    def step(self, losses) -> np.ndarray:
        l = as_losses(losses, self.n_experts)
        t = self.t + 1
        if t == 2 ** self.depth:
            self._spawn()
        k = self.depth
        run_losses = [float(l @ A.decision) for A in self.runs]
        # walk the chain upwards: B_k forwards A_k, B_j sees [A_{j+1}, B_{j+1}]
        chain_loss = run_losses[k - 1]
        for j in range(k - 1, -1, -1):
            pair = np.array([run_losses[j], chain_loss])
            B = self.mixers[j]
            chain_loss = float(B.decision @ pair)
            B.step(pair)
        for A in self.runs:
            A.step(l)
        self.combined = self.chain_decision()
        U = 0.5 * (l.max() - l.min())
        self.sq_range_sum += U * U
        self.t = t
        return self.combined

    def chain_weights(self) -> np.ndarray:
        """Weight of each run ``A_i`` in the combined decision."""
        k = self.depth
        w = np.empty(k)
        carry = 1.0
        for j in range(k - 1):
            first, second = self.mixers[j].decision
            w[j] = carry * first
            carry *= second
        w[k - 1] = carry
        return w

    def chain_decision(self) -> np.ndarray:
        # evaluated from the deepest mixer outwards
        k = self.depth
        d = self.runs[k - 1].decision
        for j in range(k - 2, -1, -1):
            first, second = self.mixers[j].decision
            d = first * self.runs[j].decision + second * d
        return d / d.sum()

    @property
    def deviation_norm(self) -> float:
        return math.sqrt(self.sq_range_sum)

    def bound(self, path: float | None = None) -> float:
        from .bounds import bound_value

        P = 0.0 if path is None else float(path)
        return bound_value("utew", {"M": self.n_experts}, self.deviation_norm, P)

    def copy(self):
        return copy.deepcopy(self)
