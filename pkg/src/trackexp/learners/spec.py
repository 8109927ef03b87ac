"""Plain-data learner description shared by the harness and the kernels."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .doubling import DoublingLearner, cap_for_path
from .exponential import TruncatedLearner, UniformMixLearner
from .mapped import MappedLearner
from .rates import MIN_BIASED, VARIANCE, check_rate_mode
from .utew import UtewLearner

KINDS = ("uniform_mix", "truncated", "mapped", "doubling", "utew")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    n_experts: int
    rate_mode: str | None = None
    horizon: int | None = None
    path_budget: float = 0.0
    box_low: float = 0.0
    box_high: float = 1.0
    alpha: object = "star"
    terminal_cap: int | None = None
    target_path: float | None = None
    reset_weights: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.n_experts < 2:
            raise ValueError("need at least two experts")
        if self.rate_mode is None:
            default = VARIANCE if self.kind == "uniform_mix" else MIN_BIASED
            object.__setattr__(self, "rate_mode", default)
        check_rate_mode(self.rate_mode)
        if self.kind == "uniform_mix" and self.horizon is None:
            raise ValueError("uniform_mix needs a horizon")
        if self.kind == "doubling" and self.terminal_cap is None and self.target_path is not None:
            object.__setattr__(self, "terminal_cap", cap_for_path(self.target_path))

    def build(self):
        M, mode = self.n_experts, self.rate_mode
        if self.kind == "uniform_mix":
            return UniformMixLearner(M, self.path_budget, mode, horizon=self.horizon)
        if self.kind == "truncated":
            return TruncatedLearner(M, self.path_budget, mode,
                                    box_low=self.box_low, box_high=self.box_high)
        if self.kind == "mapped":
            return MappedLearner(M, self.path_budget, self.alpha, mode)
        if self.kind == "doubling":
            return DoublingLearner(M, self.terminal_cap, self.alpha, mode, self.reset_weights)
        return UtewLearner(M, mode, self.alpha)

    def as_dict(self) -> dict:
        return asdict(self)
