"""The learner zoo.

Each learner holds its own state and exposes ``decision`` (the distribution
to play this round), ``step(losses)`` (consume the round's losses, return the
next decision), ``eta``, ``bound(path)`` and ``copy()``.

The ``*_init`` / ``*_step`` functions are value-style wrappers: a step
returns a new state and leaves its argument untouched.
"""
from .bounds import BOUND_KINDS, bound_value
from .doubling import DoublingLearner, cap_for_path, reset_schedule
from .exponential import StepTrace, TruncatedLearner, UniformMixLearner
from .mapped import MappedLearner, resolve_alpha
from .rates import MIN_BIASED, RATE_MODES, VARIANCE, RateStats, learning_rate
from .snapshot import from_snapshot, to_snapshot
from .spec import LearnerSpec
from .utew import UtewLearner


def _stepped(state, losses):
    new = state.copy()
    p = new.step(losses)
    return new, p


def um_init(M, T, path_budget=0.0, rate_mode=VARIANCE) -> UniformMixLearner:
    return UniformMixLearner(M, path_budget, rate_mode, horizon=T)


def um_step(state: UniformMixLearner, losses):
    return _stepped(state, losses)


def trunc_init(M, a, b, path_budget=0.0, rate_mode=MIN_BIASED) -> TruncatedLearner:
    return TruncatedLearner(M, path_budget, rate_mode, box_low=a, box_high=b)


def trunc_step(state: TruncatedLearner, losses):
    return _stepped(state, losses)


def mapped_init(M, path_budget=0.0, alpha_mode="star", rate_mode=MIN_BIASED) -> MappedLearner:
    return MappedLearner(M, path_budget, alpha_mode, rate_mode)


def mapped_step(state: MappedLearner, losses):
    return _stepped(state, losses)


def doubling_init(M, terminal_cap=None, alpha_mode="star", rate_mode=MIN_BIASED,
                  reset_weights=False) -> DoublingLearner:
    return DoublingLearner(M, terminal_cap, alpha_mode, rate_mode, reset_weights)


def doubling_step(state: DoublingLearner, losses):
    return _stepped(state, losses)


def utew_init(M, rate_mode=MIN_BIASED) -> UtewLearner:
    return UtewLearner(M, rate_mode)


def utew_step(state: UtewLearner, losses):
    return _stepped(state, losses)


__all__ = [
    "BOUND_KINDS", "DoublingLearner", "LearnerSpec", "MIN_BIASED", "MappedLearner",
    "RATE_MODES", "RateStats", "StepTrace", "TruncatedLearner", "UniformMixLearner",
    "UtewLearner", "VARIANCE", "bound_value", "cap_for_path", "doubling_init",
    "doubling_step", "from_snapshot", "learning_rate", "mapped_init", "mapped_step",
    "reset_schedule", "resolve_alpha", "to_snapshot", "trunc_init", "trunc_step",
    "um_init", "um_step", "utew_init", "utew_step",
]
