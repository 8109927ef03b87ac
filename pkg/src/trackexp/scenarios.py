"""Adapters that put restricted settings in front of a full-information learner.

Surrogate losses from gradients, randomized expert selection, noisy
feedback, floor-constrained decisions, (semi-)bandit estimation and
discounted losses.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .adversaries import GameScript, make_rng, with_losses
from .errors import PreconditionError
from .simplex import as_distribution


# ------------------------------------------------------------- surrogate losses


@dataclass
class OpinionMatrix:
    """Expert opinions as the columns of ``opinions`` and a gradient ``g``."""

    opinions: np.ndarray
    gradient: np.ndarray

    def __post_init__(self):
        self.opinions = np.atleast_2d(np.asarray(self.opinions, dtype=np.float64))
        self.gradient = np.asarray(self.gradient, dtype=np.float64).ravel()
        if self.opinions.shape[0] != self.gradient.size:
            raise ValueError(
                f"opinion dimension {self.opinions.shape[0]} != gradient dimension "
                f"{self.gradient.size}"
            )

    @property
    def n_experts(self) -> int:
        return self.opinions.shape[1]

    def combine(self, p) -> np.ndarray:
        """Decision ``x_t = sum_m p_m x^(m)``."""
        return self.opinions @ np.asarray(p, dtype=np.float64)


def surrogate_losses(om: OpinionMatrix) -> np.ndarray:
    """``l_m = g^T x^(m)``."""
    return om.gradient @ om.opinions


def sample_expert(p, rng: np.random.Generator, size: int | None = None):
    """Index ``m`` drawn with probability ``p_m`` (inverse-CDF on one uniform)."""
    p = as_distribution(p, copy=False)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    # zero-probability tails can never be selected
    idx = np.minimum(idx, p.size - 1)
    return int(idx) if size is None else idx


# ---------------------------------------------------------------- noisy losses

NOISE_MODELS = ("gaussian", "uniform")


def noisy_wrapper(script: GameScript, model: str = "gaussian", scale: float = 0.0,
                  seed: int = 0) -> GameScript:
    """Add zero-mean noise to every loss; the clean losses are kept for accounting.

    ``model="gaussian"`` adds ``N(0, scale^2)``, ``model="uniform"`` adds
    ``U[-scale, scale]``.
    """
    if model not in NOISE_MODELS:
        raise ValueError(f"noise model must be one of {NOISE_MODELS}")
    if scale < 0:
        raise ValueError("noise scale must be nonnegative")
    clean = script.regret_losses()
    if scale == 0.0:
        return replace(script, true_losses=clean.copy(), meta={**script.meta, "noise": model})
    rng = make_rng(seed)
    if model == "gaussian":
        noise = rng.normal(0.0, scale, size=clean.shape)
    else:
        noise = rng.uniform(-scale, scale, size=clean.shape)
    out = with_losses(script, clean + noise, noise=model, noise_scale=scale, noise_seed=seed)
    out.true_losses = clean.copy()
    return out


# ------------------------------------------------------------- floor constraint


@dataclass(frozen=True)
class FloorConstraint:
    floor: tuple

    def __init__(self, floor):
        f = np.asarray(floor, dtype=np.float64)
        if f.ndim != 1 or np.any(f < 0) or f.sum() >= 1.0:
            raise ValueError("floor must be nonnegative with total mass below 1")
        object.__setattr__(self, "floor", tuple(f.tolist()))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.floor)

    @property
    def slack(self) -> float:
        """``1 - ||p||_1``, the mass the inner learner controls."""
        return 1.0 - float(np.sum(self.floor))


def floor_transform(constraint: FloorConstraint, q) -> np.ndarray:
    """``p + (1 - ||p||_1) q``."""
    q = as_distribution(q, copy=False)
    f = constraint.vector
    if f.size != q.size:
        raise ValueError("floor and decision dimensions differ")
    return f + constraint.slack * q


# ---------------------------------------------------------------------- bandits

FULL_BANDIT = "full_bandit"
SEMI_BANDIT = "semi_bandit"


@dataclass(frozen=True)
class BanditConfig:
    arms_selected: int = 1
    mode: str = FULL_BANDIT

    def __post_init__(self):
        if self.mode not in (FULL_BANDIT, SEMI_BANDIT):
            raise ValueError(f"unknown bandit mode {self.mode!r}")
        if self.arms_selected < 1:
            raise ValueError("arms_selected must be >= 1")
        if self.mode == FULL_BANDIT and self.arms_selected != 1:
            raise ValueError("full bandit feedback observes exactly one arm")

    def validate_for(self, n_arms: int) -> None:
        if self.arms_selected > n_arms:
            raise ValueError(f"cannot select {self.arms_selected} of {n_arms} arms")


def semi_bandit_policy(p, K: int) -> np.ndarray:
    """Selection probabilities ``b = K p`` (needs every ``p_m <= 1/K``)."""
    p = as_distribution(p, copy=False)
    if K < 1 or K > p.size:
        raise ValueError(f"K must lie in [1, {p.size}]")
    if p.max() > 1.0 / K + 1e-12:
        raise PreconditionError(f"entry {p.max()!r} exceeds the cap 1/K = {1.0 / K!r}")
    return np.minimum(K * p, 1.0)


def sample_arms(b, rng: np.random.Generator) -> np.ndarray:
    """Systematic sampling: ``round(sum b)`` distinct arms, arm ``m`` with marginal ``b_m``."""
    b = np.asarray(b, dtype=np.float64)
    K = int(round(b.sum()))
    edges = np.concatenate([[0.0], np.cumsum(b)])
    edges[-1] = K
    points = rng.random() + np.arange(K)
    # each unit-spaced point lands in exactly one arm's interval; b_m <= 1
    # keeps two points out of the same interval
    return np.searchsorted(edges, points, side="right") - 1


def bandit_estimate(losses, b, observed) -> np.ndarray:
    """Importance-weighted estimate: ``l_m / b_m`` on observed arms, else 0."""
    l = np.asarray(losses, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    obs = np.asarray(observed, dtype=np.int64)
    if np.any(b[obs] <= 0.0):
        raise PreconditionError("observed an arm with zero selection probability")
    est = np.zeros_like(l)
    est[obs] = l[obs] / b[obs]
    return est


def bandit_learner(n_arms: int, horizon: int, config: BanditConfig):
    """Uniform-mixing learner for ``K = 1``; truncated at ``1/K`` otherwise."""
    from .learners import MIN_BIASED, TruncatedLearner, UniformMixLearner

    config.validate_for(n_arms)
    K = config.arms_selected
    if K == 1:
        return UniformMixLearner(n_arms, 0.0, MIN_BIASED, horizon=horizon)
    return TruncatedLearner(n_arms, 0.0, MIN_BIASED, box_low=0.0, box_high=1.0 / K)


@dataclass
class BanditRun:
    decisions: np.ndarray
    selections: list
    expected_loss: np.ndarray

    def regret_against(self, losses, competitor) -> float:
        comp = np.einsum("tm,tm->t", np.asarray(competitor), np.asarray(losses))
        return float(self.expected_loss.sum() - comp.sum())


def run_bandit(script: GameScript, config: BanditConfig, seed: int = 0, learner=None) -> BanditRun:
    """Play ``script`` with partial feedback.

    The reported loss of round ``t`` is the expected one under ``b_t``
    (``p_t^T l_t`` for ``K = 1``), measured on the clean losses.
    """
    T, M = script.losses.shape
    learner = bandit_learner(M, T, config) if learner is None else learner
    rng = make_rng(seed)
    K = config.arms_selected
    truth = script.regret_losses()
    decisions = np.empty((T, M))
    expected = np.empty(T)
    picks = []
    for t in range(T):
        p = learner.decision
        decisions[t] = p
        b = semi_bandit_policy(p, K)
        arms = sample_arms(b, rng)
        picks.append(arms)
        expected[t] = float(b @ truth[t]) / K
        learner.step(bandit_estimate(script.losses[t], b, arms))
    return BanditRun(decisions, picks, expected)


# ---------------------------------------------------------------- discounting


def discount_rescale(script: GameScript, alpha: float, beta0: float = 1.0) -> GameScript:
    """Multiply round-``t`` losses by ``alpha^(1-t)`` (``t`` counted from 1).

    Repeated rescaling composes; the accumulated factor is kept in
    ``meta["discount_alpha"]`` along with ``beta0``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    T = script.T
    factor = float(alpha) ** -np.arange(T, dtype=np.float64)
    out = replace(
        script,
        losses=script.losses * factor[:, None],
        ranges=None if script.ranges is None else script.ranges * factor,
        true_losses=None if script.true_losses is None else script.true_losses * factor[:, None],
        meta={**script.meta,
              "discount_alpha": script.meta.get("discount_alpha", 1.0) * float(alpha),
              "discount_beta0": float(beta0)},
    )
    return out


def discount_weights(T: int, alpha: float, beta0: float = 1.0) -> np.ndarray:
    """``beta_{T-t} = beta0 alpha^(T-t)`` for ``t = 1..T``."""
    return beta0 * float(alpha) ** np.arange(T - 1, -1, -1, dtype=np.float64)


def discounted_regret(losses, decisions, competitor, alpha: float, beta0: float = 1.0) -> float:
    """``sum_t beta_{T-t} l_t^T (p_t - p_t*)`` on the original losses."""
    l = np.asarray(losses, dtype=np.float64)
    gap = np.einsum("tm,tm->t", l, np.asarray(decisions) - np.asarray(competitor))
    return float(discount_weights(l.shape[0], alpha, beta0) @ gap)
