"""Running loss statistics and the adaptive learning-rate rule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VARIANCE = "variance_biased"
MIN_BIASED = "min_biased"
RATE_MODES = (VARIANCE, MIN_BIASED)


def check_rate_mode(mode: str) -> str:
    if mode not in RATE_MODES:
        raise ValueError(f"rate_mode must be one of {RATE_MODES}, got {mode!r}")
    return mode


@dataclass
class RateStats:
    """Cumulative statistics driving the learning rate.

    ``V`` sums the ``p_t``-variance of the losses about their mean, ``Q`` the
    ``p_t``-second moment about the round minimum, and ``E`` tracks the
    largest ``|l_{t,m} - mu_t|`` seen so far.
    """

    V: float = 0.0
    Q: float = 0.0
    E: float = 0.0
    round: int = 0

    def accumulate(self, p: np.ndarray, l: np.ndarray) -> tuple[float, float]:
        """Fold in round ``t`` and return ``(mu_t, z_t)``."""
        mu = float(p @ l)
        z = float(l.min())
        dev = l - mu
        self.V += float(p @ (dev * dev))
        low = l - z
        self.Q += float(p @ (low * low))
        self.E = max(self.E, float(np.abs(dev).max()))
        self.round += 1
        return mu, z

    def reset(self) -> None:
        self.V = self.Q = self.E = 0.0
        self.round = 0


def learning_rate(numerator: float, stats: RateStats, mode: str) -> tuple[float | None, bool]:
    """Rate for the current round, or ``None`` when the update is trivial.

    Returns ``(eta, capped)`` where ``capped`` says the ``1/E`` cap was the
    binding term. ``numerator`` is the loss-free factor of the rate
    (``log(M(T+1))(2+P)`` for mixing, ``log(M/a) + log(1/a)P`` for
    truncation); an infinite numerator (``a = 0``) leaves only the cap.
    """
    if mode == VARIANCE:
        cap = 1.0 / stats.E if stats.E > 0 else None
        if stats.V > 0 and math.isfinite(numerator):
            eta = math.sqrt(numerator / (2.0 * stats.V))
            if cap is not None and cap < eta:
                return cap, True
            return eta, False
        return cap, cap is not None
    if stats.Q > 0 and math.isfinite(numerator):
        return math.sqrt(numerator / stats.Q), False
    if not math.isfinite(numerator) and stats.E > 0:
        return 1.0 / stats.E, True
    return None, False
