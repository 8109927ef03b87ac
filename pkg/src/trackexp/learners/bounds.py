"""Closed-form regret guarantees, evaluated from realized statistics."""
from __future__ import annotations

import math

# mixed-space constants at the closed-form mixer (M = 2 is the worst case)
C_MAPPED = 5.111
THETA_MAPPED = 0.3
C_DOUBLING = 8.4
THETA_DOUBLING = 1.2
C_UTEW = 75.17
C_UTEW_EXACT = 75.1691252097

BOUND_KINDS = (
    "uniform_mix_variance",
    "uniform_mix_min",
    "truncated_variance",
    "truncated_min",
    "mapped",
    "mapped_exact",
    "doubling",
    "utew",
)


def _stat(stats, name):
    if isinstance(stats, dict):
        return float(stats[name])
    return float(getattr(stats, name))


def uniform_mix_numerator(M: int, T: int, path: float) -> float:
    return math.log(M * (T + 1)) * (2.0 + path)


def truncation_numerator(M: int, a: float, path: float) -> float:
    if a <= 0:
        return math.inf
    return math.log(M / a) + math.log(1.0 / a) * path


def bound_value(kind: str, params: dict, stats, path: float) -> float:
    """Evaluate the regret guarantee of ``kind`` at path length ``path``.

    ``stats`` is a :class:`~trackexp.learners.rates.RateStats` (or a dict with
    ``V``, ``Q``, ``E``) for the exponential learners, ``Q^d`` (a float) for
    ``mapped``/``doubling``, and ``L_T^(inf,2)`` (a float) for ``utew``.
    ``params`` carries ``M`` plus ``T`` (mixing) or ``a`` (truncation), and
    ``alpha`` for ``mapped_exact``.
    """
    M = int(params["M"])
    P = float(path)
    if P < 0:
        raise ValueError("path must be nonnegative")
    if kind == "uniform_mix_variance":
        A = uniform_mix_numerator(M, int(params["T"]), P)
        V, E = _stat(stats, "V"), _stat(stats, "E")
        return 2.0 * math.sqrt(2.0 * A * V) + A * E
    if kind == "uniform_mix_min":
        A = uniform_mix_numerator(M, int(params["T"]), P)
        return 2.0 * math.sqrt(A * _stat(stats, "Q"))
    if kind == "truncated_variance":
        A = truncation_numerator(M, float(params["a"]), P)
        V, E = _stat(stats, "V"), _stat(stats, "E")
        if math.isinf(A):
            return math.inf if (V > 0 or E > 0) else 0.0
        return 2.0 * math.sqrt(2.0 * A * V) + A * E
    if kind == "truncated_min":
        A = truncation_numerator(M, float(params["a"]), P)
        Q = _stat(stats, "Q")
        if math.isinf(A):
            return math.inf if Q > 0 else 0.0
        return 2.0 * math.sqrt(A * Q)
    if kind == "mapped":
        Qd = float(stats)
        return C_MAPPED * math.sqrt((1.0 + (1.0 - THETA_MAPPED) * P) * Qd * math.log(M))
    if kind == "mapped_exact":
        Qd = float(stats)
        alpha = float(params["alpha"])
        factor = (math.log(M * M / alpha) / (1.0 - alpha) ** 2
                  + math.log(M / alpha) / (1.0 - alpha) * P)
        return 2.0 * math.sqrt(factor * Qd)
    if kind == "doubling":
        Qd = float(stats)
        return C_DOUBLING * math.sqrt((1.0 + (1.0 + THETA_DOUBLING) * P) * Qd * math.log(M))
    if kind == "utew":
        L = float(stats)
        return C_UTEW * math.sqrt(math.floor(1.0 + P) * math.log(M)) * L
    raise ValueError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")
