"""Arithmetic on the probability simplex.

Distributions are plain 1-D float64 numpy arrays; :func:`as_distribution`
validates (and, within a loose tolerance, renormalizes) them. Natural logs
throughout, with the ``0 log 0 = 0`` convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBoxError, InfiniteDivergenceError, SimplexError

SUM_TOL = 1e-9
RENORM_TOL = 1e-6


def as_distribution(w, *, copy: bool = True) -> np.ndarray:
    """Return ``w`` as a validated distribution over at least two experts.

    Sums off by more than ``SUM_TOL`` but within ``RENORM_TOL`` are silently
    renormalized; tiny negative round-off is clamped to zero.
    """
    p = np.array(w, dtype=np.float64) if copy else np.asarray(w, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise SimplexError(f"expected a 1-D vector with at least 2 entries, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise SimplexError("distribution has non-finite entries")
    if p.min() < -RENORM_TOL:
        raise SimplexError(f"negative entry {p.min():.3g}")
    if p.min() < 0.0:
        p = np.maximum(p, 0.0)
    s = p.sum()
    if abs(s - 1.0) > RENORM_TOL:
        raise SimplexError(f"entries sum to {s!r}, not 1")
    if abs(s - 1.0) > SUM_TOL:
        p = p / s
    return p


def as_losses(l, n_experts: int | None = None) -> np.ndarray:
    """Validate a loss vector: 1-D, finite, optionally of a given length."""
    v = np.asarray(l, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"loss vector must be 1-D, got shape {v.shape}")
    if n_experts is not None and v.size != n_experts:
        raise ValueError(f"loss vector has {v.size} entries, expected {n_experts}")
    if not np.all(np.isfinite(v)):
        raise ValueError("loss vector has non-finite entries")
    return v


def uniform(n_experts: int) -> np.ndarray:
    return np.full(n_experts, 1.0 / n_experts)


def one_hot(index: int, n_experts: int) -> np.ndarray:
    e = np.zeros(n_experts)
    e[index] = 1.0
    return e


def entropy(p) -> float:
    p = as_distribution(p, copy=False)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def kl_divergence(p, q) -> float:
    """``D(p || q)``; raises :class:`InfiniteDivergenceError` when infinite."""
    p = as_distribution(p, copy=False)
    q = as_distribution(q, copy=False)
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    support = p > 0
    if np.any(q[support] <= 0):
        raise InfiniteDivergenceError("p puts mass where q is zero")
    ps, qs = p[support], q[support]
    return float(np.sum(ps * (np.log(ps) - np.log(qs))))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    return float(0.5 * np.abs(p - q).sum())


def half_range(l) -> float:
    """``min_mu max_k |l_k - mu|``, i.e. half the spread of the losses."""
    v = as_losses(l)
    return float(0.5 * (v.max() - v.min()))


def adaptive_deviation_norm(script) -> float:
    """Square root of the summed squared half-ranges over all rounds.

    Accepts a :class:`~trackexp.adversaries.GameScript` or a ``(T, M)`` loss
    array.
    """
    losses = getattr(script, "losses", script)
    L = np.asarray(losses, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] == 0:
        raise ValueError("need a non-empty (T, M) loss array")
    U = 0.5 * (L.max(axis=1) - L.min(axis=1))
    return float(np.sqrt(np.sum(U * U)))


@dataclass(frozen=True)
class TruncationResult:
    projected: np.ndarray
    sigma: float
    clipped_low: tuple[int, ...]
    clipped_high: tuple[int, ...]


def _check_box(n: int, a: float, b: float) -> None:
    if a < 0 or b > 1 or a > b:
        raise InfeasibleBoxError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
    if a * n > 1 + 1e-12 or b * n < 1 - 1e-12:
        raise InfeasibleBoxError(f"box [{a}, {b}] cannot hold a distribution over {n} experts")


def truncation_sigma(q: np.ndarray, a: float, b: float) -> float:
    """Smallest scaling ``sigma`` with ``sum(clip(sigma*q, a, b)) == 1``.

    ``sigma -> sum(clip(sigma*q))`` is continuous, nondecreasing and piecewise
    linear with kinks at ``a/q_m`` and ``b/q_m``. We evaluate it at every kink,
    locate the first kink reaching 1 and solve the linear piece before it in
    closed form.
    """
    pos = q > 0
    n_zero = int(q.size - np.count_nonzero(pos))
    qp = q[pos]
    if n_zero * a + qp.size * b < 1 - 1e-12:
        raise InfeasibleBoxError("zero entries stay at the lower bound; box too small")
    kinks = np.unique(np.concatenate([a / qp, b / qp]))
    totals = np.clip(np.outer(kinks, qp), a, b).sum(axis=1) + n_zero * a
    hit = np.flatnonzero(totals >= 1.0 - 1e-13)
    j = int(hit[0]) if hit.size else kinks.size - 1
    if j == 0:
        return float(kinks[0])
    lo, hi = kinks[j - 1], kinks[j]
    mid = 0.5 * (lo + hi)
    scaled = mid * qp
    low = scaled < a
    high = scaled > b
    free = ~(low | high)
    slope = qp[free].sum()
    if slope <= 0.0:
        return float(lo)
    n_low = int(np.count_nonzero(low)) + n_zero
    n_high = int(np.count_nonzero(high))
    sigma = (1.0 - a * n_low - b * n_high) / slope
    return float(min(max(sigma, lo), hi))


def truncate_project(q, a: float, b: float) -> TruncationResult:
    """Scale ``q`` by ``sigma`` and clip each entry into ``[a, b]``.

    ``sigma`` is chosen so the result is a distribution; on a plateau of valid
    scalings (everything clipped) the smallest one is returned.
    """
    q = as_distribution(q, copy=False)
    _check_box(q.size, a, b)
    sigma = truncation_sigma(q, a, b)
    scaled = sigma * q
    low = scaled < a
    high = scaled > b
    projected = np.where(low, a, np.where(high, b, scaled))
    return TruncationResult(
        projected=projected,
        sigma=sigma,
        clipped_low=tuple(np.flatnonzero(low).tolist()),
        clipped_high=tuple(np.flatnonzero(high).tolist()),
    )


def mix_uniform(p, alpha: float) -> np.ndarray:
    """``(1 - alpha) p + alpha u``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    p = as_distribution(p, copy=False)
    return (1.0 - alpha) * p + alpha / p.size


def unmix_uniform(d, alpha: float) -> np.ndarray:
    """Inverse of :func:`mix_uniform` for ``alpha < 1``."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    d = as_distribution(d, copy=False)
    floor = alpha / d.size
    if d.min() < floor - 1e-12:
        raise SimplexError(f"entry {d.min()!r} below the mixing floor {floor!r}")
    p = np.maximum((d - floor) / (1.0 - alpha), 0.0)
    return p / p.sum()
