"""Whole-trajectory runs with a compiled backend and a pure-Python fallback.

The backend is chosen at import: the Cython extension ``trackexp._kernels``
when it imports and ``TRACKEXP_PURE_PYTHON`` is unset, the learner classes
otherwise. Both produce the same decisions up to round-off.

Bounds are recomputed from the played decisions rather than read from
learner state, which keeps the two backends interchangeable.
"""
from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np

from .learners import MIN_BIASED, VARIANCE, LearnerSpec, bound_value
from .learners.mapped import resolve_alpha
from .mixer import alpha_star

try:
    if os.environ.get("TRACKEXP_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _kernels as _ext
except ImportError:  # pragma: no cover - depends on the build
    _ext = None

BACKEND = "compiled" if _ext is not None else "python"


class Trajectory(NamedTuple):
    decisions: np.ndarray   # (T, M), row t is played in round t + 1
    etas: np.ndarray        # (T,), rate after round t + 1 (nan if unset)
    backend: str


def compiled_supports(spec: LearnerSpec) -> bool:
    """Whether the compiled cores implement ``spec`` exactly."""
    if spec.kind in ("mapped", "doubling", "utew") and spec.alpha == "hat":
        return False
    return not spec.reset_weights


def _run_python(spec: LearnerSpec, losses: np.ndarray) -> Trajectory:
    learner = spec.build()
    T, M = losses.shape
    dec = np.empty((T, M))
    etas = np.full(T, np.nan)
    for t in range(T):
        dec[t] = learner.decision
        learner.step(losses[t])
        if learner.eta is not None:
            etas[t] = learner.eta
    return Trajectory(dec, etas, "python")


def _run_compiled(spec: LearnerSpec, losses: np.ndarray) -> Trajectory:
    variance = int(spec.rate_mode == VARIANCE)
    M = spec.n_experts
    kind = spec.kind
    if kind == "uniform_mix":
        out = _ext.run_core(_ext.KIND_UM, losses, variance, horizon=spec.horizon,
                            path=spec.path_budget)
    elif kind == "truncated":
        out = _ext.run_core(_ext.KIND_TRUNC, losses, variance, path=spec.path_budget,
                            a=spec.box_low, b=spec.box_high)
    elif kind == "mapped":
        out = _ext.run_core(_ext.KIND_MAPPED, losses, variance, path=spec.path_budget,
                            alpha=resolve_alpha(spec.alpha, M, spec.path_budget))
    elif kind == "doubling":
        cap = -1 if spec.terminal_cap is None else int(spec.terminal_cap)
        out = _ext.run_core(_ext.KIND_DOUBLING, losses, variance,
                            alpha=resolve_alpha(spec.alpha, M, 0.0), cap=cap)
    else:
        out = _ext.run_core(_ext.KIND_UTEW, losses, variance, alpha=alpha_star(M),
                            alpha_mix=resolve_alpha(spec.alpha, 2, 0.0))
    return Trajectory(out[0], out[1], "compiled")


def run_trajectory(spec: LearnerSpec, losses, *, backend: str | None = None) -> Trajectory:
    """Play ``spec`` against a ``(T, M)`` loss matrix.

    ``backend`` forces ``"python"`` or ``"compiled"``; by default the
    compiled cores are used whenever they are available and support ``spec``.
    """
    L = np.ascontiguousarray(losses, dtype=np.float64)
    if L.ndim != 2 or L.shape[1] != spec.n_experts or L.shape[0] == 0:
        raise ValueError(f"losses must be (T, {spec.n_experts}) with T >= 1")
    if not np.all(np.isfinite(L)):
        raise ValueError("losses must be finite")
    if backend is None:
        backend = "compiled" if (_ext is not None and compiled_supports(spec)) else "python"
    if backend == "compiled":
        if _ext is None:
            raise RuntimeError("compiled kernels are not available")
        if not compiled_supports(spec):
            raise ValueError(f"compiled kernels do not support {spec}")
        return _run_compiled(spec, L)
    if backend != "python":
        raise ValueError("backend must be 'python' or 'compiled'")
    return _run_python(spec, L)


# ---------------------------------------------------------------- statistics


def _prefix_stats(decisions: np.ndarray, losses: np.ndarray):
    """Cumulative ``V``, ``Q`` and running ``E`` of a played trajectory."""
    mu = np.einsum("tm,tm->t", decisions, losses)
    dev = losses - mu[:, None]
    low = losses - losses.min(axis=1, keepdims=True)
    V = np.cumsum(np.einsum("tm,tm->t", decisions, dev * dev))
    Q = np.cumsum(np.einsum("tm,tm->t", decisions, low * low))
    E = np.maximum.accumulate(np.abs(dev).max(axis=1))
    return V, Q, E


def deviation_prefix(losses) -> np.ndarray:
    """``L_t^(inf,2)`` for every prefix."""
    L = np.asarray(losses, dtype=np.float64)
    U = 0.5 * (L.max(axis=1) - L.min(axis=1))
    return np.sqrt(np.cumsum(U * U))


def trajectory_bounds(spec: LearnerSpec, decisions, losses, path) -> np.ndarray:
    """The learner's guarantee after every round, from the played decisions.

    ``path`` is a scalar or a per-round array of competitor path lengths.
    Mirrors the ``bound`` methods of the learner classes.
    """
    D = np.asarray(decisions, dtype=np.float64)
    L = np.asarray(losses, dtype=np.float64)
    T, M = L.shape
    P = np.broadcast_to(np.asarray(path, dtype=np.float64), (T,))
    out = np.empty(T)
    kind = spec.kind
    if kind == "utew":
        dev = deviation_prefix(L)
        for t in range(T):
            out[t] = bound_value("utew", {"M": M}, dev[t], P[t])
        return out
    if kind == "uniform_mix":
        V, Q, E = _prefix_stats(D, L)
        bkind = "uniform_mix_variance" if spec.rate_mode == VARIANCE else "uniform_mix_min"
        params = {"M": M, "T": spec.horizon}
        for t in range(T):
            stats = {"V": V[t], "Q": Q[t], "E": E[t]}
            out[t] = bound_value(bkind, params, stats, max(P[t], spec.path_budget))
        return out
    if kind == "truncated":
        V, Q, E = _prefix_stats(D, L)
        bkind = "truncated_variance" if spec.rate_mode == VARIANCE else "truncated_min"
        params = {"M": M, "a": spec.box_low}
        for t in range(T):
            stats = {"V": V[t], "Q": Q[t], "E": E[t]}
            out[t] = bound_value(bkind, params, stats, max(P[t], spec.path_budget))
        return out
    if kind == "mapped":
        alpha = resolve_alpha(spec.alpha, M, spec.path_budget)
        Dm = (1.0 - alpha) * D + alpha / M
        if spec.rate_mode == MIN_BIASED and spec.alpha == "star":
            _, Qd, _ = _prefix_stats(Dm, L)
            for t in range(T):
                out[t] = bound_value("mapped", {"M": M}, Qd[t], max(P[t], spec.path_budget))
            return out
        V, Q, E = _prefix_stats(Dm, L / (1.0 - alpha))
        bkind = "truncated_variance" if spec.rate_mode == VARIANCE else "truncated_min"
        params = {"M": M, "a": alpha / M}
        for t in range(T):
            stats = {"V": V[t], "Q": Q[t], "E": E[t]}
            out[t] = bound_value(bkind, params, stats,
                                 (1.0 - alpha) * max(P[t], spec.path_budget))
        return out
    if kind == "doubling":
        if spec.alpha == "hat":
            raise ValueError("doubling bounds from decisions need a fixed mixer")
        alpha = resolve_alpha(spec.alpha, M, 0.0)
        _, Qd, _ = _prefix_stats((1.0 - alpha) * D + alpha / M, L)
        floor = 0.0 if not spec.terminal_cap else 2.0 ** (spec.terminal_cap - 1) - 1.0
        for t in range(T):
            out[t] = bound_value("doubling", {"M": M}, Qd[t], max(P[t], floor))
        return out
    raise ValueError(f"unknown learner kind {kind!r}")


def realized_regret(decisions, losses, competitor) -> np.ndarray:
    """Cumulative ``sum_s l_s^T (p_s - p_s*)`` for every prefix."""
    D = np.asarray(decisions, dtype=np.float64)
    L = np.asarray(losses, dtype=np.float64)
    C = np.asarray(competitor, dtype=np.float64)
    if C.ndim == 1:
        C = np.broadcast_to(C, D.shape)
    return np.cumsum(np.einsum("tm,tm->t", L, D - C))


__all__ = [
    "BACKEND", "Trajectory", "compiled_supports", "deviation_prefix", "realized_regret",
    "run_trajectory", "trajectory_bounds",
]

