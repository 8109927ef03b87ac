"""The lower Lambert-W branch and the uniform-mixing coefficients built on it."""
from __future__ import annotations

import math

from scipy.optimize import minimize_scalar

from .errors import DomainError

_BRANCH_POINT = -math.exp(-1.0)


def lambert_w_minus1(x: float) -> float:
    """Lower real branch ``W_{-1}(x)`` for ``-1/e <= x < 0``.

    Halley iteration started from the branch-point series near ``-1/e`` and
    from the asymptotic ``log(-x) - log(-log(-x))`` expansion elsewhere.
    """
    x = float(x)
    if not (x >= _BRANCH_POINT - 1e-15 and x < 0.0):
        raise DomainError(f"W_-1 is real only on [-1/e, 0), got {x!r}")
    if x <= _BRANCH_POINT:
        return -1.0
    if x < -0.25:
        r = 2.0 * (1.0 + math.e * x)
        s = -math.sqrt(max(r, 0.0))
        w = -1.0 + s - s * s / 3.0 + 11.0 / 72.0 * s ** 3
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if w_new > -1.0:
            w_new = 0.5 * (w - 1.0)
        if abs(w_new - w) <= 1e-15 * abs(w_new):
            w = w_new
            break
        w = w_new
    return w


def alpha_star(n_experts: int) -> float:
    """Closed-form mixer ``-0.5 / W_{-1}(-0.5 e^{-0.5} / M^2)``."""
    if n_experts < 2:
        raise ValueError("need at least two experts")
    w = lambert_w_minus1(-0.5 * math.exp(-0.5) / (n_experts * n_experts))
    return -0.5 / w


def alpha_objective(alpha: float, n_experts: int, path: float) -> float:
    """Mixer-dependent factor of the truncated regret bound."""
    m = float(n_experts)
    return (math.log(m * m / alpha) / (1.0 - alpha) ** 2
            + math.log(m / alpha) / (1.0 - alpha) * path)


def alpha_hat(n_experts: int, path: float) -> float:
    """Numerical minimizer of :func:`alpha_objective` over ``(0, 1)``."""
    if n_experts < 2:
        raise ValueError("need at least two experts")
    if path < 0:
        raise ValueError("path budget must be nonnegative")
    res = minimize_scalar(
        alpha_objective,
        bounds=(1e-12, 1.0 - 1e-9),
        args=(n_experts, float(path)),
        method="bounded",
        options={"xatol": 1e-12, "maxiter": 500},
    )
    return float(res.x)
