"""Brute-force references and per-step inequality checkers.

Nothing here reuses learner internals beyond reading the traced inputs and
outputs of a step: means, minima and divergences are recomputed from
scratch so that a bug in the learner cannot hide itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .ledger import RegretLedger, path_prefix

CHECK_TOL = 1e-9


# ------------------------------------------------------------------ competitors


@dataclass(frozen=True)
class CompetitorCertificate:
    experts: tuple
    total_loss: float
    n_experts: int

    @property
    def switches(self) -> int:
        e = self.experts
        return sum(1 for i in range(1, len(e)) if e[i] != e[i - 1])

    @property
    def path(self) -> float:
        return float(self.switches)

    @property
    def sequence(self) -> np.ndarray:
        out = np.zeros((len(self.experts), self.n_experts))
        out[np.arange(len(self.experts)), list(self.experts)] = 1.0
        return out


def _loss_matrix(script) -> np.ndarray:
    if hasattr(script, "regret_losses"):
        return script.regret_losses()
    return np.asarray(script, dtype=np.float64)


def best_fixed_expert(script) -> CompetitorCertificate:
    """``argmin_m sum_t l_{t,m}``, smallest index on ties."""
    L = _loss_matrix(script)
    totals = L.sum(axis=0)
    m = int(np.argmin(totals))
    return CompetitorCertificate((m,) * L.shape[0], float(totals[m]), L.shape[1])


def best_switching_competitor(script, max_switches: int) -> CompetitorCertificate:
    """Exact best one-hot sequence with at most ``max_switches`` switches.

    Dynamic program over (round, switches used, expert) in ``O(T M S)``:
    arriving at expert ``m`` with ``s`` switches either stays on ``m`` or
    jumps from the best expert of layer ``s - 1``. Ties prefer staying, then
    the smaller index, then fewer switches.
    """
    if max_switches < 0:
        raise ValueError("max_switches must be >= 0")
    L = _loss_matrix(script)
    T, M = L.shape
    S = min(int(max_switches), T - 1)
    cost = np.full((S + 1, M), np.inf)
    cost[0] = L[0]
    jumped = np.zeros((T, S + 1, M), dtype=bool)
    came_from = np.zeros((T, S + 1), dtype=np.int64)
    for t in range(1, T):
        best_prev = np.argmin(cost, axis=1)
        best_val = cost[np.arange(S + 1), best_prev]
        new = cost.copy()
        if S > 0:
            jump = best_val[:-1, None]
            take = jump < cost[1:]
            new[1:] = np.where(take, jump, cost[1:])
            jumped[t, 1:] = take
            came_from[t, 1:] = best_prev[:-1]
        cost = new + L[t]
    flat = int(np.argmin(cost.T.ravel()))   # expert-major: smallest expert, then fewest switches
    m, s = divmod(flat, S + 1)
    total = float(cost[s, m])
    seq = [0] * T
    for t in range(T - 1, -1, -1):
        seq[t] = m
        if t > 0 and jumped[t, s, m]:
            m = int(came_from[t, s])
            s -= 1
    # recompute in plain arithmetic so the certificate is self-consistent
    total = float(sum(L[t, seq[t]] for t in range(T)))
    return CompetitorCertificate(tuple(seq), total, M)


# --------------------------------------------------------------- divergences


def _kl(p_star, p) -> float:
    ps = np.asarray(p_star, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    sup = ps > 0
    if np.any(p[sup] <= 0):
        return math.inf
    return float(np.sum(ps[sup] * (np.log(ps[sup]) - np.log(p[sup]))))


def _entropy(p) -> float:
    p = np.asarray(p, dtype=np.float64)
    sup = p > 0
    return float(-np.sum(p[sup] * np.log(p[sup])))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    slack: float
    lhs: float
    rhs: float

    def __bool__(self) -> bool:
        return self.passed


def _result(name, lhs, rhs, tol) -> CheckResult:
    slack = lhs - rhs
    return CheckResult(name, bool(slack >= -tol), float(slack), float(lhs), float(rhs))


# ------------------------------------------------------------------- checkers


def check_kl_step(p_t, p_next, p_star, losses, eta, gamma, *, bias: str = "mean",
                  tol: float = CHECK_TOL) -> CheckResult:
    """One exponential-weights step against a fixed comparator.

    Checks ``(1/eta)[D(p*||p_t) - D(p*||p_next)] >= l.(p_t - p*) - r +
    log(1 - gamma)/eta`` where ``r = eta E_{p_t}[(l - mu)^2]`` for
    ``bias="mean"`` (needs ``|eta (l_m - mu)| <= 1``) and
    ``r = (eta/2) E_{p_t}[(l - z)^2]`` for ``bias="min"``.
    """
    p_t = np.asarray(p_t, dtype=np.float64)
    l = np.asarray(losses, dtype=np.float64)
    if eta is None or eta <= 0:
        raise PreconditionError("the step has no positive learning rate")
    mu = float(p_t @ l)
    if bias == "mean":
        dev = l - mu
        if np.max(np.abs(eta * dev)) > 1.0 + 1e-12:
            raise PreconditionError("|eta (l - mu)| exceeds 1")
        r = eta * float(p_t @ (dev * dev))
    elif bias == "min":
        low = l - l.min()
        r = 0.5 * eta * float(p_t @ (low * low))
    else:
        raise ValueError("bias must be 'mean' or 'min'")
    lhs = (_kl(p_star, p_t) - _kl(p_star, p_next)) / eta
    rhs = float(l @ (p_t - np.asarray(p_star))) - r + math.log1p(-gamma) / eta
    return _result("kl_step", lhs, rhs, tol)


def check_change_kl_step(p_star, p_star_next, p_next, *, tol: float = CHECK_TOL) -> CheckResult:
    """``-D(p*||p') <= -D(p*_next||p') + H(p*) - H(p*_next) + TV log(1/min p')``."""
    p_next = np.asarray(p_next, dtype=np.float64)
    if p_next.min() <= 0:
        raise PreconditionError("p_next must be strictly positive")
    a, b = np.asarray(p_star, dtype=np.float64), np.asarray(p_star_next, dtype=np.float64)
    lhs = -_kl(a, p_next)
    rhs = (-_kl(b, p_next) + _entropy(a) - _entropy(b)
           + 0.5 * float(np.abs(b - a).sum()) * -math.log(p_next.min()))
    # written as rhs - lhs >= 0
    return _result("change_kl_step", rhs, lhs, tol)


def check_truncation_step(p_star, q_next, p_next, a: float, b: float, *,
                          tol: float = CHECK_TOL) -> CheckResult:
    """``D(p*||q) >= D(p*||Pi_{a,b}(q))`` for comparators inside the box."""
    ps = np.asarray(p_star, dtype=np.float64)
    if ps.min() < a - 1e-12 or ps.max() > b + 1e-12:
        raise PreconditionError(f"comparator leaves the box [{a}, {b}]")
    return _result("truncation_step", _kl(ps, q_next), _kl(ps, p_next), tol)


def bisection_sigma(q, a, b, iters: int = 200) -> np.ndarray | float:
    """Reference ``sigma`` for the truncation by bisection (batched over rows).

    Finds the smallest ``sigma`` with ``sum(clip(sigma q, a, b)) >= 1``.
    ``q`` may be ``(M,)`` or ``(N, M)``; ``a`` and ``b`` scalars or ``(N,)``.
    """
    Q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    N = Q.shape[0]
    A = np.broadcast_to(np.asarray(a, dtype=np.float64), (N,))[:, None]
    B = np.broadcast_to(np.asarray(b, dtype=np.float64), (N,))[:, None]
    lo = np.zeros(N)
    qmin_pos = np.where(Q > 0, Q, np.inf).min(axis=1)
    hi = B[:, 0] / qmin_pos
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        total = np.clip(mid[:, None] * Q, A, B).sum(axis=1)
        ok = total >= 1.0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        if np.all(hi - lo <= 1e-16 * hi):
            break
    return hi if np.ndim(q) == 2 else float(hi[0])


# ------------------------------------------------------------------- reports


@dataclass
class CheckReport:
    counts: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    min_slack: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    first_failure: dict = field(default_factory=dict)

    def add(self, res: CheckResult, round_: int | None = None) -> None:
        n = res.name
        self.counts[n] = self.counts.get(n, 0) + 1
        self.min_slack[n] = min(self.min_slack.get(n, math.inf), res.slack)
        if not res.passed:
            self.failures[n] = self.failures.get(n, 0) + 1
            self.first_failure.setdefault(n, round_)

    def skip(self, name: str) -> None:
        self.skipped[name] = self.skipped.get(name, 0) + 1

    def merge(self, other: "CheckReport") -> "CheckReport":
        for n, c in other.counts.items():
            self.counts[n] = self.counts.get(n, 0) + c
            self.min_slack[n] = min(self.min_slack.get(n, math.inf), other.min_slack[n])
        for n, c in other.failures.items():
            self.failures[n] = self.failures.get(n, 0) + c
            self.first_failure.setdefault(n, other.first_failure.get(n))
        for n, c in other.skipped.items():
            self.skipped[n] = self.skipped.get(n, 0) + c
        return self

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())

    def to_text(self) -> str:
        lines = [f"status={'pass' if self.passed else 'fail'}"]
        for n in sorted(set(self.counts) | set(self.skipped)):
            lines.append(
                f"check={n} steps={self.counts.get(n, 0)} failures={self.failures.get(n, 0)} "
                f"skipped={self.skipped.get(n, 0)} min_slack={self.min_slack.get(n, math.inf)!r}"
            )
        return "\n".join(lines) + "\n"


# -------------------------------------------------------------------- replay


def _competitor_matrix(script, competitor) -> np.ndarray:
    if competitor is None:
        competitor = getattr(script, "competitor", None)
    if competitor is None:
        competitor = best_fixed_expert(script)
    if isinstance(competitor, CompetitorCertificate):
        return competitor.sequence
    return np.asarray(competitor, dtype=np.float64)


def _exp_checks(report, trace, p_star, p_star_next, bias, box=None, t=None, corrupt=False):
    """Checks for one traced exponential step; ``box`` is ``(a, b)`` for truncation.

    ``corrupt`` swaps the updated weights for the uniform distribution, a
    negative control the checkers are expected to flag.
    """
    if corrupt:
        flat = np.full(trace.prev.size, 1.0 / trace.prev.size)
        trace = trace._replace(pre_projection=flat, result=flat)
    if trace.eta is None:
        report.skip("kl_step")
    else:
        nxt = trace.pre_projection if box is not None else trace.result
        try:
            report.add(check_kl_step(trace.prev, nxt, p_star, trace.losses, trace.eta,
                                     trace.gamma, bias=bias), t)
        except PreconditionError:
            report.skip("kl_step")
    if box is not None:
        try:
            report.add(check_truncation_step(p_star, trace.pre_projection, trace.result,
                                             *box), t)
        except PreconditionError:
            report.skip("truncation_step")
    if p_star_next is not None:
        if trace.result.min() > 0:
            report.add(check_change_kl_step(p_star, p_star_next, trace.result), t)
        else:
            report.skip("change_kl_step")


def _traced_step(learner, losses, p_star, p_star_next, report, t, corrupt=False):
    """Step ``learner`` and run whichever checks its structure supports."""
    from .learners import (DoublingLearner, MappedLearner, TruncatedLearner,
                           UniformMixLearner, VARIANCE)

    target = learner
    if isinstance(target, DoublingLearner):
        target = target.inner
    learner.step(losses)
    if isinstance(target, MappedLearner):
        alpha, M = target.alpha, target.n_experts
        inner = target.inner
        mix = lambda p: (1.0 - alpha) * p + alpha / M  # noqa: E731
        bias = "mean" if inner.rate_mode == VARIANCE else "min"
        _exp_checks(report, inner.last_step, mix(p_star),
                    None if p_star_next is None else mix(p_star_next), bias,
                    (inner.box_low, inner.box_high), t, corrupt)
    elif isinstance(target, TruncatedLearner):
        bias = "mean" if target.rate_mode == VARIANCE else "min"
        _exp_checks(report, target.last_step, p_star, p_star_next, bias,
                    (target.box_low, target.box_high), t, corrupt)
    elif isinstance(target, UniformMixLearner):
        bias = "mean" if target.rate_mode == VARIANCE else "min"
        _exp_checks(report, target.last_step, p_star, p_star_next, bias, None, t, corrupt)
    else:
        report.skip("structure")


def replay_with_checks(learner, script, competitor=None, *, checks: bool = True,
                       corrupt: bool = False):
    """Run ``learner`` through ``script`` and return ``(RegretLedger, CheckReport)``.

    The learner is stepped in place. Regret is measured on the clean losses
    when the script carries them; the learner sees ``script.losses``.
    """
    losses = script.losses
    truth = script.regret_losses()
    T, M = losses.shape
    if T == 0:
        raise ValueError("empty script")
    C = _competitor_matrix(script, competitor)
    if C.shape != (T, M):
        raise ValueError("competitor shape does not match the script")
    path = path_prefix(C)
    report = CheckReport()
    learner_loss = np.empty(T)
    bound = np.empty(T)
    eta = np.full(T, np.nan)
    decisions = np.empty((T, M))
    for t in range(T):
        p = learner.decision
        decisions[t] = p
        learner_loss[t] = float(p @ truth[t])
        nxt = C[t + 1] if t + 1 < T else None
        if checks:
            _traced_step(learner, losses[t], C[t], nxt, report, t + 1, corrupt)
        else:
            learner.step(losses[t])
        e = learner.eta
        if e is not None:
            eta[t] = e
        bound[t] = learner.bound(path[t])
    comp_loss = np.einsum("tm,tm->t", C, truth)
    U = 0.5 * (losses.max(axis=1) - losses.min(axis=1))
    ledger = RegretLedger(learner_loss, comp_loss, bound, eta, path,
                          float(math.sqrt(np.sum(U * U))), meta={"decisions": decisions})
    return ledger, report
