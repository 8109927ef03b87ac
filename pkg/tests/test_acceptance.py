"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines appear inline.
"""
import math
import time

import numpy as np
import pytest

from trackexp import kernels
from trackexp.adversaries import drift_env, dynamic_env, make_rng, static_env, two_expert_env
from trackexp.learners import MIN_BIASED, VARIANCE, LearnerSpec, UniformMixLearner, bound_value
from trackexp.learners.bounds import C_UTEW
from trackexp.ledger import path_prefix
from trackexp.mixer import alpha_star
from trackexp.oracle import (
    best_fixed_expert,
    best_switching_competitor,
    bisection_sigma,
    check_change_kl_step,
    check_truncation_step,
    replay_with_checks,
)
from trackexp.scenarios import (
    BanditConfig,
    bandit_estimate,
    discount_rescale,
    discounted_regret,
    run_bandit,
    sample_arms,
    semi_bandit_policy,
)
from trackexp.simplex import truncate_project

TOL = 1e-9


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return _report


def _regret_and_bound(spec, losses, competitor, path=None):
    traj = kernels.run_trajectory(spec, losses)
    regret = kernels.realized_regret(traj.decisions, losses, competitor)
    P = path_prefix(competitor) if path is None else path
    return regret, kernels.trajectory_bounds(spec, traj.decisions, losses, P)


# ---------------------------------------------------------------------------- 1


def test_c01_simplex_and_floor(report):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    steps = worst_sum = 0
    worst_floor = math.inf
    T = 250
    for M in (2, 8, 64):
        for run in range(134):
            mode = VARIANCE if run % 2 == 0 else MIN_BIASED
            learner = UniformMixLearner(M, 0.0, mode, horizon=T)
            L = rng.uniform(-1.0, 1.0, size=(T, M))
            for t in range(T):
                p = learner.step(L[t])
                steps += 1
                worst_sum = max(worst_sum, abs(p.sum() - 1.0))
                worst_floor = min(worst_floor, p.min() * (t + 2) * M)
    elapsed = time.perf_counter() - start
    ok = steps >= 100_000 and worst_sum <= 1e-9 and worst_floor >= 1.0 - 1e-12 and elapsed < 10
    report(1, ok, f"{steps} steps, max|sum-1|={worst_sum:.2e}, "
                  f"min p/floor={worst_floor:.6f}, {elapsed:.1f}s (<10s)")


# ---------------------------------------------------------------------------- 2


def test_c02_lemma_checkers(report):
    start = time.perf_counter()
    kinds = [
        lambda M, T: LearnerSpec("uniform_mix", M, VARIANCE, horizon=T, path_budget=3.0),
        lambda M, T: LearnerSpec("uniform_mix", M, MIN_BIASED, horizon=T, path_budget=3.0),
        lambda M, T: LearnerSpec("truncated", M, MIN_BIASED, box_low=0.01, box_high=1.0,
                                 path_budget=3.0),
        lambda M, T: LearnerSpec("mapped", M, path_budget=3.0),
        lambda M, T: LearnerSpec("doubling", M),
    ]
    failures = 0
    counts = {}
    min_slack = math.inf
    for i in range(100):
        M = 2 if i % 2 == 0 else 8
        script = dynamic_env(500, M, 3.0, seed=2000 + i)
        _, rep = replay_with_checks(kinds[i % len(kinds)](M, 500).build(), script)
        failures += sum(rep.failures.values())
        for k, c in rep.counts.items():
            counts[k] = counts.get(k, 0) + c
        min_slack = min([min_slack, *rep.min_slack.values()])

    rng = np.random.default_rng(202)
    n = 100_000
    for _ in range(n):
        M = int(rng.integers(2, 9))
        a, b, p = (rng.dirichlet(np.full(M, 0.5)) for _ in range(3))
        p = np.maximum(p, 1e-300)
        p /= p.sum()
        r = check_change_kl_step(a, b, p)
        failures += not r.passed
        min_slack = min(min_slack, r.slack)
    for _ in range(n):
        M = int(rng.integers(2, 9))
        lo = rng.uniform(0, 1.0 / M)
        hi = rng.uniform(1.0 / M, 1.0)
        q = rng.dirichlet(np.full(M, 0.5))
        p_star = truncate_project(rng.dirichlet(np.ones(M)), lo, hi).projected
        r = check_truncation_step(p_star, q, truncate_project(q, lo, hi).projected, lo, hi)
        failures += not r.passed
        min_slack = min(min_slack, r.slack)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and min_slack >= -TOL and elapsed < 60
    traced = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    report(2, ok, f"traced checks ({traced}) + 2x{n} random samples, failures={failures}, "
                  f"min slack={min_slack:.2e}, {elapsed:.1f}s (<60s)")


# ---------------------------------------------------------------------------- 3


def test_c03_static_bounds(report):
    T, M = 1000, 8
    worst = -math.inf
    runs = 0
    for gen in ("drift", "static"):
        for seed in range(20):
            s = drift_env(T, M, 0.0, seed=seed) if gen == "drift" else static_env(T, M, seed=seed)
            comp = best_fixed_expert(s).sequence
            for mode in (VARIANCE, MIN_BIASED):
                spec = LearnerSpec("uniform_mix", M, mode, horizon=T)
                regret, bound = _regret_and_bound(spec, s.losses, comp)
                worst = max(worst, float(np.max(regret - bound)))
                runs += 1
    report(3, worst <= TOL, f"{runs} runs, max over prefixes of (regret - bound) = {worst:.3f}")


# ---------------------------------------------------------------------------- 4


def test_c04_dynamic_bounds(report):
    T, M = 4096, 8
    worst = {"mapped": -math.inf, "doubling": -math.inf}
    ratio = {"mapped": 0.0, "doubling": 0.0}
    for S in (0, 3, 10):
        for seed in range(20):
            s = dynamic_env(T, M, float(S), seed=400 + seed)
            cert = best_switching_competitor(s, S)
            comp = cert.sequence
            for spec in (LearnerSpec("mapped", M, path_budget=float(S)),
                         LearnerSpec("doubling", M, target_path=float(S))):
                regret, bound = _regret_and_bound(spec, s.losses, comp)
                worst[spec.kind] = max(worst[spec.kind], float(np.max(regret - bound)))
                ratio[spec.kind] = max(ratio[spec.kind], float(regret[-1] / bound[-1]))
    ok = all(v <= TOL for v in worst.values())
    report(4, ok, f"120 runs, max over prefixes of (regret - bound): "
                  f"mapped={worst['mapped']:.2f}, doubling={worst['doubling']:.2f}; "
                  f"max final regret/bound: mapped={ratio['mapped']:.3f} (c=5.111, theta=0.3), "
                  f"doubling={ratio['doubling']:.3f} (c'=8.4, theta'=1.2)")


# ---------------------------------------------------------------------------- 5


def test_c05_utew_universal(report):
    start = time.perf_counter()
    T, M = 4096, 8
    spec = LearnerSpec("utew", M)
    worst = -math.inf
    for seed in range(20):
        s = dynamic_env(T, M, 10.0, seed=500 + seed)
        traj = kernels.run_trajectory(spec, s.losses)
        dev = kernels.deviation_prefix(s.losses)
        for S in (0, 3, 10, 50):
            comp = best_switching_competitor(s, S).sequence
            regret = kernels.realized_regret(traj.decisions, s.losses, comp)
            P = path_prefix(comp)
            bound = C_UTEW * np.sqrt(np.floor(1.0 + P) * math.log(M)) * dev
            worst = max(worst, float(np.max(regret - bound)))
            assert bound[-1] == pytest.approx(bound_value("utew", {"M": M}, dev[-1], P[-1]))
    elapsed = time.perf_counter() - start
    ok = worst <= TOL and elapsed < 300
    report(5, ok, f"20 runs x 4 competitors, max (regret - bound) = {worst:.1f}, "
                  f"{elapsed:.1f}s (<300s)")


# ---------------------------------------------------------------------------- 6


def test_c06_lower_bound_floor(report):
    start = time.perf_counter()
    T, n = 10_000, 1000
    games = [two_expert_env(T, seed=6000 + r).losses for r in range(n)]
    best = np.array([g.sum(axis=0).min() for g in games])
    specs = {
        "uniform_mix/variance": LearnerSpec("uniform_mix", 2, VARIANCE, horizon=T),
        "uniform_mix/min": LearnerSpec("uniform_mix", 2, MIN_BIASED, horizon=T),
        "truncated": LearnerSpec("truncated", 2, MIN_BIASED, box_low=0.0, box_high=1.0),
        "mapped": LearnerSpec("mapped", 2),
        "doubling": LearnerSpec("doubling", 2),
        "utew": LearnerSpec("utew", 2),
    }
    means = {}
    for name, spec in specs.items():
        total = np.empty(n)
        for r, g in enumerate(games):
            d = kernels.run_trajectory(spec, g).decisions
            total[r] = np.einsum("tm,tm->", d, g) - best[r]
        means[name] = total.mean() / math.sqrt(T)
    elapsed = time.perf_counter() - start
    ok = min(means.values()) >= 0.68 and elapsed < 120
    body = ", ".join(f"{k}={v:.3f}" for k, v in means.items())
    report(6, ok, f"mean regret/sqrt(T) over {n} games: {body} (>= 0.68; 1/sqrt2=0.707), "
                  f"{elapsed:.1f}s (<120s)")


# ---------------------------------------------------------------------------- 7


def test_c07_scale_translation_invariance(report):
    T, M = 1000, 4
    specs = [
        LearnerSpec("uniform_mix", M, VARIANCE, horizon=T, path_budget=1.0),
        LearnerSpec("uniform_mix", M, MIN_BIASED, horizon=T, path_budget=1.0),
        LearnerSpec("truncated", M, VARIANCE, box_low=0.02, box_high=0.9),
        LearnerSpec("truncated", M, MIN_BIASED, box_low=0.02, box_high=0.9),
        LearnerSpec("mapped", M, path_budget=2.0),
        LearnerSpec("mapped", M, VARIANCE, alpha="hat", path_budget=2.0),
        LearnerSpec("doubling", M),
        LearnerSpec("utew", M),
    ]
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(700 + seed)
        L = rng.uniform(-1, 1, size=(T, M))
        shift = rng.uniform(-5, 5, size=(T, 1))
        for spec in specs:
            base = kernels.run_trajectory(spec, L).decisions
            for variant in (1e-3 * L, 1e3 * L, L + shift):
                worst = max(worst, float(np.abs(kernels.run_trajectory(spec, variant).decisions
                                                - base).max()))
    report(7, worst <= TOL, f"{len(specs)} learners x 5 seeds x 3 transforms, "
                            f"sup-norm deviation = {worst:.2e} (<= 1e-9)")


# ---------------------------------------------------------------------------- 8


def test_c08_lambert_constants(report):
    theta = alpha_star(2) * (1 + 2 * math.log(2))
    k, r = 5.70474368345, 3.30305083218
    c = math.sqrt(4 * k + r)
    rel = max(abs(a * (4 * math.log(M) - 2 * math.log(a) + 1) - 1.0)
              for M in range(2, 1025) for a in [alpha_star(M)])
    ok = abs(theta - 0.3017396777) <= 1e-7 and abs(c - 5.11097109814) <= 1e-6 and rel <= 1e-9
    report(8, ok, f"theta={theta:.10f}, c={c:.11f}, max defining-relation residual={rel:.1e}")


# ---------------------------------------------------------------------------- 9


def test_c09_truncation(report):
    rng = np.random.default_rng(909)
    n = 100_000
    Ms = rng.integers(2, 33, size=n)
    worst_sum = worst_box = worst_sigma = 0.0
    batch = {}
    for i in range(n):
        M = int(Ms[i])
        q = rng.dirichlet(np.ones(M))
        a = rng.uniform() / M
        b = 1.0 / M + rng.uniform() * (1.0 - 1.0 / M)
        res = truncate_project(q, a, b)
        p = res.projected
        worst_sum = max(worst_sum, abs(p.sum() - 1.0))
        worst_box = max(worst_box, a - p.min(), p.max() - b)
        batch.setdefault(M, []).append((q, a, b, res.sigma))
    for M, rows in batch.items():
        Q = np.array([r[0] for r in rows])
        ref = bisection_sigma(Q, np.array([r[1] for r in rows]), np.array([r[2] for r in rows]))
        got = np.array([r[3] for r in rows])
        worst_sigma = max(worst_sigma, float(np.max(np.abs(got - ref) / ref)))
    ok = worst_sum <= 1e-10 and worst_box <= 0.0 and worst_sigma <= 1e-9
    report(9, ok, f"{n} triples, max|sum-1|={worst_sum:.1e}, box violation={worst_box:.1e}, "
                  f"max sigma rel. error vs bisection={worst_sigma:.1e}")


# --------------------------------------------------------------------------- 10


def test_c10_bandit(report):
    rng = make_rng(1010)
    n = 100_000
    l = np.array([0.8, -0.3, 0.45, 0.1])
    z_max = 0.0
    for K, p in ((1, np.array([0.1, 0.4, 0.3, 0.2])), (2, np.array([0.2, 0.3, 0.25, 0.25]))):
        b = semi_bandit_policy(p, K)
        est = np.empty((n, 4))
        for i in range(n):
            est[i] = bandit_estimate(l, b, sample_arms(b, rng))
        se = est.std(axis=0, ddof=1) / math.sqrt(n)
        z_max = max(z_max, float(np.max(np.abs(est.mean(axis=0) - l) / se)))
    per_round = {}
    for T in (1000, 10_000):
        vals = []
        for seed in range(5):
            s = drift_env(T, 4, 1e-4, seed=1000 + seed)
            run = run_bandit(s, BanditConfig(), seed=seed)
            vals.append(run.regret_against(s.losses, s.competitor) / T)
        per_round[T] = float(np.mean(vals))
    ok = z_max <= 3.0 and per_round[10_000] < per_round[1000]
    report(10, ok, f"max |mean - l|/SE = {z_max:.2f} (<= 3), regret/T: "
                   f"T=1e3 {per_round[1000]:.4f} -> T=1e4 {per_round[10_000]:.4f}")


# --------------------------------------------------------------------------- 11


def test_c11_discounted(report):
    alpha, beta0, T, M = 0.99, 1.0, 1000, 4
    worst_plain = worst_scaled = -math.inf
    for seed in range(10):
        s = dynamic_env(T, M, 3.0, seed=1100 + seed)
        r = discount_rescale(s, alpha, beta0)
        for spec in (LearnerSpec("mapped", M, path_budget=3.0), LearnerSpec("utew", M)):
            traj = kernels.run_trajectory(spec, r.losses)
            bound = kernels.trajectory_bounds(spec, traj.decisions, r.losses,
                                              path_prefix(s.competitor))[-1]
            disc = discounted_regret(s.losses, traj.decisions, s.competitor, alpha, beta0)
            worst_plain = max(worst_plain, disc - bound)
            worst_scaled = max(worst_scaled, disc - beta0 * alpha ** (T - 1) * bound)
    ok = worst_plain <= TOL and worst_scaled <= TOL
    report(11, ok, f"20 runs, max(discounted regret - rescaled bound) = {worst_plain:.3g}; "
                   f"with the beta0*alpha^(T-1) factor = {worst_scaled:.3g}")
