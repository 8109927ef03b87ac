import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackexp.adversaries import dynamic_env, two_expert_env
from trackexp.errors import PreconditionError
from trackexp.learners import MappedLearner, UniformMixLearner
from trackexp.oracle import replay_with_checks
from trackexp.scenarios import (
    FULL_BANDIT,
    SEMI_BANDIT,
    BanditConfig,
    FloorConstraint,
    OpinionMatrix,
    bandit_estimate,
    bandit_learner,
    discount_rescale,
    discounted_regret,
    floor_transform,
    noisy_wrapper,
    run_bandit,
    sample_arms,
    sample_expert,
    semi_bandit_policy,
    surrogate_losses,
)
from trackexp.adversaries import make_rng


def test_surrogate_examples():
    g = np.array([1.0, 2.0, -3.0])
    np.testing.assert_array_equal(surrogate_losses(OpinionMatrix(np.eye(3), g)), g)
    np.testing.assert_array_equal(surrogate_losses(OpinionMatrix(np.eye(3), np.zeros(3))), 0.0)
    om = OpinionMatrix(np.array([[1, 0, 0.5], [0, 1, 0.5]]), [1, 2])
    np.testing.assert_allclose(surrogate_losses(om), [1, 2, 1.5])


def test_surrogate_linearity():
    rng = np.random.default_rng(0)
    om = OpinionMatrix(rng.normal(size=(4, 6)), rng.normal(size=4))
    p = rng.dirichlet(np.ones(6))
    assert om.gradient @ om.combine(p) == pytest.approx(p @ surrogate_losses(om))


def test_opinion_dimension_mismatch():
    with pytest.raises(ValueError):
        OpinionMatrix(np.eye(3), np.ones(2))


def test_sample_expert_examples():
    rng = make_rng(1)
    assert all(sample_expert([0, 0, 1.0], rng) == 2 for _ in range(100))
    n = 100_000
    draws = sample_expert(np.full(4, 0.25), rng, size=n)
    freq = np.bincount(draws, minlength=4) / n
    assert np.all(np.abs(freq - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / n))
    draws = sample_expert([0.9, 0.1], rng, size=n)
    assert abs(np.mean(draws == 0) - 0.9) <= 0.01


def test_noise_identity_and_mean():
    s = two_expert_env(50, seed=2)
    n = noisy_wrapper(s, "gaussian", 0.0)
    np.testing.assert_array_equal(n.losses, s.losses)
    np.testing.assert_array_equal(n.true_losses, s.losses)
    sigma = 0.5
    draws = np.stack([noisy_wrapper(s, "gaussian", sigma, seed=k).losses for k in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0) - s.losses) <= 3 * sigma / 100)
    u = noisy_wrapper(s, "uniform", 0.2, seed=1)
    assert np.all(np.abs(u.losses - s.losses) <= 0.2)
    with pytest.raises(ValueError):
        noisy_wrapper(s, "cauchy", 1.0)


def test_noisy_regret_against_true_losses_within_bound():
    ratios = []
    for seed in range(20):
        s = noisy_wrapper(dynamic_env(400, 4, 1.0, seed=seed), "gaussian", 0.3, seed=seed)
        ledger, _ = replay_with_checks(MappedLearner(4, 1.0), s, checks=False)
        d = ledger.meta["decisions"]
        regret = float(np.einsum("tm,tm->", s.true_losses, d - s.competitor))
        assert regret == pytest.approx(ledger.final_regret, abs=1e-9)
        ratios.append(regret - ledger.final_bound)
    assert np.mean(ratios) <= 0.0


def test_floor_examples():
    np.testing.assert_allclose(floor_transform(FloorConstraint([0, 0]), [0.3, 0.7]), [0.3, 0.7])
    np.testing.assert_allclose(floor_transform(FloorConstraint([0.2, 0.2]), [1, 0]), [0.8, 0.2])
    with pytest.raises(ValueError):
        FloorConstraint([0.6, 0.5])
    with pytest.raises(ValueError):
        FloorConstraint([-0.1, 0.2])


def test_floor_regret_scaling_identity():
    s = dynamic_env(300, 3, 2.0, seed=8)
    f = FloorConstraint([0.1, 0.05, 0.15])
    learner = UniformMixLearner(3, 2.0, horizon=300)
    q = np.empty((300, 3))
    for t, l in enumerate(s.losses):
        q[t] = learner.decision
        learner.step(l)
    p = np.array([floor_transform(f, row) for row in q])
    p_star = np.array([floor_transform(f, row) for row in s.competitor])
    outer = float(np.einsum("tm,tm->", s.losses, p - p_star))
    inner = float(np.einsum("tm,tm->", s.losses, q - s.competitor))
    assert outer == pytest.approx(f.slack * inner, abs=1e-9)
    assert np.all(p >= f.vector - 1e-15)


def test_bandit_estimate_examples():
    l = np.array([0.3, -0.2, 0.9])
    np.testing.assert_allclose(bandit_estimate(l, np.ones(3), [0, 1, 2]), l)
    np.testing.assert_allclose(bandit_estimate([0.6, 0.4], [0.5, 0.5], [0]), [1.2, 0.0])
    with pytest.raises(PreconditionError):
        bandit_estimate(l, [0.0, 0.5, 0.5], [0])


@pytest.mark.parametrize("K", [1, 2])
def test_bandit_estimate_unbiased(K):
    rng = make_rng(3)
    l = np.array([0.5, -1.0, 2.0, 0.25])
    p = np.array([0.1, 0.4, 0.3, 0.2]) if K == 1 else np.array([0.2, 0.3, 0.25, 0.25])
    b = semi_bandit_policy(p, K)
    n = 100_000
    acc = np.zeros(4)
    for _ in range(n):
        acc += bandit_estimate(l, b, sample_arms(b, rng))
    se = np.sqrt((l ** 2 / b) / n)
    assert np.all(np.abs(acc / n - l) <= 4 * se)


def test_semi_bandit_policy_examples():
    p = np.array([0.3, 0.7])
    np.testing.assert_allclose(semi_bandit_policy(p, 1), p)
    np.testing.assert_allclose(semi_bandit_policy(np.full(4, 0.25), 4), np.ones(4))
    np.testing.assert_allclose(semi_bandit_policy(np.full(4, 0.25), 2), np.full(4, 0.5))
    with pytest.raises(PreconditionError):
        semi_bandit_policy([0.6, 0.2, 0.2], 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6), st.data())
def test_sample_arms_distinct_with_exact_marginals(seed, M, data):
    K = data.draw(st.integers(1, M))
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(M))
    p = np.minimum(p, 1.0 / K)
    # water-fill so that no entry exceeds 1/K
    for _ in range(50):
        p = np.minimum(p / p.sum(), 1.0 / K)
    p /= p.sum()
    if p.max() > 1.0 / K + 1e-12:
        return
    b = semi_bandit_policy(p, K)
    arms = sample_arms(b, make_rng(seed))
    assert len(arms) == K and len(set(arms.tolist())) == K


def test_bandit_config_validation():
    with pytest.raises(ValueError):
        BanditConfig(2, FULL_BANDIT)
    with pytest.raises(ValueError):
        BanditConfig(1, "partial")
    with pytest.raises(ValueError):
        BanditConfig(3, SEMI_BANDIT).validate_for(2)


def test_bandit_learner_choice():
    assert isinstance(bandit_learner(4, 100, BanditConfig()), UniformMixLearner)
    tl = bandit_learner(4, 100, BanditConfig(2, SEMI_BANDIT))
    assert tl.box_high == 0.5


def test_run_bandit_deterministic_and_sublinear():
    s = dynamic_env(2000, 4, 0.0, seed=1)
    a = run_bandit(s, BanditConfig(), seed=9)
    b = run_bandit(s, BanditConfig(), seed=9)
    np.testing.assert_array_equal(a.decisions, b.decisions)
    assert a.regret_against(s.losses, s.competitor) < 0.5 * s.T
    semi = run_bandit(s, BanditConfig(2, SEMI_BANDIT), seed=9)
    assert semi.decisions.max() <= 0.5 + 1e-12
    assert all(len(x) == 2 for x in semi.selections)


def test_discount_examples():
    s = two_expert_env(5, seed=0)
    np.testing.assert_array_equal(discount_rescale(s, 1.0).losses, s.losses)
    np.testing.assert_allclose(discount_rescale(s, 0.5).losses[2], 4 * s.losses[2])
    with pytest.raises(ValueError):
        discount_rescale(s, 0.0)


def test_discount_composes():
    s = two_expert_env(40, seed=1)
    ab = discount_rescale(discount_rescale(s, 0.9), 0.8)
    direct = discount_rescale(s, 0.72)
    np.testing.assert_allclose(ab.losses, direct.losses, rtol=1e-12)
    assert ab.meta["discount_alpha"] == pytest.approx(0.72)


def test_discounted_regret_bounded_by_rescaled_game():
    alpha, beta0 = 0.99, 1.0
    for seed in range(5):
        s = dynamic_env(300, 4, 1.0, seed=seed)
        r = discount_rescale(s, alpha, beta0)
        ledger, _ = replay_with_checks(MappedLearner(4, 1.0), r, checks=False)
        d = ledger.meta["decisions"]
        T = s.T
        disc = discounted_regret(s.losses, d, s.competitor, alpha, beta0)
        # beta_{T-t} l_t = beta0 alpha^(T-1) * (alpha^(1-t) l_t)
        scale = beta0 * alpha ** (T - 1)
        assert disc == pytest.approx(scale * ledger.final_regret, rel=1e-9, abs=1e-9)
        assert disc <= scale * ledger.final_bound + 1e-9
