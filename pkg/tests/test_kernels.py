import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackexp import kernels
from trackexp.learners import MIN_BIASED, VARIANCE, LearnerSpec
from trackexp.simplex import truncate_project

compiled = pytest.mark.skipif(kernels.BACKEND != "compiled",
                              reason="compiled extension not built")

SPECS = [
    LearnerSpec("uniform_mix", 3, VARIANCE, horizon=600),
    LearnerSpec("uniform_mix", 3, MIN_BIASED, horizon=600, path_budget=2.0),
    LearnerSpec("truncated", 3, MIN_BIASED, box_low=0.0, box_high=1.0),
    LearnerSpec("truncated", 3, VARIANCE, box_low=0.05, box_high=0.7, path_budget=1.0),
    LearnerSpec("mapped", 3, path_budget=2.0),
    LearnerSpec("mapped", 3, VARIANCE, path_budget=0.0),
    LearnerSpec("doubling", 3),
    LearnerSpec("doubling", 3, target_path=3.0),
    LearnerSpec("utew", 3),
    LearnerSpec("utew", 3, VARIANCE),
]


def _losses(seed, T=600, M=3):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(T, M)) * rng.uniform(0.01, 5.0, size=(T, 1))


@compiled
@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.rate_mode}")
def test_backend_parity(spec):
    L = _losses(1)
    a = kernels.run_trajectory(spec, L, backend="python")
    b = kernels.run_trajectory(spec, L, backend="compiled")
    assert b.backend == "compiled"
    np.testing.assert_allclose(b.decisions, a.decisions, atol=1e-12, rtol=0)
    np.testing.assert_array_equal(np.isnan(a.etas), np.isnan(b.etas))
    ok = ~np.isnan(a.etas)
    np.testing.assert_allclose(b.etas[ok], a.etas[ok], rtol=1e-10)


@compiled
def test_unsupported_specs_fall_back():
    spec = LearnerSpec("mapped", 3, alpha="hat", path_budget=1.0)
    assert not kernels.compiled_supports(spec)
    assert kernels.run_trajectory(spec, _losses(2, 20)).backend == "python"
    with pytest.raises(ValueError):
        kernels.run_trajectory(spec, _losses(2, 20), backend="compiled")


@compiled
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.floats(0, 1), st.floats(0, 1))
def test_truncation_sigma_twin(seed, M, u, v):
    from trackexp import _kernels

    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(M))
    a = u / M
    b = 1.0 / M + v * (1.0 - 1.0 / M)
    ref = truncate_project(q, a, b)
    got = _kernels.truncation_sigma(q, a, b)
    if a * M < 1.0 - 1e-12:
        assert got == pytest.approx(ref.sigma, rel=1e-12)
    np.testing.assert_allclose(np.clip(got * q, a, b).sum(), 1.0, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.rate_mode}")
def test_trajectory_bounds_match_learner(spec):
    L = _losses(3, 200)
    learner = spec.build()
    expected = np.empty(200)
    for t in range(200):
        learner.step(L[t])
        expected[t] = learner.bound(0.0)
    traj = kernels.run_trajectory(spec, L, backend="python")
    got = kernels.trajectory_bounds(spec, traj.decisions, L, 0.0)
    np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-12)


def test_realized_regret_and_deviation():
    L = np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
    D = np.full((3, 2), 0.5)
    np.testing.assert_allclose(kernels.realized_regret(D, L, [1.0, 0.0]), [0.5, 0.0, 0.0])
    np.testing.assert_allclose(kernels.deviation_prefix(L), np.sqrt([0.25, 0.5, 0.5]))


def test_run_trajectory_rejects_bad_input():
    spec = LearnerSpec("mapped", 2)
    with pytest.raises(ValueError):
        kernels.run_trajectory(spec, np.zeros((5, 3)))
    with pytest.raises(ValueError):
        kernels.run_trajectory(spec, np.zeros((0, 2)))
    with pytest.raises(ValueError):
        kernels.run_trajectory(spec, np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        kernels.run_trajectory(spec, np.zeros((2, 2)), backend="fortran")
