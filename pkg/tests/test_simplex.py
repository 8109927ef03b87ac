import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from trackexp.errors import InfeasibleBoxError, InfiniteDivergenceError, SimplexError
from trackexp.oracle import bisection_sigma
from trackexp.simplex import (
    adaptive_deviation_norm,
    as_distribution,
    entropy,
    half_range,
    kl_divergence,
    mix_uniform,
    one_hot,
    total_variation,
    truncate_project,
    uniform,
    unmix_uniform,
)


def _dist(n_min=2, n_max=8):
    # entries are zero or at least 1e-9; subnormal weights are out of scope
    entry = st.one_of(st.just(0.0), st.floats(1e-9, 1.0))
    raw = arrays(np.float64, st.integers(n_min, n_max), elements=entry)
    return raw.filter(lambda v: v.sum() > 1e-3).map(lambda v: v / v.sum())


def test_as_distribution_renormalizes_small_drift():
    p = as_distribution([0.5, 0.5 + 5e-8])
    assert abs(p.sum() - 1.0) < 1e-15


@pytest.mark.parametrize("bad", [[1.0], [0.5, 0.6], [1.2, -0.2], [np.nan, 1.0]])
def test_as_distribution_rejects(bad):
    with pytest.raises(SimplexError):
        as_distribution(bad)


def test_entropy_examples():
    assert entropy(uniform(4)) == pytest.approx(math.log(4), abs=1e-12)
    assert entropy([1.0, 0.0, 0.0]) == 0.0
    assert entropy([0.5, 0.25, 0.25]) == pytest.approx(1.5 * math.log(2), abs=1e-12)


def test_kl_examples():
    p = np.array([0.2, 0.3, 0.5])
    assert kl_divergence(p, p) == 0.0
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert kl_divergence([0.75, 0.25], [0.5, 0.5]) == pytest.approx(
        0.75 * math.log(1.5) + 0.25 * math.log(0.5), abs=1e-12)
    with pytest.raises(InfiniteDivergenceError):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_total_variation_examples():
    assert total_variation([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert total_variation([1, 0], [0, 1]) == 1.0
    assert total_variation([0.6, 0.4], [0.1, 0.9]) == pytest.approx(0.5)


@given(_dist(), st.data())
def test_divergence_properties(p, data):
    q = data.draw(_dist(p.size, p.size))
    assert -1e-12 <= entropy(p) <= math.log(p.size) + 1e-12
    assert total_variation(p, q) == pytest.approx(np.maximum(p - q, 0).sum(), abs=1e-12)
    if np.all(q > 0):
        assert kl_divergence(p, q) >= -1e-12


def test_half_range_examples():
    assert half_range([0, 1, 3]) == 1.5
    assert half_range([5, 5, 5]) == 0.0
    assert half_range([-2, 7]) == 4.5


@given(arrays(np.float64, 5, elements=st.floats(-100, 100)), st.floats(-50, 50),
       st.floats(-10, 10))
def test_half_range_translation_and_scale(l, c, lam):
    base = half_range(l)
    assert half_range(l + c) == pytest.approx(base, abs=1e-9)
    assert half_range(lam * l) == pytest.approx(abs(lam) * base, rel=1e-9, abs=1e-9)


def test_adaptive_deviation_norm_examples():
    assert adaptive_deviation_norm(np.ones((7, 3))) == 0.0
    T = 25
    L = np.tile([1.0, -1.0], (T, 1))
    assert adaptive_deviation_norm(L) == pytest.approx(math.sqrt(T))
    L = np.array([[0.0, 3.0], [2.0, 2.0], [-2.0, 2.0]])
    assert adaptive_deviation_norm(L) == pytest.approx(2.5)


def test_truncation_examples():
    r = truncate_project([0.5, 0.3, 0.2], 0.1, 0.6)
    assert r.sigma == pytest.approx(1.0)
    np.testing.assert_allclose(r.projected, [0.5, 0.3, 0.2], atol=1e-15)

    r = truncate_project([0.7, 0.2, 0.1], 0.15, 0.5)
    assert r.sigma == pytest.approx(5 / 3, rel=1e-12)
    np.testing.assert_allclose(r.projected, [0.5, 1 / 3, 1 / 6], atol=1e-12)
    assert r.clipped_high == (0,) and r.clipped_low == ()

    r = truncate_project([0.9, 0.1], 0.5, 0.5)
    np.testing.assert_allclose(r.projected, [0.5, 0.5])


def test_truncation_infeasible_box():
    with pytest.raises(InfeasibleBoxError):
        truncate_project([0.5, 0.5], 0.6, 0.9)
    with pytest.raises(InfeasibleBoxError):
        truncate_project([0.2, 0.3, 0.5], 0.0, 0.3)


def test_truncation_zero_entries():
    r = truncate_project([1.0, 0.0, 0.0], 0.1, 1.0)
    np.testing.assert_allclose(r.projected, [0.8, 0.1, 0.1], atol=1e-15)
    r = truncate_project([0.6, 0.4, 0.0], 0.0, 0.5)
    np.testing.assert_allclose(r.projected, [0.5, 0.5, 0.0], atol=1e-15)


@settings(max_examples=300)
@given(_dist(2, 10), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_truncation_contract(q, u, v):
    M = q.size
    a = u / M
    b = 1.0 / M + v * (1.0 - 1.0 / M)
    n_pos = int(np.count_nonzero(q))
    if (M - n_pos) * a + n_pos * b < 1.0 - 1e-12:
        # zero entries sit at a, so the positive ones cannot fill the box
        with pytest.raises(InfeasibleBoxError):
            truncate_project(q, a, b)
        return
    r = truncate_project(q, a, b)
    p = r.projected
    assert abs(p.sum() - 1.0) <= 1e-10
    assert np.all(p >= a - 1e-15) and np.all(p <= b + 1e-15)
    free = [i for i in range(M) if i not in r.clipped_low and i not in r.clipped_high]
    np.testing.assert_allclose(p[free], r.sigma * q[free], atol=1e-10)
    # idempotent
    again = truncate_project(p, a, b)
    assert again.sigma == pytest.approx(1.0, rel=1e-9) or not free
    np.testing.assert_allclose(again.projected, p, atol=1e-12)
    # matches the bisection reference; on a point box every sigma is valid
    if a * M < 1.0 - 1e-12:
        assert r.sigma == pytest.approx(bisection_sigma(q, a, b), rel=1e-9)


@given(_dist())
def test_truncation_trivial_box_is_identity(q):
    np.testing.assert_allclose(truncate_project(q, 0.0, 1.0).projected, q, atol=1e-15)


def test_mix_examples():
    p = np.array([1.0, 0.0])
    np.testing.assert_allclose(mix_uniform(p, 0.0), p)
    np.testing.assert_allclose(mix_uniform(p, 1.0), [0.5, 0.5])
    np.testing.assert_allclose(mix_uniform(p, 0.5), [0.75, 0.25])
    np.testing.assert_allclose(unmix_uniform([0.75, 0.25], 0.5), p, atol=1e-15)
    np.testing.assert_allclose(unmix_uniform(p, 0.0), p)


def test_unmix_rejects_below_floor():
    with pytest.raises(SimplexError):
        unmix_uniform([0.9, 0.1], 0.5)


@given(_dist(), st.floats(0.0, 0.99))
def test_mix_unmix_roundtrip(p, alpha):
    d = mix_uniform(p, alpha)
    M = p.size
    assert d.min() >= alpha / M - 1e-15
    assert d.max() <= 1 - alpha + alpha / M + 1e-15
    np.testing.assert_allclose(unmix_uniform(d, alpha), p, atol=1e-12 / (1 - alpha))


def test_one_hot():
    np.testing.assert_array_equal(one_hot(1, 3), [0, 1, 0])
