from fractions import Fraction
from itertools import combinations
from math import comb, prod

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from weingarten.errors import DomainError
from weingarten.symfunc import (
    campaign_lemma7, campaign_lemma9, campaign_newton_maclaurin, campaign_sigma_oracle, deleted_elementary,
    elementary, in_gamma, lemma7_delta_gap, lemma7_equality_family, lemma7_gap, lemma7_sides,
    matrixfn_second_derivative, matrixfn_second_derivative_fd, newton_maclaurin_gap, sample_gamma, sigma,
    sigma_bruteforce, sigma_partial, sigma_partials, sigma_second_partial, sigma_second_partials,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(n_min=1, n_max=8):
    return st.integers(n_min, n_max).flatmap(lambda n: arrays(float, n, elements=finite))


def exact_sigma(lam, m):
    lam = [Fraction(x) for x in lam]
    return sum((prod(c, start=Fraction(1)) for c in combinations(lam, m)), Fraction(0))


# --- sigma ---------------------------------------------------------------------

def test_sigma_ones():
    assert sigma([1, 1, 1], 2) == 3


def test_sigma_hand():
    assert sigma([1, 2, 3], 2) == 11


def test_sigma_zero_order_is_one():
    assert sigma([4.0, -2.0], 0) == 1.0


def test_sigma_order_out_of_range():
    with pytest.raises(DomainError):
        sigma([1.0, 2.0], 3)


def test_sigma_rejects_nan():
    with pytest.raises(DomainError):
        sigma([1.0, np.nan], 1)


@settings(max_examples=200, deadline=None)
@given(vectors(1, 7))
def test_sigma_matches_exact_rational_enumeration(lam):
    e = elementary(lam)
    scale = elementary(np.abs(lam))
    for m in range(len(lam) + 1):
        exact = float(exact_sigma(lam, m))
        assert abs(e[m] - exact) <= 1e-12 * max(scale[m], 1e-300) + 1e-300


def test_bruteforce_oracle_random_vectors():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((200, 10))
    rel = np.abs(elementary(x) - sigma_bruteforce(x)) / elementary(np.abs(x))
    assert rel.max() <= 1e-12


@settings(max_examples=100, deadline=None)
@given(vectors(2, 6), st.randoms(use_true_random=False))
def test_permutation_invariance(lam, rnd):
    perm = list(range(len(lam)))
    rnd.shuffle(perm)
    shuffled = lam[perm]
    # the recurrence is order-dependent in rounding only
    scale = elementary(np.abs(lam))
    assert np.all(np.abs(elementary(lam) - elementary(shuffled)) <= 1e-12 * scale + 1e-300)
    for k in range(1, len(lam) + 1):
        assert in_gamma(lam, k) == in_gamma(shuffled, k) or np.any(
            np.abs(elementary(lam)[1:k + 1]) <= 1e-12 * scale[1:k + 1])


def test_batched_shapes():
    x = np.ones((3, 4, 5))
    assert elementary(x).shape == (3, 4, 6)
    assert np.all(sigma(x, 2) == 10)


# --- partials ------------------------------------------------------------------

def test_sigma_partial_hand():
    assert sigma_partial([1, 2, 3], 2, 0) == 5


@pytest.mark.parametrize("n,k", [(3, 2), (5, 3), (6, 6), (4, 1)])
def test_sigma_partial_symmetric_point(n, k):
    for i in range(n):
        assert sigma_partial(np.ones(n), k, i) == comb(n - 1, k - 1)


@settings(max_examples=100, deadline=None)
@given(vectors(2, 8))
def test_euler_identity(lam):
    n = len(lam)
    scale = elementary(np.abs(lam))
    for m in range(1, n + 1):
        lhs = np.sum(sigma_partials(lam, m) * lam)
        assert abs(lhs - m * sigma(lam, m)) <= 1e-12 * m * scale[m] + 1e-300


@settings(max_examples=100, deadline=None)
@given(vectors(2, 8))
def test_deletion_identity(lam):
    e = elementary(lam)
    d = deleted_elementary(lam)
    scale = elementary(np.abs(lam))
    for i in range(len(lam)):
        for m in range(1, len(lam)):
            assert abs(e[m] - (d[i, m] + lam[i] * d[i, m - 1])) <= 1e-12 * scale[m] + 1e-300


def test_second_partial_hand():
    assert sigma_second_partial([1, 2, 3], 2, 0, 1) == 1
    assert sigma_second_partial([2, 3, 4, 5], 3, 1, 3) == 6


def test_second_partial_diagonal_vanishes():
    lam = np.array([0.3, -1.2, 2.0, 0.7])
    for m in range(2, 5):
        for p in range(4):
            assert sigma_second_partial(lam, m, p, p) == 0.0
    H = sigma_second_partials(lam, 3)
    assert np.all(np.diag(H) == 0)
    assert np.allclose(H, H.T)


def test_second_partial_finite_difference():
    rng = np.random.default_rng(3)
    lam = rng.standard_normal(5)
    h = 1e-5
    H = sigma_second_partials(lam, 3)
    for p in range(5):
        e = np.zeros(5)
        e[p] = h
        fd = (sigma_partials(lam + e, 3) - sigma_partials(lam - e, 3)) / (2 * h)
        assert np.allclose(fd, H[p], atol=1e-8)


# --- cone ----------------------------------------------------------------------

def test_in_gamma_examples():
    assert in_gamma([1, 1, 1], 3)
    assert not in_gamma([2, 2, -1], 2)
    assert in_gamma([3, 1, -1], 1)
    assert not in_gamma([3, 1, -1], 2)


def test_sample_gamma_postcondition():
    for seed in range(20):
        assert in_gamma(sample_gamma(3, 3, seed), 3)


def test_sample_gamma_reproducible():
    a = sample_gamma(5, 2, 1234)
    b = sample_gamma(5, 2, 1234)
    assert np.array_equal(a, b)


def test_sample_gamma_many_seeds():
    pts = np.array([sample_gamma(4, 2, s) for s in range(10_000)])
    e = elementary(pts)
    assert np.all(e[:, 1] > 0) and np.all(e[:, 2] > 0)


def test_sample_gamma_batch_and_margin():
    x = sample_gamma(6, 4, 7, scale=3.0, size=5000)
    e = elementary(x)
    thresholds = 1e-6 * 3.0 ** np.arange(1, 5)
    assert np.all(e[:, 1:5] >= thresholds)


def test_sample_gamma_hits_boundary_and_interior():
    x = sample_gamma(5, 3, 11, size=5000)
    e = elementary(x)
    near = np.min(e[:, 1:4] / elementary(np.abs(x))[:, 1:4], axis=1) < 1e-4
    assert 0.05 < near.mean() < 0.995


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.data())
def test_maclaurin_chain(n, data):
    k = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2 ** 32 - 1))
    lam = sample_gamma(n, k, seed)
    e = elementary(lam)
    p = [e[j] / comb(n, j) for j in range(k + 1)]
    roots = [p[j] ** (1.0 / j) for j in range(1, k + 1)]
    for a, b in zip(roots[:-1], roots[1:]):
        assert a >= b * (1 - 1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.data())
def test_dominant_entry_bound(n, data):
    k = data.draw(st.integers(1, n))
    lam = np.sort(sample_gamma(n, k, data.draw(st.integers(0, 2 ** 32 - 1))))[::-1]
    lhs = lam[0] * sigma_partial(lam, k, 0)
    assert lhs >= (k / n) * sigma(lam, k) * (1 - 1e-10) - 1e-12


# --- Newton-MacLaurin ----------------------------------------------------------

def test_newton_maclaurin_symmetric_point():
    for m in range(1, 5):
        assert newton_maclaurin_gap(np.ones(5), m) == pytest.approx(0.0, abs=1e-15)


def test_newton_maclaurin_hand():
    assert newton_maclaurin_gap([1, 2, 3], 1) == pytest.approx(1.0 / 3.0, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(vectors(2, 8))
def test_newton_maclaurin_nonnegative(lam):
    n = len(lam)
    e = elementary(lam)
    for m in range(1, n):
        p = [e[j] / comb(n, j) for j in (m - 1, m, m + 1)]
        scale = max(1.0, p[1] ** 2, abs(p[0] * p[2]))
        assert newton_maclaurin_gap(lam, m) >= -1e-12 * scale


# --- lemma7 --------------------------------------------------------------------

def test_lemma7_hand_values():
    assert lemma7_gap([1, 1, 1], [1, 0, 0], 2, 1) == pytest.approx(2.0 / 9.0, rel=1e-14)
    lhs, rhs = lemma7_sides([1, 1, 1], [1, 0, 0], 2, 1)
    assert lhs == pytest.approx(0.0, abs=1e-15)
    assert rhs == pytest.approx(-2.0 / 9.0, rel=1e-14)
    assert lemma7_gap([1, 1, 1], [1, 1, 1], 2, 1) == pytest.approx(0.0, abs=1e-14)


def test_lemma7_delta_examples():
    for d in (0.1, 1.0, 10.0):
        assert lemma7_delta_gap([1, 1, 1], [0, 0, 0], 2, 1, d) == 0.0
    assert lemma7_delta_gap([1, 1, 1], [1, 1, 1], 2, 1, 1.0) >= -1e-14


def test_lemma7_equality_family():
    assert lemma7_equality_family() <= 1e-9


def test_lemma7_requires_admissible_W():
    with pytest.raises(DomainError):
        lemma7_gap([1.0, -3.0, 0.5], [1, 0, 0], 2, 1)
    with pytest.raises(DomainError):
        lemma7_gap([1.0, 1.0, 1.0], [1, 0, 0], 1, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.data())
def test_lemma7_random(n, data):
    k = data.draw(st.integers(2, n))
    l = data.draw(st.integers(1, k - 1))
    W = sample_gamma(n, k, data.draw(st.integers(0, 2 ** 32 - 1)))
    w = np.array(data.draw(st.lists(finite, min_size=n, max_size=n)))
    lhs, rhs = lemma7_sides(W, w, k, l)
    assert lhs - rhs >= -1e-9 * (abs(lhs) + abs(rhs)) - 1e-300


# --- matrix functions -----------------------------------------------------------

def test_matrixfn_diagonal_B_sigma2():
    lam = np.array([3.0, 1.0, -0.5, 2.2])
    B = np.diag([0.4, -1.0, 2.0, 0.3])
    H = sigma_second_partials(lam, 2)
    expect = np.einsum("pq,p,q->", H, np.diag(B), np.diag(B))
    assert matrixfn_second_derivative(lam, B, "sigma_k", 2) == pytest.approx(expect, rel=1e-12)


def test_matrixfn_sigma1_is_linear():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((4, 4))
    B = B + B.T
    assert matrixfn_second_derivative([4.0, 2.0, 0.5, -1.0], B, "sigma_k", 1) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("fn,k", [("sigma_k", 2), ("sigma_k", 3), ("sum_exp", None), ("sum_squares", None)])
def test_matrixfn_against_fd(fn, k):
    rng = np.random.default_rng(5)
    lam = np.array([2.5, 1.1, 0.3, -0.9])
    B = rng.standard_normal((4, 4))
    B = 0.5 * (B + B.T)
    exact = matrixfn_second_derivative(lam, B, fn, k)
    fd = matrixfn_second_derivative_fd(lam, B, fn, k)
    assert abs(exact - fd) <= 1e-5 * max(1.0, abs(exact))


def test_matrixfn_sum_squares_closed_form():
    # d^2/dt^2 tr((A + tB)^2) = 2 tr(B^2)
    rng = np.random.default_rng(2)
    B = rng.standard_normal((3, 3))
    B = B + B.T
    assert matrixfn_second_derivative([1.0, 2.0, 3.0], B, "sum_squares") == pytest.approx(2 * np.sum(B * B))


def test_matrixfn_separation_guard():
    with pytest.raises(DomainError):
        matrixfn_second_derivative([1.0, 1.0 + 1e-6, 3.0], np.eye(3), "sum_exp")


# --- campaigns -----------------------------------------------------------------

def test_sigma_oracle_campaign_small():
    rep = campaign_sigma_oracle(0, samples=500, n_values=range(2, 9))
    assert rep.passed and rep.min_gap >= -1e-12


def test_newton_maclaurin_campaign_small():
    rep = campaign_newton_maclaurin(0, samples=5000, n_values=(2, 5))
    assert rep.passed


def test_lemma7_campaign_small():
    rep = campaign_lemma7(3, samples=2000, n_values=(2, 3, 4))
    assert rep.passed
    assert rep.samples == 2000 * sum(comb(k - 1, 1) for n in (2, 3, 4) for k in range(2, n + 1))


def test_lemma9_campaign_small():
    rep = campaign_lemma9(0, samples=50)
    assert rep.passed


def test_campaign_thread_independence():
    a = campaign_lemma7(9, samples=9000, n_values=(3,), threads=1)
    b = campaign_lemma7(9, samples=9000, n_values=(3,), threads=4)
    assert a.to_dict() == b.to_dict()
