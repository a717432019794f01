import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sketchlab import InvalidArgumentError, RandomSource
from sketchlab.chaos import (
    BoundTriple,
    DeviationSummary,
    bound_triple,
    deviation_cross,
    deviation_single,
    deviation_sum,
    diag_term,
    hanson_wright_tail,
    lp_norm_estimate,
    mc_deviation_study,
    offdiag_term,
    quadratic_mean,
    single_set_bound,
    sum_tail_bound,
    tail_bound,
    trial_xis,
)
from sketchlab.geometry import ComplexityProfile


# independent naive oracles --------------------------------------------------

def naive_cross(Ms, Ns, xi):
    best = 0.0
    for M in Ms:
        for N in Ns:
            val = 0.0
            for i in range(M.shape[0]):
                Mx = sum(M[i, j] * xi[j] for j in range(len(xi)))
                Nx = sum(N[i, j] * xi[j] for j in range(len(xi)))
                val += Mx * Nx
            tr = sum(M[i, j] * N[i, j] for i in range(M.shape[0]) for j in range(M.shape[1]))
            best = max(best, abs(val - tr))
    return best


def naive_offdiag(Ms, Ns, xi):
    best = 0.0
    n = len(xi)
    for M in Ms:
        for N in Ns:
            s = 0.0
            for j in range(n):
                for k in range(n):
                    if j != k:
                        s += xi[j] * xi[k] * float(np.dot(M[:, j], N[:, k]))
            best = max(best, abs(s))
    return best


def naive_diag(Ms, Ns, xi):
    best = 0.0
    for M in Ms:
        for N in Ns:
            s = sum((xi[j] ** 2 - 1) * float(np.dot(M[:, j], N[:, j])) for j in range(len(xi)))
            best = max(best, abs(s))
    return best


def rand_sets(seed, a, b, m, n):
    gen = RandomSource(seed, 0).generator()
    return gen.standard_normal((a, m, n)), gen.standard_normal((b, m, n)), gen.standard_normal(n)


# quadratic mean -------------------------------------------------------------

def test_quadratic_mean_examples():
    assert quadratic_mean(np.eye(2), np.eye(2)) == 2
    assert quadratic_mean([[1, 2], [3, 4]], [[0, 1], [1, 0]]) == 5
    assert quadratic_mean(np.ones((3, 3)), np.zeros((3, 3))) == 0
    with pytest.raises(InvalidArgumentError):
        quadratic_mean(np.eye(2), np.eye(3))


# deviations -----------------------------------------------------------------

def test_cross_identity_example():
    assert deviation_cross(np.eye(2), np.eye(2), [1.0, 1.0]) == 0


def test_cross_singletons_direct():
    A, B, xi = rand_sets(1, 1, 1, 3, 4)
    direct = abs(xi @ A[0].T @ B[0] @ xi - np.trace(A[0].T @ B[0]))
    assert deviation_cross(A, B, xi) == pytest.approx(direct, rel=1e-12)


def test_cross_matches_naive_3x3():
    A, B, xi = rand_sets(2, 3, 3, 4, 4)
    assert deviation_cross(A, B, xi) == pytest.approx(naive_cross(A, B, xi), rel=1e-12)


def test_single_equals_cross_on_itself():
    for s in range(50):
        A, _, xi = rand_sets(100 + s, 1, 1, 3, 3)
        assert deviation_single(A, xi) == pytest.approx(deviation_cross(A, A, xi), rel=1e-10, abs=1e-12)


def test_single_identity_on_sphere():
    n = 5
    xi = RandomSource(3, 0).generator().standard_normal(n)
    xi *= math.sqrt(n) / np.linalg.norm(xi)
    assert deviation_single(np.eye(n), xi) == pytest.approx(0, abs=1e-12)


def test_single_matches_naive_five_elements():
    A, _, xi = rand_sets(4, 5, 1, 3, 6)
    assert deviation_single(A, xi) == pytest.approx(naive_cross(A, A, xi), rel=1e-12)


def test_sum_single_term_is_cross():
    A, B, xi = rand_sets(5, 2, 3, 4, 4)
    assert deviation_sum(A, B, [xi]) == deviation_cross(A, B, xi)


def test_sum_repeated_draw():
    A, B, xi = rand_sets(6, 3, 2, 4, 4)
    T = 5
    signed = [(xi @ M.T @ N @ xi - np.trace(M.T @ N)) for M in A for N in B]
    assert deviation_sum(A, B, [xi] * T) == pytest.approx(T * max(abs(s) for s in signed), rel=1e-12)


def test_sum_zero_set():
    A, _, xi = rand_sets(7, 2, 1, 3, 3)
    assert deviation_sum(A, np.zeros((1, 3, 3)), [xi, 2 * xi, -xi]) == 0


def test_sum_rejects_ragged_xis():
    with pytest.raises(InvalidArgumentError):
        deviation_sum(np.eye(2), np.eye(2), [[1.0, 2.0], [1.0]])
    with pytest.raises(InvalidArgumentError):
        deviation_cross(np.eye(2), np.eye(3), [1.0, 1.0])


def test_offdiag_examples():
    assert offdiag_term(np.eye(2), np.eye(2), [0.3, -2.0]) == 0
    M = np.eye(2)
    N = np.array([[0.0, 1.0], [1.0, 0.0]])
    # <M_1, N_2> = <M_2, N_1> = 1 with column-wise inner products
    assert offdiag_term(M, N, [1.0, 1.0]) == pytest.approx(naive_offdiag([M], [N], [1.0, 1.0]))
    assert offdiag_term(M, N, [1.0, 1.0]) == pytest.approx(2.0)
    A, B, _ = rand_sets(8, 2, 2, 3, 3)
    assert offdiag_term(A, B, np.zeros(3)) == 0


def test_diag_examples():
    A, B, _ = rand_sets(9, 2, 2, 4, 4)
    rad = np.array([1.0, -1.0, -1.0, 1.0])
    assert diag_term(A, B, rad) == pytest.approx(0, abs=1e-12)
    assert diag_term(A, np.zeros((1, 4, 4)), rad * 3) == 0
    A, B, xi = rand_sets(10, 1, 1, 4, 4)
    assert diag_term(A, B, xi) == pytest.approx(naive_diag(A, B, xi), rel=1e-12)


def test_terms_match_naive():
    A, B, xi = rand_sets(11, 3, 2, 5, 4)
    assert offdiag_term(A, B, xi) == pytest.approx(naive_offdiag(A, B, xi), rel=1e-10)
    assert diag_term(A, B, xi) == pytest.approx(naive_diag(A, B, xi), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 4), st.integers(1, 4), st.integers(1, 6), st.integers(1, 6))
def test_decomposition_pointwise(seed, a, b, m, n):
    A, B, xi = rand_sets(seed, a, b, m, n)
    C = deviation_cross(A, B, xi)
    assert C <= (offdiag_term(A, B, xi) + diag_term(A, B, xi)) * (1 + 1e-9) + 1e-12


# lp norms -------------------------------------------------------------------

def test_lp_norm_examples():
    assert lp_norm_estimate([-2.5, -2.5, -2.5], 7) == pytest.approx(2.5)
    assert lp_norm_estimate([3, 4], 2) == pytest.approx(math.sqrt(12.5))
    assert lp_norm_estimate([-1, 1], 1) == 1
    assert lp_norm_estimate([0, 0], 3) == 0
    with pytest.raises(InvalidArgumentError):
        lp_norm_estimate([1.0], 0.5)
    with pytest.raises(InvalidArgumentError):
        lp_norm_estimate([], 2)


def test_lp_norm_large_p_no_overflow():
    assert lp_norm_estimate([1e200, 1e200], 8) == pytest.approx(1e200)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30))
def test_lp_norm_monotone_in_p(xs):
    vals = [lp_norm_estimate(xs, p) for p in (1, 2, 4, 8)]
    for lo, hi in zip(vals, vals[1:]):
        assert lo <= hi * (1 + 1e-9) + 1e-12


# bounds ---------------------------------------------------------------------

def test_bound_triple_examples():
    z = ComplexityProfile.from_values(0, 0, 0)
    bt = bound_triple(z, z)
    assert (bt.W, bt.V, bt.U) == (0, 0, 0)
    pM = ComplexityProfile.from_values(1, 2, 0.5)
    pN = ComplexityProfile.from_values(3, 4, 1)
    bt = bound_triple(pM, pN)
    assert (bt.W, bt.V, bt.U) == pytest.approx((16, 4.5, 0.5))


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_bound_triple_symmetric_profiles(g, f, o):
    p = ComplexityProfile.from_values(g, f, o)
    bt = bound_triple(p, p)
    assert bt.W == pytest.approx(2 * g * (g + f))
    assert bt.V == pytest.approx(2 * g * o + f * o)
    assert bt.U == pytest.approx(o * o)


def test_single_set_bound_examples():
    bt = single_set_bound(ComplexityProfile.from_values(0, 0, 0))
    assert (bt.W, bt.V, bt.U) == (0, 0, 0)
    bt = single_set_bound(ComplexityProfile.from_values(1, 2, 0.5))
    assert (bt.W, bt.V, bt.U) == pytest.approx((4, 1.5, 0.25))
    bt = single_set_bound(ComplexityProfile.from_values(1.5, 2, 0))
    assert (bt.W, bt.V, bt.U) == pytest.approx((1.5 * 3.5, 0, 0))


def test_bound_triple_validation():
    with pytest.raises(InvalidArgumentError):
        BoundTriple(-1, 0, 0)
    with pytest.raises(InvalidArgumentError):
        BoundTriple(1, 1, 1, c1=0)
    assert BoundTriple(2, 1, 1, c1=0.5).threshold == 1


def test_tail_bound_examples():
    bt = BoundTriple(1, 1, 1, c2=1)
    assert tail_bound(bt, 0) == 1
    assert tail_bound(bt, 1) == pytest.approx(2 * math.exp(-1))
    assert tail_bound(bt, 1e6) == 0
    with pytest.raises(InvalidArgumentError):
        tail_bound(bt, -1)


def test_tail_bound_degenerate_constants():
    # V = U = 0: any positive deviation is impossible
    assert tail_bound(BoundTriple(0, 0, 0), 0.1) == 0
    assert tail_bound(BoundTriple(0, 0, 0), 0) == 1


def test_sum_tail_examples():
    bt = BoundTriple(1, 1, 1, c2=1)
    assert sum_tail_bound(bt, 4, 2) == pytest.approx(math.exp(-1))
    assert sum_tail_bound(bt, 1, 0) == tail_bound(bt, 0) == 1
    assert sum_tail_bound(bt, 1, 3) == pytest.approx(tail_bound(bt, 3) / 2)
    with pytest.raises(InvalidArgumentError):
        sum_tail_bound(bt, 0, 1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0, 50), st.integers(1, 100))
def test_sum_tail_nondecreasing_in_T(V, U, eps, T):
    bt = BoundTriple(1, V, U)
    assert sum_tail_bound(bt, T, eps) <= sum_tail_bound(bt, T + 1, eps) + 1e-15


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0, 50), st.floats(0, 50))
def test_tail_bound_nonincreasing_in_eps(V, U, e1, e2):
    bt = BoundTriple(1, V, U)
    lo, hi = sorted((e1, e2))
    assert tail_bound(bt, hi) <= tail_bound(bt, lo)
    assert 0 <= tail_bound(bt, lo) <= 1


def test_hanson_wright_examples():
    A = RandomSource(12, 0).generator().standard_normal((5, 5))
    assert hanson_wright_tail(A, 0) == 1
    assert hanson_wright_tail(np.eye(4), 2, 1.0) == pytest.approx(2 * math.exp(-1))
    assert hanson_wright_tail(A, 1e9) == 0
    assert hanson_wright_tail(np.zeros((3, 3)), 0.5) == 0


# Monte-Carlo study ----------------------------------------------------------

def test_study_zero_set():
    A, _, _ = rand_sets(13, 2, 1, 3, 3)
    s = mc_deviation_study(A, np.zeros((1, 3, 3)), "gaussian_unit", 50, 3, RandomSource(0, 0))
    assert s.mean == 0 and all(q == 0 for q in s.quantiles.values())
    assert all(v == 0 for v in s.lp_norms.values())


def test_study_matches_per_trial_oracle():
    A, B, _ = rand_sets(14, 1, 1, 4, 4)
    src = RandomSource(14, 1)
    n = 10_000
    s = mc_deviation_study(A, B, "gaussian_unit", n, 1, src)
    ref = np.array([deviation_cross(A, B, trial_xis(src.spawn(i), "gaussian_unit", 1, 4)[0])
                    for i in range(n)])
    assert np.allclose(s.samples, ref, rtol=1e-12, atol=1e-12)
    assert s.mean == pytest.approx(ref.mean(), rel=1e-12)


def test_study_sum_path_and_chunking():
    A, B, _ = rand_sets(15, 2, 3, 3, 5)
    src = RandomSource(15, 1)
    s1 = mc_deviation_study(A, B, "rademacher", 37, 4, src, chunk=5)
    s2 = mc_deviation_study(A, B, "rademacher", 37, 4, src, chunk=4096)
    assert np.array_equal(s1.samples, s2.samples)
    ref = [deviation_sum(A, B, trial_xis(src.spawn(i), "rademacher", 4, 5)) for i in range(37)]
    assert np.allclose(s1.samples, ref, rtol=1e-12)


def test_summary_quantiles_monotone():
    s = DeviationSummary.from_samples(RandomSource(16, 0).generator().exponential(size=999))
    qs = list(s.quantiles.values())
    assert qs == sorted(qs)
    assert set(s.lp_norms) == {1.0, 2.0, 4.0, 8.0}


def test_study_validates():
    with pytest.raises(InvalidArgumentError):
        mc_deviation_study(np.eye(2), np.eye(2), "gaussian_unit", 1, 1, RandomSource(0, 0))
    with pytest.raises(InvalidArgumentError):
        mc_deviation_study(np.eye(2), np.eye(2), "gaussian_unit", 5, 0, RandomSource(0, 0))
