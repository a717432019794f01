import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sketchlab import InvalidArgumentError, RandomSource, SketchMatrix, make_sketch
from sketchlab.embedding import check_inner_products, check_rip, inner_required_dim, jlt_required_dim
from sketchlab.geometry import finite_width_bound


def unit_rows(seed, n, d):
    X = RandomSource(seed, 0).generator().standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def test_identity_has_no_distortion():
    X = unit_rows(0, 10, 6)
    r = check_rip(SketchMatrix.identity(6), X, 0.01)
    assert r.max_norm_distortion == pytest.approx(0, abs=1e-14) and r.passed
    q = check_inner_products(SketchMatrix.identity(6), X[:5], X[5:], 0.01)
    assert q.max_inner_distortion == pytest.approx(0, abs=1e-14) and q.passed


def test_scaled_identity_distortion():
    X = unit_rows(1, 4, 3)
    r = check_rip(SketchMatrix.from_array(2 * np.eye(3)), X, 1.0)
    assert r.max_norm_distortion == pytest.approx(3)
    assert not r.passed


def test_single_pair_reduces_to_norm():
    u = unit_rows(2, 1, 8)
    S = make_sketch(4, 8, RandomSource(2, 1))
    assert check_inner_products(S, u, u, 0.5).max_inner_distortion == pytest.approx(
        check_rip(S, u, 0.5).max_norm_distortion)


def test_zero_vectors_skipped():
    X = np.vstack([unit_rows(3, 3, 5), np.zeros(5)])
    r = check_rip(make_sketch(5, 5, RandomSource(3, 1)), X, 0.5)
    assert r.n_skipped == 1
    with pytest.raises(InvalidArgumentError):
        check_rip(SketchMatrix.identity(5), np.zeros((2, 5)), 0.5)


def test_eps_and_shape_validation():
    S = SketchMatrix.identity(3)
    for eps in (0, -0.1, 1.5):
        with pytest.raises(InvalidArgumentError):
            check_rip(S, np.eye(3), eps)
    with pytest.raises(InvalidArgumentError):
        check_rip(S, np.eye(4), 0.5)


def test_worst_pair_reported():
    S = make_sketch(3, 6, RandomSource(4, 0))
    U, V = unit_rows(4, 4, 6), unit_rows(5, 5, 6)
    r = check_inner_products(S, U, V, 1.0)
    (i, j), val = r.per_pair_worst
    direct = abs((S.entries @ U[i]) @ (S.entries @ V[j]) - U[i] @ V[j])
    assert val == pytest.approx(direct) == pytest.approx(r.max_inner_distortion)


def test_jlt_dimension_examples():
    assert jlt_required_dim(0.25, 64, 8) == 533
    assert jlt_required_dim(1, math.e, 1) == 1
    with pytest.raises(InvalidArgumentError):
        jlt_required_dim(0.5, 1, 8)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 1.0), st.integers(2, 10 ** 6), st.floats(0.1, 20))
def test_jlt_inverse_square_law(eps, N, c):
    # ceil(c L / (eps/2)^2) vs 4 c L / eps^2 before ceiling
    raw = c * math.log(N) / eps ** 2
    assert jlt_required_dim(eps / 2, N, c) == max(1, math.ceil(4 * raw)) or \
        abs(jlt_required_dim(eps / 2, N, c) - 4 * raw) <= 1


def test_inner_dimension_examples():
    w = finite_width_bound(unit_rows(6, 32, 16))
    assert w == pytest.approx(math.sqrt(2 * math.log(32)))
    # (2 * 2.63277)^2 / 0.09 = 308.07
    assert inner_required_dim(0.3, w, w, 1) == 309
    assert inner_required_dim(0.3, w, w, 4) == 1233
    assert inner_required_dim(1, 1, 0, 1) == 1
    assert inner_required_dim(0.5, 0, 0, 1) == 1


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.01, 5), st.floats(0.01, 5))
def test_inner_quadratic_in_widths(eps, a, b):
    raw = (a + b) ** 2 / eps ** 2
    assert abs(inner_required_dim(eps, 2 * a, 2 * b, 1) - 4 * raw) <= 1


def test_jlt_pass_rate_small():
    X = unit_rows(7, 64, 512)
    b = jlt_required_dim(0.25, 64, 8)
    src = RandomSource(7, 1)
    rate = np.mean([check_rip(make_sketch(b, 512, src.spawn(i)), X, 0.25).passed for i in range(40)])
    assert rate >= 0.9
