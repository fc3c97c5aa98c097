"""Piecewise-linear calculus: construction, sums, pruning, and the
closed-form sup-transform checked against brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wassrisk import (
    AffinePiece,
    DimensionMismatch,
    PwlConvex,
    QuadraticAffine,
    ValidationError,
    brute_force_lc,
    lambda_c_transform,
    lc_via_legendre,
    legendre_quadratic_affine,
    make_call,
    make_put,
    make_straddle,
    prune,
    scale,
)
from conftest import random_pwl


def grid_gap_bound(f, lam, h, dim):
    # The box maximizer sits within sqrt(dim)*h/2 of a grid node; walking
    # there loses at most Lip per unit twice over (payoff slope and the
    # quadratic's slope at the optimum) plus the quadratic curvature term.
    lip = f.lipschitz
    delta = np.sqrt(dim) * h / 2.0
    return 2.0 * lip * delta + lam * delta * delta / 2.0 + 1e-12


# ---------------------------------------------------------------------------
# construction and evaluation


def test_call_shape():
    f = make_call(2.0)
    assert [(p.slope[0], p.intercept) for p in f.pieces] == [(1.0, -2.0), (0.0, 0.0)]
    assert f(3.0) == 1.0
    assert f(1.0) == 0.0


def test_call_zero_strike():
    f = make_call(0.0)
    xs = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(f(xs), np.maximum(xs, 0.0))


def test_call_at_the_money():
    assert make_call(1.0)(1.0) == 0.0


def test_put_shape():
    f = make_put(2.0)
    assert f(1.0) == 1.0
    assert f(3.0) == 0.0
    g = make_put(0.0)
    xs = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(g(xs), np.maximum(-xs, 0.0))


def test_straddle_shape():
    f = make_straddle(2.0)
    assert f(3.0) == 1.0
    assert f(1.0) == 1.0
    assert f(2.0) == 0.0
    assert make_straddle(0.0)(-1.5) == 1.5
    assert make_straddle(1.0)(1.5) == 0.5


def test_evaluate_indexed_basic():
    f = make_call(1.0)
    value, idx = f.evaluate_indexed(np.array([2.0]))
    assert value == 1.0
    assert idx == 0


def test_evaluate_indexed_tie_lowest_index():
    # All three straddle pieces meet at the kink; ties resolve to the
    # lowest piece index.
    f = make_straddle(2.0)
    value, idx = f.evaluate_indexed(np.array([2.0]))
    assert value == 0.0
    assert idx == 0


def test_constant_function():
    f = PwlConvex([AffinePiece(np.array([0.0]), 5.0)])
    assert f(-7.3) == 5.0
    assert f(123.0) == 5.0


def test_empty_pieces_rejected():
    with pytest.raises(ValidationError):
        PwlConvex([])


def test_dimension_mismatch():
    f = make_call(1.0)
    with pytest.raises(DimensionMismatch):
        f.evaluate(np.array([1.0, 2.0]))


def test_mixed_piece_dims_rejected():
    with pytest.raises(ValidationError):
        PwlConvex([
            AffinePiece(np.array([1.0]), 0.0),
            AffinePiece(np.array([1.0, 0.0]), 0.0),
        ])


def test_nonfinite_rejected():
    with pytest.raises(ValidationError):
        AffinePiece(np.array([np.inf]), 0.0)
    with pytest.raises(ValidationError):
        AffinePiece(np.array([1.0]), float("nan"))


def test_lipschitz_constant():
    f = PwlConvex([
        AffinePiece(np.array([3.0, 4.0]), 0.0),
        AffinePiece(np.array([1.0, 1.0]), 2.0),
    ])
    assert f.lipschitz == 5.0


# ---------------------------------------------------------------------------
# sums


def test_sum_two_calls():
    f = make_call(1.0) + make_call(1.0)
    assert f(3.0) == 4.0
    assert f.npieces == 4


def test_sum_call_put_equals_straddle():
    K = 1.5
    s = make_call(K) + make_put(K)
    straddle = make_straddle(K)
    xs = np.linspace(K - 5, K + 5, 1000)
    np.testing.assert_allclose(s(xs), straddle(xs), atol=1e-14)


def test_sum_identity():
    f = make_straddle(2.0)
    zero = PwlConvex([AffinePiece(np.array([0.0]), 0.0)])
    g = f + zero
    xs = np.linspace(-4, 8, 200)
    np.testing.assert_allclose(g(xs), f(xs))


def test_scalar_add():
    f = make_call(1.0)
    g = f + 3.5
    h = 3.5 + f
    xs = np.linspace(-2, 4, 50)
    np.testing.assert_allclose(g(xs), f(xs) + 3.5)
    np.testing.assert_allclose(h(xs), f(xs) + 3.5)
    k = f - 1.25
    np.testing.assert_allclose(k(xs), f(xs) - 1.25)


def test_sum_dim_mismatch():
    f = make_call(1.0)
    g = PwlConvex([AffinePiece(np.array([1.0, 0.0]), 0.0)])
    with pytest.raises(DimensionMismatch):
        f + g


def test_scale():
    f = make_straddle(1.0)
    g = scale(f, 2.5)
    xs = np.linspace(-3, 5, 100)
    np.testing.assert_allclose(g(xs), 2.5 * f(xs))
    z = scale(f, 0.0)
    np.testing.assert_allclose(z(xs), 0.0)
    with pytest.raises(ValidationError):
        scale(f, -1.0)


# ---------------------------------------------------------------------------
# prune


def test_prune_parallel_dominated():
    f = PwlConvex([AffinePiece(np.array([1.0]), 0.0),
                   AffinePiece(np.array([1.0]), -1.0)])
    g = prune(f)
    assert g.npieces == 1
    assert g.pieces[0].intercept == 0.0


def test_prune_straddle_unchanged():
    g = prune(make_straddle(2.0))
    assert g.npieces == 3


def test_prune_call_plus_put():
    K = 1.0
    s = make_call(K) + make_put(K)
    assert s.npieces == 4
    g = prune(s)
    assert g.npieces == 3
    xs = np.linspace(-4, 6, 500)
    np.testing.assert_allclose(g(xs), s(xs), atol=1e-14)


@pytest.mark.parametrize("seed", range(6))
def test_prune_preserves_values(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    f = random_pwl(rng, dim, int(rng.integers(2, 7)))
    g = prune(f)
    assert g.npieces <= f.npieces
    X = rng.uniform(-8, 8, size=(400, dim))
    np.testing.assert_allclose(g(X), f(X), atol=1e-12)


# ---------------------------------------------------------------------------
# the sup-transform, closed form


def test_transform_call_strike_shift():
    K, lam = 2.0, 0.5
    g = lambda_c_transform(make_call(K), lam)
    expected = make_call(K - 1.0 / (2.0 * lam))
    assert len(g.pieces) == len(expected.pieces)
    for a, b in zip(g.pieces, expected.pieces):
        np.testing.assert_allclose(a.slope, b.slope)
        assert a.intercept == pytest.approx(b.intercept, abs=1e-15)


def test_transform_straddle_pieces():
    K, lam = 1.0, 2.0
    g = lambda_c_transform(make_straddle(K), lam)
    shift = 1.0 / (2.0 * lam)
    got = [(p.slope[0], p.intercept) for p in g.pieces]
    assert got == [(1.0, -(K - shift)), (-1.0, K + shift), (0.0, 0.0)]


def test_transform_constant_unchanged():
    f = PwlConvex([AffinePiece(np.array([0.0, 0.0]), 4.0)])
    for lam in (0.1, 1.0, 50.0):
        g = lambda_c_transform(f, lam)
        assert g.pieces[0].intercept == 4.0


def test_transform_rejects_nonpositive_lambda():
    f = make_call(1.0)
    with pytest.raises(ValidationError):
        lambda_c_transform(f, 0.0)
    with pytest.raises(ValidationError):
        lambda_c_transform(f, -1.0)


def test_brute_force_call():
    # transform of call(1) at lam=0.5 is call(0); at x=0 that is 0
    val = brute_force_lc(make_call(1.0), 0.5, np.array([0.0]), grid_n=100001)
    assert val == pytest.approx(0.0, abs=2e-4)
    assert val <= 0.0 + 1e-12


def test_brute_force_constant():
    f = PwlConvex([AffinePiece(np.array([0.0]), 5.0)])
    assert brute_force_lc(f, 1.0, np.array([0.0]), grid_n=101) == 5.0


def test_brute_force_straddle():
    val = brute_force_lc(make_straddle(2.0), 1.0, np.array([2.0]), grid_n=100001)
    assert val == pytest.approx(0.5, abs=1e-4)


def test_brute_force_degenerate_box():
    with pytest.raises(ValidationError):
        brute_force_lc(make_call(1.0), 1.0, np.array([0.0]),
                       search_box=(2.0, 2.0), grid_n=10)


@pytest.mark.parametrize("seed", range(10))
def test_transform_matches_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    dim = int(rng.integers(1, 4))
    f = random_pwl(rng, dim, int(rng.integers(1, 7)))
    lam = float(rng.uniform(0.5, 4.0))
    x = rng.uniform(-2, 2, size=dim)
    grid_n = {1: 4001, 2: 201, 3: 41}[dim]
    closed = lambda_c_transform(f, lam)(x)
    oracle = brute_force_lc(f, lam, x, grid_n=grid_n)
    R = f.lipschitz / lam + 1.0
    h = 2.0 * R / (grid_n - 1)
    bound = grid_gap_bound(f, lam, h, dim)
    assert -1e-12 <= closed - oracle <= bound


# ---------------------------------------------------------------------------
# Legendre route


def test_legendre_of_quadratic_affine():
    q = QuadraticAffine(np.array([1.0]), 2.0)
    conj = legendre_quadratic_affine(q)
    np.testing.assert_allclose(conj.a, [-1.0])
    assert conj.b == pytest.approx(0.5 * 1.0 - 2.0)
    # pointwise: conj(x) = 0.5*(x-1)^2 - 2
    x = 0.3
    assert conj(np.array([x])) == pytest.approx(0.5 * (x - 1.0) ** 2 - 2.0)


def test_legendre_self_dual():
    q = QuadraticAffine(np.array([0.0]), 0.0)
    conj = legendre_quadratic_affine(q)
    np.testing.assert_allclose(conj.a, [0.0])
    assert conj.b == 0.0


def test_legendre_numeric_sup():
    # sup_y <x,y> - q(y) against a dense grid, x = 0.7
    q = QuadraticAffine(np.array([1.0]), 2.0)
    conj = legendre_quadratic_affine(q)
    x = 0.7
    ys = np.linspace(-20, 20, 400001)
    sup = np.max(x * ys - (0.5 * ys * ys + 1.0 * ys + 2.0))
    assert conj(np.array([x])) == pytest.approx(sup, abs=1e-8)


def test_lc_via_legendre_call():
    got = lc_via_legendre(make_call(1.0), 1.0, np.array([1.0]), grid_n=200001)
    assert got == pytest.approx(0.5, abs=1e-4)


def test_lc_via_legendre_constant():
    f = PwlConvex([AffinePiece(np.array([0.0]), 3.0)])
    got = lc_via_legendre(f, 2.0, np.array([0.7]), grid_n=10001)
    assert got == pytest.approx(3.0, abs=1e-6)


def test_lc_via_legendre_straddle():
    want = lambda_c_transform(make_straddle(2.0), 2.0)(np.array([0.0]))
    got = lc_via_legendre(make_straddle(2.0), 2.0, np.array([0.0]), grid_n=200001)
    assert got == pytest.approx(want, abs=1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_legendre_route_matches_closed_form(seed):
    rng = np.random.default_rng(300 + seed)
    f = random_pwl(rng, 1, int(rng.integers(1, 7)))
    lam = float(rng.uniform(0.5, 4.0))
    x = rng.uniform(-2, 2, size=1)
    closed = lambda_c_transform(f, lam)(x)
    oracle = lc_via_legendre(f, lam, x, grid_n=4001)
    R = f.lipschitz / lam + 1.0
    h = 2.0 * R / 4000
    assert abs(closed - oracle) <= grid_gap_bound(f, lam, h, 1)


# ---------------------------------------------------------------------------
# two-piece hinge identity: max{a*x - a*s, (a+1)*x - k - a*s} transforms to
# a shifted hinge plus a linear part


@pytest.mark.parametrize("seed", range(8))
def test_hinge_plus_linear_identity(seed):
    rng = np.random.default_rng(500 + seed)
    a = float(rng.uniform(0.1, 3.0))
    s = float(rng.uniform(-2.0, 2.0))
    k = float(rng.uniform(-2.0, 2.0))
    lam = float(rng.uniform(0.2, 5.0))
    f = PwlConvex([
        AffinePiece(np.array([a]), -a * s),
        AffinePiece(np.array([a + 1.0]), -k - a * s),
    ])
    g = lambda_c_transform(f, lam)
    xs = np.linspace(-6.0, 6.0, 1000)
    shift = (2.0 * a + 1.0) / (2.0 * lam)
    want = np.maximum(xs - (k - shift), 0.0) + a * (xs - s) + a * a / (2.0 * lam)
    np.testing.assert_allclose(g(xs), want, atol=1e-10)


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    lam=st.floats(0.05, 50.0),
    x=st.floats(-5.0, 5.0),
)
def test_transform_majorizes(seed, lam, x):
    rng = np.random.default_rng(seed)
    f = random_pwl(rng, 1, int(rng.integers(1, 7)))
    g = lambda_c_transform(f, lam)
    assert g(x) >= f(x) - 1e-12


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    lam1=st.floats(0.05, 50.0),
    lam2=st.floats(0.05, 50.0),
    x=st.floats(-5.0, 5.0),
)
def test_transform_monotone_in_lambda(seed, lam1, lam2, x):
    rng = np.random.default_rng(seed)
    f = random_pwl(rng, 1, int(rng.integers(1, 7)))
    lo, hi = min(lam1, lam2), max(lam1, lam2)
    assert lambda_c_transform(f, lo)(x) >= lambda_c_transform(f, hi)(x) - 1e-12


def test_transform_converges_to_f():
    rng = np.random.default_rng(42)
    f = random_pwl(rng, 2, 4)
    X = rng.uniform(-3, 3, size=(50, 2))
    gap = np.max(np.abs(lambda_c_transform(f, 1e9)(X) - f(X)))
    assert gap < 1e-8


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    k=st.floats(-10.0, 10.0),
    lam=st.floats(0.05, 50.0),
    x=st.floats(-5.0, 5.0),
)
def test_transform_cash_additive(seed, k, lam, x):
    rng = np.random.default_rng(seed)
    f = random_pwl(rng, 1, int(rng.integers(1, 7)))
    lhs = lambda_c_transform(f + k, lam)(x)
    rhs = lambda_c_transform(f, lam)(x) + k
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_serialization_round_trip(seed):
    rng = np.random.default_rng(seed)
    f = random_pwl(rng, int(rng.integers(1, 4)), int(rng.integers(1, 6)))
    g = PwlConvex.from_dict(f.to_dict())
    assert g.dim == f.dim
    for a, b in zip(g.pieces, f.pieces):
        np.testing.assert_array_equal(a.slope, b.slope)
        assert a.intercept == b.intercept


@pytest.mark.parametrize("payload", [
    {},
    {"dim": 1},
    {"dim": 1, "pieces": []},
    {"dim": 2, "pieces": [{"m": [1.0], "c": 0.0}]},
    {"dim": 1, "pieces": [{"m": [1.0]}]},
    {"dim": 1, "pieces": [{"m": ["x"], "c": 0.0}]},
])
def test_from_dict_rejects_malformed(payload):
    with pytest.raises(ValidationError):
        PwlConvex.from_dict(payload)
