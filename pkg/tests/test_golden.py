"""One-dimensional golden-section minimization helpers."""

import math

import pytest

from wassrisk._golden import (
    golden_section_min,
    golden_section_min_log,
    minimize_log_expanding,
)


def test_quadratic_argmin():
    res = golden_section_min(lambda x: (x - 1.7) ** 2, 0.0, 5.0, tol=1e-10)
    assert res.argmin == pytest.approx(1.7, abs=1e-9)
    assert res.minimum == pytest.approx(0.0, abs=1e-16)
    assert res.converged


def test_abs_kink():
    res = golden_section_min(lambda x: abs(x + 0.3), -2.0, 2.0, tol=1e-9)
    assert res.argmin == pytest.approx(-0.3, abs=1e-8)


def test_endpoint_minimum():
    res = golden_section_min(lambda x: x, 2.0, 9.0, tol=1e-9)
    assert res.argmin == pytest.approx(2.0, abs=1e-8)


def test_evaluation_count_tracks_iterations():
    calls = 0

    def f(x):
        nonlocal calls
        calls += 1
        return x * x

    res = golden_section_min(f, -1.0, 1.0, tol=1e-8)
    assert res.evaluations == calls
    assert res.iterations <= 200


def test_iteration_cap_reported():
    res = golden_section_min(lambda x: x * x, -1e8, 1e8, tol=1e-12, max_iter=10)
    assert not res.converged


def test_log_axis_argmin():
    # min over lam of lam + 4/lam is at lam=2; argmin resolution is
    # limited to about sqrt(eps) by the flat valley, value is exact
    res = golden_section_min_log(lambda lam: lam + 4.0 / lam, 1e-6, 1e6,
                                 rel_tol=1e-10)
    assert res.argmin == pytest.approx(2.0, rel=1e-6)
    assert res.minimum == pytest.approx(4.0, rel=1e-12)


def test_expanding_interior_minimum():
    res, bracket, interior = minimize_log_expanding(
        lambda lam: lam + 4.0 / lam, 1e-2, 1e2, rel_tol=1e-10, max_iter=200)
    assert interior
    assert bracket == (1e-2, 1e2)
    assert res.argmin == pytest.approx(2.0, rel=1e-6)


def test_expanding_grows_bracket():
    # minimum at 5e3 sits outside the initial bracket and is found after
    # geometric expansion
    res, bracket, interior = minimize_log_expanding(
        lambda lam: lam + 25e6 / lam, 1e-2, 1e2, rel_tol=1e-10, max_iter=200)
    assert interior
    assert bracket[1] > 1e2
    assert res.argmin == pytest.approx(5e3, rel=1e-7)


def test_expanding_reports_unbracketed():
    # strictly decreasing objective: no interior minimum below the cap
    res, bracket, interior = minimize_log_expanding(
        lambda lam: 1.0 / lam, 1e-2, 1e2, rel_tol=1e-8, max_iter=100)
    assert not interior
    assert bracket[1] == pytest.approx(1e12)


def test_expanding_toward_zero():
    res, bracket, interior = minimize_log_expanding(
        lambda lam: lam, 1e-2, 1e2, rel_tol=1e-8, max_iter=100)
    assert not interior
    assert bracket[0] == pytest.approx(1e-12)


def test_log_variant_positive_domain():
    res = golden_section_min_log(lambda lam: (math.log(lam) - 3.0) ** 2,
                                 1e-6, 1e6, rel_tol=1e-12)
    assert res.argmin == pytest.approx(math.exp(3.0), rel=1e-9)
