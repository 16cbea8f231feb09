import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracctl.numerics import (
    OptimOptions,
    central_difference,
    dogleg_solve,
    forward_jacobian,
    log_trapezoid,
    nelder_mead,
    poly_roots,
)


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_nelder_mead_rosenbrock():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], OptimOptions(xtol=1e-10, ftol=1e-14, max_evals=5000))
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)


def test_nelder_mead_respects_budget():
    calls = []

    def f(x):
        calls.append(1)
        return rosenbrock(x)

    res = nelder_mead(f, [-1.2, 1.0], OptimOptions(max_evals=50))
    assert len(calls) <= 50
    assert res.evals <= 50
    assert not res.converged


def test_nelder_mead_tolerates_infinite_values():
    # objective undefined on the left half-line
    res = nelder_mead(lambda x: math.inf if x[0] < 0 else (x[0] - 2) ** 2, [1.0], OptimOptions(xtol=1e-10))
    assert abs(res.x[0] - 2) < 1e-4


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4))
def test_nelder_mead_finds_quadratic_minimum(center):
    c = np.array(center)
    res = nelder_mead(lambda x: float(np.sum((x - c) ** 2)), np.zeros_like(c) + 0.3, OptimOptions(xtol=1e-9, ftol=1e-14, max_evals=4000))
    np.testing.assert_allclose(res.x, c, atol=1e-4)


def test_dogleg_linear_system():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    b = rng.normal(size=4)
    res = dogleg_solve(lambda x: A @ x - b, np.zeros(4))
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-9)


def test_dogleg_nonlinear_system():
    # x^2 + y^2 = 4, x*y = 1 has a root with x > y > 0
    F = lambda v: np.array([v[0] ** 2 + v[1] ** 2 - 4.0, v[0] * v[1] - 1.0])
    res = dogleg_solve(F, [2.0, 0.5])
    assert res.converged
    assert np.max(np.abs(F(res.x))) < 1e-9


def test_dogleg_reports_failure_without_root():
    res = dogleg_solve(lambda v: np.array([v[0] ** 2 + 1.0]), [0.7], OptimOptions(max_iter=50))
    assert not res.converged


def test_forward_jacobian_matches_analytic():
    F = lambda v: np.array([np.sin(v[0]) * v[1], v[0] ** 3 + np.exp(v[1])])
    x = np.array([0.4, -1.3])
    J = forward_jacobian(F, x)
    exact = np.array([[np.cos(x[0]) * x[1], np.sin(x[0])], [3 * x[0] ** 2, np.exp(x[1])]])
    np.testing.assert_allclose(J, exact, rtol=1e-6, atol=1e-7)


def test_central_difference():
    assert central_difference(np.sin, 0.3, 1e-5) == pytest.approx(np.cos(0.3), rel=1e-9)


@given(st.lists(st.floats(-10, 10).filter(lambda r: abs(r) > 1e-3), min_size=1, max_size=6, unique=True))
def test_poly_roots_recovers_real_roots(roots):
    coeffs = np.polynomial.polynomial.polyfromroots(roots)
    got = np.sort_complex(poly_roots(coeffs))
    assert np.allclose(np.sort(got.real), np.sort(roots), atol=1e-5 * max(1, max(map(abs, roots))) ** 2)


def test_poly_roots_constant_has_none():
    assert poly_roots([3.0]).size == 0


def test_log_trapezoid_against_closed_form():
    # integral of 1/(1+w^2) over [1e-3, 1e3]
    q = log_trapezoid(lambda w: 1 / (1 + w**2), 1e-3, 1e3, 4001)
    exact = math.atan(1e3) - math.atan(1e-3)
    assert q.value == pytest.approx(exact, rel=1e-5)
    assert abs(q.error_estimate) < 1e-3
