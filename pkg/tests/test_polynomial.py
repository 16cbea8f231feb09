import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from fracctl.lti import Polynomial

coeffs = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=6)
points = st.floats(-3, 3)


@given(coeffs, coeffs, points)
def test_arithmetic_matches_numpy(a, b, x):
    pa, pb = Polynomial(a), Polynomial(b)
    P = np.polynomial.Polynomial
    for got, ref in ((pa + pb, P(a) + P(b)), (pa - pb, P(a) - P(b)), (pa * pb, P(a) * P(b))):
        assert np.isclose(got(x), ref(x), rtol=1e-9, atol=1e-6)


@given(coeffs, points)
def test_evaluation_is_horner(a, x):
    assert np.isclose(Polynomial(a)(x), np.polynomial.polynomial.polyval(x, a), rtol=1e-12, atol=1e-9)


def test_degree_ignores_trailing_zeros():
    p = Polynomial([1.0, 2.0, 0.0, 0.0])
    assert p.degree == 1
    assert Polynomial([0.0]).is_zero


def test_from_roots_round_trip():
    p = Polynomial.from_roots([-1.0, -2.0, -3.0])
    np.testing.assert_allclose(p.coeffs, [6, 11, 6, 1])
