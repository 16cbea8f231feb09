import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal
from scipy.linalg import solve_continuous_lyapunov

from fracctl.lti import (
    FractionalTf,
    H2UndefinedError,
    IntegratingSystemError,
    RationalTf,
    dc_gain,
    h2_norm,
    is_stable,
    minreal,
)


def lyapunov_h2(num_desc, den_desc):
    A, B, C, _ = signal.tf2ss(num_desc, den_desc)
    P = solve_continuous_lyapunov(A, -B @ B.T)
    return math.sqrt(float((C @ P @ C.T)[0, 0]))


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_h2_first_order_closed_form(K, T):
    assert h2_norm(RationalTf([K], [1.0, T])) == pytest.approx(K / math.sqrt(2 * T), rel=5e-3)


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_h2_matches_lyapunov(order, seed):
    rng = np.random.default_rng(seed)
    poles = -(10 ** rng.uniform(-1.5, 1.5, order))
    den = np.poly(poles)
    num = rng.normal(size=rng.integers(1, order + 1))
    g = RationalTf(num[::-1], den[::-1])
    assert h2_norm(g) == pytest.approx(lyapunov_h2(num, den), rel=5e-3)


def test_h2_complex_poles_against_lyapunov():
    num, den = [1.0, 2.0], [1.0, 0.4, 4.0, 1.0]
    g = RationalTf(num[::-1], den[::-1])
    assert h2_norm(g) == pytest.approx(lyapunov_h2(num, den), rel=5e-3)


@pytest.mark.parametrize(
    "sys",
    [
        RationalTf([1.0], [1.0, 1.0], delay=1.0),
        RationalTf([1.0, 1.0], [1.0, 1.0]),
        RationalTf([1.0], [-1.0, 1.0]),
    ],
    ids=["delay", "biproper", "unstable"],
)
def test_h2_undefined_cases(sys):
    with pytest.raises(H2UndefinedError):
        h2_norm(sys)


def test_dc_gain_rational_and_fractional():
    assert dc_gain(RationalTf([3.0], [2.0, 5.0])) == pytest.approx(1.5)
    assert dc_gain(FractionalTf([(4.0, 0)], [(1.0, 1.3), (2.0, 0)])) == pytest.approx(2.0)
    with pytest.raises(IntegratingSystemError):
        dc_gain(RationalTf([1.0], [0.0, 1.0]))


def test_stability():
    assert is_stable(RationalTf([1.0], [2.0, 3.0, 1.0]))
    assert not is_stable(RationalTf([1.0], [0.0, 1.0]))


def test_minreal_cancels_common_factor():
    g = RationalTf(np.polynomial.polynomial.polyfromroots([-1.0]), np.polynomial.polynomial.polyfromroots([-1.0 + 1e-9, -3.0]))
    r = minreal(g)
    assert r.den.degree == 1
    w = np.array([0.3, 3.0])
    np.testing.assert_allclose(r.evaluate_jw(w)[0], 1 / (1j * w + 3), rtol=1e-6)
