import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracctl.lti import FractionalTf, RationalTf, freq_response


def test_rational_response_matches_direct_formula():
    g = RationalTf([2.0], [1.0, 3.0], delay=0.5)
    w = np.array([0.1, 1.0, 10.0])
    vals, valid = g.evaluate_jw(w)
    assert valid.all()
    np.testing.assert_allclose(vals, 2.0 / (1 + 3j * w) * np.exp(-0.5j * w))


def test_fractional_response_uses_principal_branch():
    g = FractionalTf([(1.0, 0.0)], [(1.0, 0.5)])
    vals, _ = g.evaluate_jw([4.0])
    # (4j)^0.5 = 2 exp(j pi/4)
    np.testing.assert_allclose(vals, [1 / (2 * np.exp(1j * np.pi / 4))])


@given(st.floats(0.1, 10), st.floats(0.01, 5), st.floats(0, 2))
def test_fractional_equals_rational_for_integer_exponents(K, T, L):
    f = FractionalTf([(K, 0)], [(T, 1), (1.0, 0)], L)
    r = f.to_rational()
    w = np.geomspace(1e-2, 1e2, 7)
    np.testing.assert_allclose(f.evaluate_jw(w)[0], r.evaluate_jw(w)[0], rtol=1e-12)


def test_non_integer_to_rational_is_refused():
    with pytest.raises(ValueError):
        FractionalTf([(1, 0)], [(1, 0.3)]).to_rational()


def test_negative_delay_rejected():
    with pytest.raises(ValueError):
        RationalTf([1.0], [1.0, 1.0], delay=-1.0)


def test_algebra_products_and_feedback():
    g = RationalTf([1.0], [0.0, 1.0])  # 1/s
    t = g / (1 + g)
    w = np.array([0.5, 2.0])
    np.testing.assert_allclose(t.evaluate_jw(w)[0], 1 / (1j * w + 1))


def test_frequency_response_phase_is_unwrapped():
    g = RationalTf([1.0], [1.0, 3.0, 3.0, 1.0])  # (s+1)^-3
    fr = freq_response(g, np.geomspace(1e-2, 1e3, 400))
    assert fr.phase[-1] == pytest.approx(-1.5 * np.pi, abs=0.01)
    with pytest.raises(ValueError):
        freq_response(g, [1.0, 0.5])


def test_poles_and_feedthrough():
    g = RationalTf([1.0, 0.0, 2.0], [2.0, 3.0, 1.0])
    np.testing.assert_allclose(np.sort(g.poles().real), [-2.0, -1.0])
    assert g.feedthrough() == pytest.approx(2.0)
    sp = g.strictly_proper_part()
    assert sp.is_strictly_proper()
