import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fracctl.fixtures import get_plant, load_controllers, plant_names
from fracctl.lti import FractionalTf, is_stable, oustaloup, pade_delay, rationalize
from fracctl.lti.approx import split_order


@pytest.mark.parametrize("alpha, expected", [(1.3, (1, 0.3)), (-0.4, (0, -0.4)), (2.0, (2, 0.0)), (-1.7, (-1, -0.7))])
def test_split_order(alpha, expected):
    n, g = split_order(alpha)
    assert n == expected[0]
    assert g == pytest.approx(expected[1])


def test_half_integrator_at_band_centre():
    approx = oustaloup(0.5)
    w = 1.0  # geometric centre of [1e-4, 1e4]
    got = approx.evaluate_jw([w])[0][0]
    exact = (1j * w) ** 0.5
    assert abs(abs(got) / abs(exact) - 1) < 0.01
    assert abs(math.degrees(np.angle(got) - np.angle(exact))) < 1.0


@given(st.floats(-0.95, 0.95).filter(lambda g: abs(g) > 0.02))
def test_oustaloup_tracks_phase_mid_band(gamma):
    approx = oustaloup(gamma)
    w = np.geomspace(1e-2, 1e2, 9)
    got = np.angle(approx.evaluate_jw(w)[0])
    assert np.max(np.abs(np.degrees(got) - 90 * gamma)) < 1.0


def test_oustaloup_poles_stable_and_in_band():
    g = oustaloup(0.7, order=3, band=(1e-2, 1e2))
    p = g.poles()
    assert np.all(p.real < 0)
    assert np.all((np.abs(p) >= 1e-2 * 0.999) & (np.abs(p) <= 1e2 * 1.001))


def test_integer_order_is_exact():
    g = oustaloup(2.0)
    np.testing.assert_allclose(g.num.coeffs, [0, 0, 1])


@given(st.floats(0.01, 20), st.integers(1, 6))
def test_pade_is_all_pass(L, order):
    p = pade_delay(L, order)
    w = np.geomspace(1e-3, 1e3, 50)
    assert np.max(np.abs(np.abs(p.evaluate_jw(w)[0]) - 1)) < 1e-12


def test_pade_matches_delay_at_low_frequency():
    L = 0.8
    p = pade_delay(L, 3)
    w = np.geomspace(1e-3, 1.0 / L, 30)
    phase_err = np.angle(p.evaluate_jw(w)[0] * np.exp(1j * w * L))
    assert np.max(np.abs(np.degrees(phase_err))) < 0.1


def test_pade_first_order_coefficients():
    p = pade_delay(2.0, 1)
    np.testing.assert_allclose(p.num.coeffs, [1, -1])
    np.testing.assert_allclose(p.den.coeffs, [1, 1])


def _band_error(sys, omegas, **opts):
    """Worst relative magnitude error and worst phase error in degrees."""
    ratio = rationalize(sys, **opts).evaluate_jw(omegas)[0] / sys.evaluate_jw(omegas)[0]
    return np.max(np.abs(np.abs(ratio) - 1)), np.max(np.abs(np.degrees(np.angle(ratio))))


def _bundled_models():
    out = []
    for name in plant_names():
        plant = get_plant(name)
        out.append(pytest.param(plant.nioptd1.to_fractional_tf(), id=f"{name}-nioptd1"))
        out.append(pytest.param(plant.nioptd2.to_fractional_tf(), id=f"{name}-nioptd2"))
    for name, params in load_controllers().items():
        out.append(pytest.param(params.to_fractional_tf(), id=f"controller-{name}"))
    return out


@pytest.mark.parametrize("sys", _bundled_models())
def test_rationalize_within_tolerance_over_band_interior(sys):
    # one decade inside each band edge; a Pade approximant is only asked to hold while omega*L <= 1
    w = np.geomspace(1e-3, 1e3, 601)
    if sys.delay:
        w = w[w * sys.delay <= 1.0]
    mag, phase = _band_error(sys, w)
    assert mag < 0.05
    assert phase < 3.0


def _peak_gain(sys):
    return np.max(np.abs(sys.evaluate_jw(np.geomspace(1e-3, 1e3, 601))[0]))


@given(st.floats(0.5, 50), st.floats(0.1, 1.9), st.floats(0.1, 10), st.floats(0.2, 1.8))
def test_rationalize_tracks_non_resonant_systems(K, alpha, a1, beta):
    sys = FractionalTf([(K, 0)], [(1.0, alpha + beta), (a1, alpha), (1.0, 0)])
    assume(_peak_gain(sys) <= 1.05 * K)
    mag, phase = _band_error(sys, np.geomspace(1e-2, 1e2, 41))
    assert mag < 0.05
    assert phase < 3.0
    assert rationalize(sys).num.degree <= rationalize(sys).den.degree


def test_resonant_error_shrinks_with_order():
    # (s^1.5 + 1)^2: lightly damped poles amplify the approximant's ripple near omega = 1
    sys = FractionalTf([(1.0, 0)], [(1.0, 3.0), (2.0, 1.5), (1.0, 0)])
    w = np.geomspace(1e-2, 1e2, 201)
    phases = [_band_error(sys, w, oustaloup_order=n)[1] for n in (2, 4, 6, 8)]
    assert all(a > b for a, b in zip(phases, phases[1:]))
    assert phases[1] > 3.0  # the default order misses the 3 degree bound here
    assert phases[2] < 3.0


@pytest.mark.xfail(strict=True, reason="Oustaloup filters lose about 5.6*gamma degrees one decade inside the band edge")
def test_rationalize_band_edge_phase_for_high_fractional_order():
    sys = FractionalTf([(1.0, 0)], [(1.0, 1.9), (1.0, 0)])
    _, phase = _band_error(sys, np.geomspace(1e-3, 1e3, 601))
    assert phase < 3.0


def test_rationalize_integer_delay_free_unchanged():
    sys = FractionalTf([(2, 0)], [(1, 1), (1, 0)])
    r = rationalize(sys)
    np.testing.assert_allclose(r.den.coeffs, [1, 1])
    np.testing.assert_allclose(r.num.coeffs, [2])


def test_rationalize_drops_negligible_delay_and_pades_the_rest():
    sys = FractionalTf([(1, 0)], [(1, 1), (1, 0)], delay=1e-9)
    assert rationalize(sys).delay == 0 and rationalize(sys).den.degree == 1
    with_delay = rationalize(sys.with_delay(0.5), pade_order=3)
    assert with_delay.den.degree == 4 and with_delay.delay == 0


def test_rationalized_stable_plant_stays_stable():
    sys = FractionalTf([(100, 0)], [(1.0, 2.1), (1.5, 1.05), (1.0, 0)], delay=0.3)
    assert is_stable(rationalize(sys))


def test_bad_band_rejected():
    with pytest.raises(ValueError):
        oustaloup(0.5, band=(10, 1))
