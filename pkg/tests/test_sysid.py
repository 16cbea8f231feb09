import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.signal import lfilter

from fracctl.fixtures import get_plant
from fracctl.lti import RationalTf, dc_gain, tustin_d2c
from fracctl.sysid import (
    DataRecord,
    EstimatorSpec,
    IdentifiedModel,
    NoiseSpec,
    SingularRegressorError,
    Structure,
    aic,
    estimate,
    estimate_arx,
    generate_stepback_data,
    order_sweep,
    stepback_input,
)


def excite(n=400, seed=0):
    return np.random.default_rng(seed).standard_normal(n)


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(0.1, 2.0), st.floats(-1.0, 1.0))
def test_arx_recovers_noise_free_model(p1, p2, b0, b1):
    # identifiable only without pole/zero cancellation and with two distinct modes
    assume(abs(p1 - p2) > 0.05 and min(abs(p1), abs(p2)) > 0.05)
    assume(min(abs(-b1 / b0 - p1), abs(-b1 / b0 - p2)) > 0.05)
    A = np.poly([p1, p2])
    u = excite()
    y = lfilter([0.0, b0, b1], A, u)
    m = estimate_arx(DataRecord(1.0, u, y), EstimatorSpec("ARX", na=2, nb=2, nk=1))
    np.testing.assert_allclose(m.A.coeffs, A, atol=1e-8)
    np.testing.assert_allclose(m.B.coeffs, [0.0, b0, b1], atol=1e-8)


def test_arx_singular_regressor():
    u = np.zeros(50)
    with pytest.raises(SingularRegressorError):
        estimate_arx(DataRecord(1.0, u, u.copy()), EstimatorSpec("ARX", na=1, nb=1))


def test_oe_recovers_system_under_white_output_noise():
    u = excite(1500, 3)
    clean = lfilter([0.0, 0.5, 0.2], [1.0, -1.2, 0.5], u)
    y = clean + 0.05 * np.random.default_rng(4).standard_normal(u.size)
    m = estimate(DataRecord(1.0, u, y), EstimatorSpec("OE", nb=2, nf=2, nk=1))
    assert m.converged
    np.testing.assert_allclose(m.F.coeffs, [1.0, -1.2, 0.5], atol=0.02)
    np.testing.assert_allclose(m.B.coeffs, [0.0, 0.5, 0.2], atol=0.02)


def test_armax_recovers_moving_average_noise():
    rng = np.random.default_rng(7)
    u, e = rng.standard_normal(3000), 0.3 * rng.standard_normal(3000)
    A, B, C = [1.0, -0.7], [0.0, 1.0], [1.0, 0.5]
    y = lfilter(B, A, u) + lfilter(C, A, e)
    m = estimate(DataRecord(1.0, u, y), EstimatorSpec("ARMAX", na=1, nb=1, nc=1, nk=1))
    np.testing.assert_allclose(m.A.coeffs, A, atol=0.03)
    np.testing.assert_allclose(m.C.coeffs, C, atol=0.06)
    assert m.V == pytest.approx(0.09, rel=0.1)


def test_estimated_noise_polynomials_are_stable():
    u = excite(500, 11)
    y = lfilter([0.0, 1.0], [1.0, -0.5], u) + 0.1 * excite(500, 12)
    m = estimate(DataRecord(1.0, u, y), EstimatorSpec("BJ", nb=1, nf=1, nc=1, nd=1, nk=1))
    for poly in (m.C, m.D, m.F):
        # ascending in q^-1 is descending in z
        assert np.all(np.abs(np.roots(poly.coeffs)) < 1.0)


def test_aic_formula():
    u = excite(300, 5)
    y = lfilter([0.0, 1.0], [1.0, -0.5], u) + 0.1 * excite(300, 6)
    m = estimate_arx(DataRecord(1.0, u, y), EstimatorSpec("ARX", na=1, nb=1, nk=1))
    N = m.residuals.size
    assert m.aic == pytest.approx(math.log(m.V) + 2 * 2 / N)
    assert aic(m, 10) == pytest.approx(math.log(m.V) + 0.4)


def test_estimator_spec_validation():
    with pytest.raises(ValueError):
        EstimatorSpec("OE", na=2, nb=1, nf=1)
    with pytest.raises(ValueError):
        EstimatorSpec("ARX", na=-1, nb=1)
    assert EstimatorSpec("BJ", nb=2, nc=1, nd=1, nf=2, nk=0).n_params == 6


def test_model_dict_round_trip():
    u = excite(200, 8)
    y = lfilter([0.0, 1.0], [1.0, -0.5], u)
    m = estimate_arx(DataRecord(0.5, u, y), EstimatorSpec("ARX", na=1, nb=1, nk=1))
    back = IdentifiedModel.from_dict(m.to_dict())
    assert back.spec == m.spec and back.Ts == 0.5
    np.testing.assert_allclose(back.A.coeffs, m.A.coeffs)


def test_order_sweep_is_sorted_by_aic():
    u = excite(300, 9)
    y = lfilter([0.0, 1.0, 0.3], [1.0, -0.9, 0.2], u) + 0.05 * excite(300, 10)
    sweep = order_sweep(DataRecord(1.0, u, y), "ARX", [1, 2, 3])
    aics = [e.aic for e in sweep if e.aic is not None]
    assert aics == sorted(aics)
    assert len(sweep) == 9


def test_stepback_input_shape():
    t, u = stepback_input(0.3, 3.0, 14.0, 0.1)
    assert t.size == 141 and u[0] == 0 and u[30] == pytest.approx(0.3) and u[-1] == pytest.approx(0.3)


def test_tustin_data_is_recovered_exactly_by_output_error():
    plant = get_plant("drop30_power100").identified
    data = generate_stepback_data(plant, noise=NoiseSpec.off(), method="tustin")
    m = estimate(data, EstimatorSpec("OE", nb=4, nf=3, nk=0))
    back = tustin_d2c(m.system_num, m.system_den, data.Ts)
    w = np.geomspace(1e-3, 1.0, 9)
    np.testing.assert_allclose(np.abs(back.evaluate_jw(w)[0]), np.abs(plant.evaluate_jw(w)[0]), rtol=1e-6)


def test_noise_is_seeded_and_colored():
    plant = RationalTf([10.0], [1.0, 0.5])
    a = generate_stepback_data(plant, noise=NoiseSpec(seed=3))
    b = generate_stepback_data(plant, noise=NoiseSpec(seed=3))
    c = generate_stepback_data(plant, noise=NoiseSpec(seed=4))
    assert np.array_equal(a.y, b.y) and not np.array_equal(a.y, c.y)
    clean = generate_stepback_data(plant, noise=NoiseSpec.off())
    assert clean.y[-1] == pytest.approx(0.3 * dc_gain(plant), rel=1e-3)


def test_generate_rejects_unstable_plant():
    with pytest.raises(ValueError):
        generate_stepback_data(RationalTf([1.0], [-1.0, 1.0]))
