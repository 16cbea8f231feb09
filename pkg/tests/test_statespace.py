import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracctl.lti import FractionalTf, ImproperSystemError, RationalTf, StateSpace, closed_loop, realize, simulate
from fracctl.lti.statespace import realize_zpk


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_realization_matches_transfer_function(order, seed):
    rng = np.random.default_rng(seed)
    poles = -(10 ** rng.uniform(-3, 3, order))
    zeros = -(10 ** rng.uniform(-3, 3, rng.integers(0, order + 1)))
    g = RationalTf(np.polynomial.polynomial.polyfromroots(zeros) * 2.5, np.polynomial.polynomial.polyfromroots(poles))
    ss = realize(g)
    w = np.geomspace(1e-4, 1e4, 9)
    np.testing.assert_allclose(ss.evaluate_jw(w), g.evaluate_jw(w)[0], rtol=1e-7)


def test_realization_of_complex_poles_and_to_tf():
    g = RationalTf([1.0, 2.0], [4.0, 0.4, 1.0])
    tf = realize(g).to_tf()
    w = np.array([0.5, 2.0, 7.0])
    np.testing.assert_allclose(tf.evaluate_jw(w)[0], g.evaluate_jw(w)[0], rtol=1e-10)


def test_improper_rejected():
    with pytest.raises(ImproperSystemError):
        realize(RationalTf([0.0, 1.0], [1.0]))


@given(st.floats(0.05, 20), st.floats(0.1, 10))
def test_zoh_step_is_exact_for_first_order(T, K):
    Ts = 0.05
    n = 200
    y = simulate(RationalTf([K], [1.0, T]), np.ones(n), Ts)
    t = np.arange(n) * Ts
    np.testing.assert_allclose(y, K * (1 - np.exp(-t / T)), atol=1e-10 * K)


def test_simulation_delay_shift():
    y = simulate(RationalTf([1.0], [1.0, 1.0], delay=0.3), np.ones(10), 0.1)
    assert np.all(y[:4] == 0) and y[4] > 0
    with pytest.raises(ValueError):
        simulate(RationalTf([1.0], [1.0, 1.0], delay=0.25), np.ones(10), 0.1)


def test_feedthrough_state_space():
    ss = StateSpace(np.zeros((0, 0)), [], [], 3.0)
    np.testing.assert_allclose(simulate(ss, [1.0, 2.0], 0.1), [3.0, 6.0])


def test_closed_loop_of_integrator_with_unit_gain():
    # C = 1, P = 1/s  ->  T = 1/(s+1)
    cl = closed_loop(FractionalTf([(1.0, 0)], [(1.0, 1)]), FractionalTf.gain(1.0))
    assert cl.is_stable()
    y = simulate(cl.complementary_ss, np.ones(101), 0.05)
    t = np.arange(101) * 0.05
    np.testing.assert_allclose(y, 1 - np.exp(-t), atol=1e-10)
    w = np.array([0.3, 3.0])
    np.testing.assert_allclose(cl.sensitivity(w) + cl.complementary(w), 1.0)


def test_closed_loop_accepts_improper_controller():
    # PID on a second-order lag: the product is proper even though the controller is not
    pid = FractionalTf([(0.5, 2), (2.0, 1), (1.0, 0)], [(1.0, 1)])
    plant = FractionalTf([(1.0, 0)], [(1.0, 2), (3.0, 1), (2.0, 0)])
    cl = closed_loop(plant, pid)
    assert cl.is_stable()
    y = simulate(cl.complementary_ss, np.ones(4001), 0.01)
    assert y[-1] == pytest.approx(1.0, abs=1e-3)


def test_closed_loop_detects_instability():
    plant = FractionalTf([(1.0, 0)], [(1.0, 3), (3.0, 2), (3.0, 1), (1.0, 0)])  # (s+1)^-3
    cl = closed_loop(plant, FractionalTf.gain(20.0))  # beyond the gain margin of 8
    assert not cl.is_stable()


def test_realize_zpk_gain():
    ss = realize_zpk([], [-2.0], 4.0)
    assert ss.evaluate_jw([0.0])[0] == pytest.approx(2.0)
