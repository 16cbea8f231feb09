import math

import numpy as np
import pytest

from fracctl.lti import RationalTf, h2_norm, pade_delay
from fracctl.lti.analysis import H2UndefinedError
from fracctl.modred import PENALTY, NioptdI, NioptdII, Template, reduce, reduction_objective

FIRST_ORDER = RationalTf([5.0], [1.0, 2.0])  # 5/(2s+1)


@pytest.mark.parametrize("name, t", [("foptd", Template.FOPTD), ("nioptd1", Template.NIOPTD_I), ("NIOPTD-II", Template.NIOPTD_II), ("nioptd_2", Template.NIOPTD_II)])
def test_template_names(name, t):
    assert Template.parse(name) is t


def test_objective_vanishes_for_exact_candidate():
    assert reduction_objective(FIRST_ORDER, NioptdI(K=5.0, T=2.0, L=0.0, alpha=1.0)) < 1e-6


def test_objective_equals_h2_distance_for_rational_candidate():
    # candidate 4/(3s+1): difference is rational, its H2 norm is the oracle
    diff = FIRST_ORDER - RationalTf([4.0], [1.0, 3.0])
    J = reduction_objective(FIRST_ORDER, NioptdI(K=4.0, T=3.0, L=0.0, alpha=1.0))
    assert J == pytest.approx(h2_norm(diff), rel=5e-3)


def test_objective_uses_pade_for_delay():
    cand = NioptdI(K=5.0, T=2.0, L=0.5, alpha=1.0)
    oracle = h2_norm(FIRST_ORDER - FIRST_ORDER * pade_delay(0.5, 3))
    assert reduction_objective(FIRST_ORDER, cand) == pytest.approx(oracle, rel=5e-3)


def test_unstable_candidate_is_penalized():
    # s^alpha with alpha > 2 in a second-order template destabilizes the rationalization
    bad = NioptdII(K=1.0, zeta=0.05, omega_n=1.0, L=0.0, alpha=2.6, beta=0.2)
    assert reduction_objective(FIRST_ORDER, bad) >= PENALTY


def test_unstable_source_rejected():
    with pytest.raises(H2UndefinedError):
        reduction_objective(RationalTf([1.0], [-1.0, 1.0]), NioptdI(1.0, 1.0))


def test_first_order_source_gives_unit_alpha():
    res = reduce(FIRST_ORDER, "nioptd1", n_starts=2, seed=0)
    assert res.feasible
    assert res.params.alpha == pytest.approx(1.0, abs=0.01)
    assert res.params.T == pytest.approx(2.0, rel=0.02)
    assert res.J_normalized < 1e-3


def test_second_order_source_recovered_by_soptd():
    src = RationalTf([8.0], [4.0, 2.0, 1.0])  # omega_n = 2, zeta = 0.5
    res = reduce(src, "soptd", n_starts=2, seed=0)
    assert res.params.omega_n == pytest.approx(2.0, rel=0.02)
    assert res.params.zeta == pytest.approx(0.5, rel=0.02)
    assert res.J_normalized < 1e-3


def test_reduce_is_deterministic():
    a = reduce(FIRST_ORDER, "foptd", n_starts=2, seed=5).to_dict()
    b = reduce(FIRST_ORDER, "foptd", n_starts=2, seed=5).to_dict()
    assert a == b


def test_from_coefficients_round_trip():
    p = NioptdII.from_coefficients(K=10.0, alpha=1.9, two_zeta_omega_n=3.0, beta=0.9, omega_n_sq=4.0, L=0.1)
    assert p.omega_n == pytest.approx(2.0) and p.zeta == pytest.approx(0.75)
    assert p.dc_gain == pytest.approx(2.5)
    assert {e: c for c, e in p.to_fractional_tf().den_terms}[0.9] == pytest.approx(3.0)


def test_result_serializes():
    d = reduce(FIRST_ORDER, "foptd", n_starts=1).to_dict()
    assert d["template"] == "FOPTD" and d["params"]["kind"] == "NioptdI"
    assert math.isfinite(d["J_normalized"])
