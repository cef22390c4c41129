import numpy as np
import pytest

from condensate import conditions
from condensate.errors import BalanceViolated
from condensate.green import GreenData
from condensate.profile import build_H, build_sigma0
from condensate.torus_core import Torus, VortexConfig


@pytest.fixture(scope="module")
def pair_profile():
    T = Torus.square(1.0)
    cfg = VortexConfig(((0j, 0), (0.3 + 0j, 1), (-0.3 + 0j, 1)), (0,))
    return cfg, build_sigma0(build_H(cfg, GreenData(T)))


def test_single_point_reduction_matches_hessian(pair_profile):
    cfg, P = pair_profile
    G, U = conditions.compute_gamma_upsilon(P)
    H_abs = abs(P.H_series[0].coeffs[0])
    hess = conditions.hessian_u0(cfg, P.green, 0j)
    lhs = abs(abs(G) ** 2 - abs(U) ** 2) / H_abs ** 4
    assert lhs == pytest.approx(abs(np.linalg.det(hess)) / 4, rel=1e-5)


def test_D0_routes_agree_for_simple_point(pair_profile):
    _, P = pair_profile
    quad = conditions.compute_D0_quadrature(P)
    assert quad == pytest.approx(0.190931, abs=2e-6)  # [DERIVED] frozen quadrature value
    assert conditions.compute_D0_area(P) == pytest.approx(quad, rel=1e-3)
    assert conditions.D0_single_point_limit(P) == pytest.approx(quad, rel=1e-3)


def test_balance_violation_detected():
    cfg = VortexConfig(((0j, 0), (0.3 + 0j, 1), (-0.3 + 0j, 2)), (0,))
    with pytest.raises(BalanceViolated):
        build_H(cfg, GreenData(Torus.square(1.0)))


def test_correction_coefficient():
    for n in range(4):
        assert conditions.correction_coefficient(n) == pytest.approx(n * (2 * n + 3) / (n + 1))


def test_nondegeneracy_margin_scale_invariant():
    m1, t1 = conditions.nondegeneracy_margin(1.0 + 1j, 0.5, -0.1, 2)
    m2, t2 = conditions.nondegeneracy_margin(10 * (1.0 + 1j), 5.0, -1.0, 2)
    assert m2 == pytest.approx(10 * m1) and t2 == pytest.approx(10 * t1)
