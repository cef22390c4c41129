import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condensate import reduced
from condensate.errors import Divergent, NoZeroFound

# [DERIVED] frozen from the polar-quadrature oracle; independent of the series route
F_AT_ZERO_N2 = reduced.f_at_zero_closed(2)


@settings(max_examples=50)
@given(st.floats(min_value=-0.9, max_value=3.0), st.floats(min_value=0.5, max_value=6.0))
def test_beta_recurrences(p, extra):
    q = p + 2.1 + extra
    I = reduced.beta_integral(p, q)
    assert reduced.beta_integral(p, q + 1) == pytest.approx((q - p - 1) / q * I, rel=1e-12)
    assert reduced.beta_integral(p + 1, q) == pytest.approx((p + 1) / (q - p - 2) * I, rel=1e-12)


def test_beta_known_values_and_divergence():
    assert reduced.beta_integral(0, 5) == pytest.approx(0.25, rel=1e-15)
    assert reduced.beta_integral(0, 4) == pytest.approx(1 / 3, rel=1e-15)
    with pytest.raises(Divergent):
        reduced.beta_integral(1.0, 2.0)


def test_n_zero_coefficients_are_constant():
    for s in (0.0, 0.7, 20.0):
        assert reduced.f_of_zeta(s, 0) == pytest.approx(-np.pi / 6, rel=1e-10)
        assert abs(reduced.g_of_zeta(s, 0)) < 1e-12


def test_values_at_zero_closed_forms():
    for n in (1, 2, 3):
        p = n / (n + 1)
        assert reduced.f_of_zeta(0.0, n) == pytest.approx(-2 * np.pi / (2 * n + 3) * reduced.beta_integral(p, 5),
                                                          rel=1e-10)
        assert reduced.g_of_zeta(0.0, n) == pytest.approx(p * np.pi * reduced.beta_integral(p, 5), rel=1e-8)
        assert reduced.g_at_zero_published(n) != pytest.approx(reduced.g_of_zeta(0.0, n), rel=1e-3)


def test_defining_integrals_rotation_covariance():
    zeta = 0.7 * np.exp(0.4j)
    I, K = reduced.defining_integrals(zeta, 2)
    assert I == pytest.approx(reduced.f_of_zeta(0.7, 2), rel=1e-8)
    assert K / zeta == pytest.approx(reduced.g_of_zeta(0.7, 2), rel=1e-8)


def test_large_zeta_asymptotics():
    n, s = 2, 1e3
    p = n / (n + 1)
    assert reduced.f_of_zeta(s, n) / s ** (2 * p) == pytest.approx(-np.pi / 6, rel=2e-2)
    decay = reduced.g_of_zeta(s, n) / reduced.g_of_zeta(s / 10, n)
    assert decay == pytest.approx(10.0 ** (2 * p - 2), rel=5e-2)


def test_oned_first_representation_agrees():
    for s in (0.5, 2.0):
        assert reduced.j1_oned(s, 2) == pytest.approx(reduced.j_integrals_oracle(s, 2)[0], rel=1e-6)


def test_discrepancy_log_contents():
    ids = [e[0] for e in reduced.build_discrepancy_log(2)]
    assert "g(0) closed form" in ids and "J2 oned large lambda" in ids
    assert "f(0) closed form" not in ids


INPUTS = reduced.ReducedInputs(-1.0, 3.0 + 0j, 0.1 + 0j, 2)


def test_trivial_zero_and_jacobian():
    mu0 = reduced.mu_zero(INPUTS)
    Fmu, Fz = reduced.gamma0_map(mu0, 0j, INPUTS)
    assert abs(Fmu) < 1e-12 and abs(Fz) == 0
    J = reduced.jacobian_at_trivial_zero(INPUTS)
    assert np.max(np.abs(reduced.jacobian_fd(mu0, 0j, INPUTS) - J)) < 1e-6 * np.max(np.abs(J))
    assert reduced.correction_from_coefficients(INPUTS) == pytest.approx(2 * 7 / 3 * INPUTS.D0, rel=1e-8)


def test_action_matrix_is_the_conjugated_linear_map():
    G, U = 0.3 - 1.1j, 0.7 + 0.2j
    A = reduced.action_matrix(G, U)
    z = 0.4 - 0.9j
    w = np.conj(U) * z + np.conj(G) * np.conj(z)
    assert np.allclose(A @ [z.real, z.imag], [w.real, w.imag])


def test_degree_of_linear_maps():
    def F(x):
        return np.array([2 * x[0], -x[1] + 0.1 * x[2], 3 * x[2]])
    assert reduced.brouwer_degree(F, np.zeros(3), np.ones(3)) == -1
    assert reduced.brouwer_degree(lambda x: x, np.zeros(3), np.ones(3)) == 1


def test_no_zero_for_positive_D0():
    with pytest.raises(NoZeroFound):
        reduced.solve_reduced(reduced.ReducedInputs(0.5, 1.0 + 0j, 0j, 1), with_branch=False)
