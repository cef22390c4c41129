import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condensate.elliptic import EllipticData, eisenstein, eisenstein_lattice_sum
from condensate.errors import AtPole, AtSingularity, NonZeroMean
from condensate.green import GreenData, green_ewald, green_product_formula, lambda_k
from condensate.torus_core import PeriodicField, Torus, solve_poisson

sides = st.floats(min_value=0.6, max_value=1.6)
coords = st.floats(min_value=-0.5, max_value=0.5)


@settings(max_examples=25, deadline=None)
@given(sides, sides, coords, coords)
def test_green_is_doubly_periodic_and_even(a, b, x, y):
    T = Torus.rectangle(a, b)
    g = GreenData(T)
    z = complex(x * a, y * b)
    if T.lattice_distance(z) < 1e-3:
        return
    G = g.G(z)
    assert np.isclose(g.G(z + T.omega1), G, atol=1e-10)
    assert np.isclose(g.G(z - T.omega2), G, atol=1e-10)
    assert np.isclose(g.G(-z), G, atol=1e-10)


def test_green_matches_ewald_on_oblique_torus():
    T = Torus(1.0 + 0j, 0.3 + 0.9j)
    z = np.array([0.2 + 0.1j, -0.31 + 0.4j, 0.45 - 0.05j])
    assert np.max(np.abs(GreenData(T).G(z) - green_ewald(z, T))) < 1e-10


def test_green_has_zero_mean():
    T = Torus.rectangle(1.0, 1.3)
    f = GreenData(T).grid_field(256, p=0.1 + 0.2j)
    # the sampled field is off by the missing singular cell only
    assert abs(f.mean) < 1e-4


def test_regular_part_continuous_at_series_switch():
    g = GreenData(Torus.rectangle(1.0, 1.2))
    r = 1e-3 * np.exp(0.7j)
    assert abs(g.H(np.array([r * 0.999]))[0] - g.H(np.array([r * 1.001]))[0]) < 1e-9


def test_product_formula_against_theta_form():
    T = Torus.rectangle(1.2, 1.0)
    z = np.array([0.2 + 0.3j, -0.4 + 0.1j])
    G = GreenData(T).G(z)
    prod = green_product_formula(z, T) + np.abs(z) ** 2 / (4 * T.area) - np.log(np.abs(z)) / (2 * np.pi)
    assert np.max(np.abs(G - prod)) < 1e-12


def test_eisenstein_q_series_against_lattice_sum():
    T = Torus(1.0 + 0j, 0.2 + 1.1j)
    for l in (2, 3):
        assert abs(eisenstein(l, T) - eisenstein_lattice_sum(l, T)) < 1e-8 * abs(eisenstein(l, T))


def test_wp_differential_equation():
    E = EllipticData(Torus(1.0 + 0j, 0.3 + 0.9j))
    z = np.array([0.13 + 0.2j, -0.3 + 0.05j])
    lhs = E.wp_prime(z) ** 2
    rhs = 4 * E.wp(z) ** 3 - E.g2 * E.wp(z) - E.g3
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-10
    with pytest.raises(AtPole):
        E.wp(np.array([1.0 + 0j]))


def test_lambda_k_decay():
    lam = lambda_k(1.0, 5)
    assert np.all(np.diff(lam) < 0) and lam[0] == pytest.approx(1 / np.expm1(2 * np.pi))


def test_green_raises_at_pole():
    with pytest.raises(AtSingularity):
        GreenData(Torus.square()).green(np.array([0.2 + 0j]), 0.2)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(-4, 4))
def test_poisson_inverts_laplacian(j, k):
    T = Torus.rectangle(1.0, 1.3)
    kx, ky = 2 * np.pi * j / 1.0, 2 * np.pi * k / 1.3
    u = PeriodicField.from_function(T, 64, lambda z: np.cos(kx * z.real + ky * z.imag))
    f = -u.laplacian()
    assert np.max(np.abs(solve_poisson(f).values - u.values)) < 1e-10


def test_poisson_rejects_nonzero_mean():
    T = Torus.square()
    with pytest.raises(NonZeroMean):
        solve_poisson(PeriodicField.from_function(T, 32, lambda z: 1.0 + 0 * z.real))
