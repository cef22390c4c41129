import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from condensate.theta import dlog_theta1, log_eta, theta1, theta1_prime0

mpmath = pytest.importorskip("mpmath")

taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.6, 2.0))
zetas = st.builds(complex, st.floats(-0.5, 0.5), st.floats(-0.9, 0.9))


@settings(max_examples=40, deadline=None)
@given(zetas, taus)
def test_theta1_against_mpmath(zeta, tau):
    q = mpmath.exp(1j * mpmath.pi * tau)
    ref = complex(mpmath.jtheta(1, mpmath.pi * zeta, q))
    assume(abs(ref) > 1e-6)  # theta1 vanishes on the lattice
    got = complex(theta1(zeta, tau))
    assert abs(got - ref) <= 1e-11 * max(abs(ref), 1e-3)


@settings(max_examples=20, deadline=None)
@given(taus)
def test_theta_prime_is_twice_eta_cubed(tau):
    q = mpmath.exp(1j * mpmath.pi * tau)
    ref = complex(mpmath.jtheta(1, 0, q, 1))
    assert abs(theta1_prime0(tau) - ref) <= 1e-11 * abs(ref)
    eta = complex(mpmath.exp(1j * mpmath.pi * tau / 12) * mpmath.qp(mpmath.exp(2j * mpmath.pi * tau)))
    assert abs(np.exp(log_eta(tau)) - eta) <= 1e-12 * abs(eta)


def test_log_derivative_by_differences():
    tau, z, h = 0.2 + 1.1j, 0.13 + 0.3j, 1e-6
    fd = (np.log(theta1(z + h, tau)) - np.log(theta1(z - h, tau))) / (2 * h)
    assert abs(dlog_theta1(z, tau) - fd) < 1e-7 * abs(fd)
