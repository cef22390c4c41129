"""Jacobi theta_1 and the Dedekind eta function, product form.

Convention: theta1(u | tau) = 2 q^(1/4) sin(u) prod (1-q^2n)(1-q^2n e^{2iu})(1-q^2n e^{-2iu}),
q = exp(i pi tau).  Arguments are given as zeta = u / pi.
"""
import numpy as np

NTERMS = None


def _nterms(tau, nterms):
    if nterms is not None:
        return nterms
    # after reduction |q^2n e^{2iu}| <= |q|^(2n-1)
    lq = -np.pi * tau.imag
    return int(np.ceil((np.log(1e-17) / lq + 1) / 2)) + 1


def log_eta(tau, nterms=NTERMS):
    q2 = np.exp(2j * np.pi * tau)
    n = np.arange(1, 3 * _nterms(tau, nterms) + 1)
    return 1j * np.pi * tau / 12 + np.sum(np.log1p(-q2 ** n))


def log_theta1(zeta, tau, nterms=NTERMS):
    """log theta1(pi*zeta | tau); real part exact, imaginary part up to 2*pi*k."""
    zeta = np.asarray(zeta, dtype=complex)
    it = tau.imag
    # bring Im zeta into [-Im tau / 2, Im tau / 2] with the quasi-periodicity in tau
    k = np.round(zeta.imag / it)
    zr = zeta - k * tau
    # theta1(pi(z + k tau)) = (-1)^k q^{-k^2} e^{-2 pi i k z} theta1(pi z)
    shift = 1j * np.pi * k + (-1j * np.pi * tau) * k ** 2 - 2j * np.pi * k * zr
    q2 = np.exp(2j * np.pi * tau)
    e = np.exp(2j * np.pi * zr)
    acc = np.log(2 * np.sin(np.pi * zr)) + 1j * np.pi * tau / 4
    qn = 1.0 + 0j
    for _ in range(_nterms(tau, nterms)):
        qn = qn * q2
        acc = acc + np.log1p(-qn) + np.log1p(-qn * e) + np.log1p(-qn / e)
    return acc + shift


def theta1(zeta, tau, nterms=NTERMS):
    return np.exp(log_theta1(zeta, tau, nterms))


def theta1_prime0(tau, nterms=NTERMS):
    """d/du theta1(u) at u = 0, equal to 2 eta^3."""
    return 2 * np.exp(3 * log_eta(tau, nterms))


def dlog_theta1(zeta, tau, nterms=NTERMS):
    """d/dzeta of log theta1(pi*zeta | tau)."""
    zeta = np.asarray(zeta, dtype=complex)
    k = np.round(zeta.imag / tau.imag)
    zr = zeta - k * tau
    q2 = np.exp(2j * np.pi * tau)
    e = np.exp(2j * np.pi * zr)
    acc = np.pi / np.tan(np.pi * zr) - 2j * np.pi * k
    qn = 1.0 + 0j
    for _ in range(_nterms(tau, nterms)):
        qn = qn * q2
        acc = acc - 2j * np.pi * qn * e / (1 - qn * e) + 2j * np.pi * qn / e / (1 - qn / e)
    return acc
