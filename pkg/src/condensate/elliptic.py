"""Weierstrass wp, its derivatives, half-period values and Eisenstein series.

The fast route sums cosecants row by row in a reduced basis; the brute-force
lattice sums (box |n|,|m| <= nmax plus a continuum tail correction) are kept
as slow oracles.
"""
from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np
from scipy import special

from .errors import AtPole

ROWS = 10


def _csc2_cot(x):
    """csc^2(x) and cot(x), overflow-free for large |Im x|."""
    x = np.asarray(x, dtype=complex)
    up = x.imag >= 0
    e = np.where(up, np.exp(2j * np.where(up, x, 0)), np.exp(-2j * np.where(up, 0, x)))
    csc2 = -4 * e / (1 - e) ** 2
    cot = np.where(up, 1j * (e + 1) / (e - 1), -1j * (e + 1) / (e - 1))
    return csc2, cot


def _reduce(zeta, tau):
    k = np.round(zeta.imag / tau.imag)
    zeta = zeta - k * tau
    return zeta - np.round(zeta.real)


def eisenstein_tau(l, tau, nterms=60):
    """G_{2l} for the lattice Z + tau Z via the q-expansion."""
    k = 2 * l
    q = np.exp(2j * np.pi * tau)
    n = np.arange(1, nterms + 1)
    sigma = np.array([sum(d ** (k - 1) for d in range(1, m + 1) if m % d == 0) for m in n], dtype=float)
    const = 2 * special.zeta(k)
    coef = 2 * (2j * np.pi) ** k / factorial(k - 1)
    return const + coef * np.sum(sigma * q ** n)


def eisenstein(l, torus):
    """Absolutely convergent G_{2l} = sum' (n w1 + m w2)^{-2l}, l >= 2."""
    if l < 2:
        raise ValueError("only l >= 2 converges absolutely")
    w1, w2 = torus.reduced_basis
    return complex(eisenstein_tau(l, w2 / w1) / w1 ** (2 * l))


def _box_tail(torus, power, nmax, nodes=96):
    """Continuum estimate of sum over lattice points outside the box of w^{-power}."""
    x, wts = np.polynomial.legendre.leggauss(nodes)
    R = nmax + 0.5
    w1, w2 = torus.omega1, torus.omega2
    corners = [R * (-w1 - w2), R * (w1 - w2), R * (w1 + w2), R * (-w1 + w2)]
    if (w2 / w1).imag < 0:
        corners = corners[::-1]
    total = 0j
    # several panels per edge keep the Gauss rule accurate near the corners
    panels = 8
    for a, b in zip(corners, corners[1:] + corners[:1]):
        for p in range(panels):
            pa = a + (b - a) * p / panels
            pb = a + (b - a) * (p + 1) / panels
            w = (pa + pb) / 2 + (pb - pa) / 2 * x
            total += np.sum(wts * np.conj(w) * w ** (-power)) * (pb - pa) / 2
    return -total / (2j) / torus.area


def eisenstein_lattice_sum(l, torus, nmax=400):
    n = np.arange(-nmax, nmax + 1)
    W = n[:, None] * torus.omega1 + n[None, :] * torus.omega2
    W[nmax, nmax] = 1.0
    terms = W ** (-2 * l)
    terms[nmax, nmax] = 0.0
    return complex(terms.sum() + _box_tail(torus, 2 * l, nmax))


def wp_lattice_sum(z, torus, nmax=400):
    z = complex(z)
    n = np.arange(-nmax, nmax + 1)
    W = n[:, None] * torus.omega1 + n[None, :] * torus.omega2
    W[nmax, nmax] = 1.0
    terms = 1.0 / (z - W) ** 2 - 1.0 / W ** 2
    terms[nmax, nmax] = 0.0
    tail = sum((2 * j + 1) * z ** (2 * j) * _box_tail(torus, 2 * j + 2, nmax) for j in (1, 2, 3))
    return complex(1.0 / z ** 2 + terms.sum() + tail)


@dataclass(frozen=True, eq=False)
class EllipticData:
    torus: object

    @cached_property
    def _basis(self):
        w1, w2 = self.torus.reduced_basis
        return w1, w2, w2 / w1

    @cached_property
    def _row_const(self):
        w1, w2, tau = self._basis
        m = np.arange(1, ROWS + 1)
        csc2, _ = _csc2_cot(np.pi * m * tau)
        return 2 * np.sum(csc2) + 1.0 / 3.0

    def _rows(self, z):
        w1, w2, tau = self._basis
        z = np.asarray(z, dtype=complex)
        if np.any(self.torus.lattice_distance(z) < 1e-8 * abs(w1)):
            raise AtPole("argument on the period lattice", "z")
        zeta = _reduce(z / w1, tau)
        m = np.arange(-ROWS, ROWS + 1)
        return _csc2_cot(np.pi * (zeta[..., None] + m * tau))

    def wp(self, z):
        w1 = self._basis[0]
        csc2, _ = self._rows(z)
        return (np.pi / w1) ** 2 * (csc2.sum(axis=-1) - self._row_const)

    def wp_prime(self, z):
        w1 = self._basis[0]
        csc2, cot = self._rows(z)
        return -2 * (np.pi / w1) ** 3 * (csc2 * cot).sum(axis=-1)

    def wp_second(self, z):
        return 6 * self.wp(z) ** 2 - 30 * self.G4

    @cached_property
    def G4(self):
        return eisenstein(2, self.torus)

    @cached_property
    def G6(self):
        return eisenstein(3, self.torus)

    @property
    def g2(self):
        return 60 * self.G4

    @property
    def g3(self):
        return 140 * self.G6

    @cached_property
    def e1(self):
        return complex(self.wp(self.torus.omega1 / 2))

    @cached_property
    def e2(self):
        return complex(self.wp(self.torus.omega2 / 2))

    @cached_property
    def e3(self):
        return complex(self.wp((self.torus.omega1 + self.torus.omega2) / 2))

    @property
    def half_periods(self):
        t = self.torus
        return t.omega1 / 2, t.omega2 / 2, (t.omega1 + t.omega2) / 2

    def laurent(self, K=8):
        """Coefficients of wp - 1/z^2 = sum (2l+1) G_{2l+2} z^{2l}, l = 1..K."""
        return {2 * l: (2 * l + 1) * eisenstein(l + 1, self.torus) for l in range(1, K + 1)}


def wp(z, torus):
    return EllipticData(torus).wp(z)


def wp_prime(z, torus):
    return EllipticData(torus).wp_prime(z)


def wp_second(z, torus):
    return EllipticData(torus).wp_second(z)
