"""Green function of the flat torus, its regular part H and the holomorphic
primitive H* with Re H* = H - |z|^2 / (4 |Omega|).

Closed form in a reduced basis (w1, w2), zeta = z / w1, tau = w2 / w1:
    G(z) = -(1/2pi) log|theta1(pi zeta) / eta(tau)| + (Im zeta)^2 / (2 Im tau)
which has zero mean over the fundamental domain.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import AtSingularity, NotARectangle
from .series import cauchy_series
from .theta import log_eta, log_theta1
from .torus_core import PeriodicField, solve_poisson

HSTAR_DEGREE = 40


@dataclass(frozen=True, eq=False)
class GreenData:
    torus: object

    @cached_property
    def _basis(self):
        w1, w2 = self.torus.reduced_basis
        tau = w2 / w1
        return w1, tau, log_eta(tau)

    def G(self, z):
        w1, tau, le = self._basis
        zeta = np.asarray(z, dtype=complex) / w1
        return (-(log_theta1(zeta, tau).real - le.real) / (2 * np.pi)
                + zeta.imag ** 2 / (2 * tau.imag))

    def green(self, z, p=0.0):
        z = np.asarray(z, dtype=complex)
        if np.any(self.torus.lattice_distance(z - p) < 1e-8):
            raise AtSingularity("evaluation point coincides with the pole", "z")
        return self.G(z - p)

    @cached_property
    def H0(self):
        w1, tau, le = self._basis
        return float(-np.log(2 * np.pi * np.exp(2 * le.real) / abs(w1)) / (2 * np.pi))

    def H(self, z):
        """Regular part G(z) + log|z| / 2pi, smooth on 2*Omega."""
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape)
        small = np.abs(z) < 1e-3 * abs(self._basis[0])
        if np.any(~small):
            zz = z[~small]
            out[~small] = self.G(zz) + np.log(np.abs(zz)) / (2 * np.pi)
        if np.any(small):
            out[small] = self.hstar(z[small]).real + np.abs(z[small]) ** 2 / (4 * self.torus.area)
        return out if out.shape else float(out)

    def exp_hstar(self, w):
        """exp(-2 pi H*(w)) up to a unimodular constant: Q(w) T(w) / w."""
        w1, tau, le = self._basis
        w = np.asarray(w, dtype=complex)
        zeta = w / w1
        small = np.abs(w) < 1e-12
        ws = np.where(small, 1.0, w)
        val = np.exp(np.pi * zeta ** 2 / (2 * tau.imag) + log_theta1(np.where(small, 1e-3, zeta), tau) - le) / ws
        val0 = 2 * np.pi * np.exp(2 * le) / w1
        return np.where(small, val0, val)

    @cached_property
    def _exp_series(self):
        w1 = self._basis[0]
        return cauchy_series(self.exp_hstar, 0.0, 0.5 * abs(w1), HSTAR_DEGREE, n=256)

    @cached_property
    def hstar_series(self):
        """LocalSeries of H* at 0; the imaginary constant is fixed by Im H*(0) = 0."""
        s = self._exp_series.log() * (-1.0 / (2 * np.pi))
        c = s.coeffs.copy()
        c[0] = c[0].real
        return type(s)(0.0, c, 0.5 * abs(self._basis[0]))

    def hstar(self, w):
        return self.hstar_series(w)

    def hstar_derivative(self, k):
        return self.hstar_series.derivative_at_base(k)

    def grid_field(self, M, p=0.0):
        """G(., p) sampled on the grid; the singular sample (if any) is set to 0."""
        Z = self.torus.grid(M)
        d = self.torus.lattice_distance(Z - p)
        safe = np.where(d < 1e-12, Z + 0.5 / M * self.torus.omega1, Z)
        vals = self.G(safe - p)
        return PeriodicField(self.torus, np.where(d < 1e-12, 0.0, vals))


def green(z, p, torus):
    return GreenData(torus).green(z, p)


def lambda_k(ratio=1.0, K=40):
    k = np.arange(1, K + 1)
    return 1.0 / np.expm1(2 * np.pi * k * ratio)


def _rect_frame(torus):
    if not torus.is_rectangle(1e-12):
        raise NotARectangle("torus is not a rectangle", "torus")
    u = torus.omega1 / abs(torus.omega1)
    a, b = torus.sides()
    return u, a, b


def hstar_derivatives(torus, K=40):
    """(H*''(0), H*''''(0), H*^(6)(0)) on a rectangle from the lambda_k series."""
    u, a, b = _rect_frame(torus)
    lam = lambda_k(b / a, K)
    L = lam * (lam + 1)
    s1 = np.sum(L)
    s3 = np.sum(L * (6 * lam ** 2 + 6 * lam + 1))
    s5 = np.sum(L * (120 * lam ** 4 + 240 * lam ** 3 + 150 * lam ** 2 + 30 * lam + 1))
    d2 = -1 / (2 * a * b) + np.pi / (6 * a ** 2) - 4 * np.pi / a ** 2 * s1
    d4 = np.pi ** 3 / (15 * a ** 4) + 16 * np.pi ** 3 / a ** 4 * s3
    d6 = 8 * np.pi ** 5 / (63 * a ** 6) - 64 * np.pi ** 5 / a ** 6 * s5
    return d2 * u ** -2, d4 * u ** -4, d6 * u ** -6


def green_product_formula(z, torus, K=None):
    """H(z) - |z|^2 / (4|Omega|) on a rectangle from the exponential product."""
    u, a, b = _rect_frame(torus)
    z = np.asarray(z, dtype=complex) / u
    if K is None:
        K = int(np.ceil(14 * np.log(10) / (2 * np.pi * b / a))) + 2
    e = lambda x: np.exp(2j * np.pi * x)
    small = np.abs(z) < 1e-12
    zs = np.where(small, 1e-12, z)
    acc = np.log(np.abs((1 - e(zs / a)) / zs))
    for k in range(1, K + 1):
        acc = acc + np.log(np.abs(1 - e((k * a * 1j * (b / a) + zs) / a))) + np.log(np.abs(1 - e((k * b * 1j - zs) / a)))
    lin = (-zs ** 2 / (4 * a * b) + 1j * zs / (2 * a) + b / (12 * a)).real
    return lin - acc / (2 * np.pi)


def green_ewald(z, torus, t0=None, kmax=None, rmax=None):
    """Independent Ewald-split evaluation of G(z, 0)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    A = torus.area
    t0 = 0.02 * A if t0 is None else t0
    kmax = kmax or int(np.ceil(np.sqrt(40 / t0) * max(torus.sides()) / (2 * np.pi))) + 1
    rmax = rmax or int(np.ceil(np.sqrt(4 * t0 * 40) / min(torus.sides()))) + 2
    W = np.array([[torus.omega1.real, torus.omega1.imag], [torus.omega2.real, torus.omega2.imag]])
    Winv = 2 * np.pi * np.linalg.inv(W)
    j = np.arange(-kmax, kmax + 1)
    J, Kk = np.meshgrid(j, j, indexing="ij")
    kx = Winv[0, 0] * J + Winv[0, 1] * Kk
    ky = Winv[1, 0] * J + Winv[1, 1] * Kk
    k2 = kx ** 2 + ky ** 2
    mask = k2 > 0
    kx, ky, k2 = kx[mask], ky[mask], k2[mask]
    coef = np.exp(-t0 * k2) / k2 / A
    out = np.empty(z.shape)
    n = np.arange(-rmax, rmax + 1)
    lat = (n[:, None] * torus.omega1 + n[None, :] * torus.omega2).ravel()
    for i, zz in enumerate(z):
        four = np.sum(coef * np.cos(kx * zz.real + ky * zz.imag))
        r2 = np.abs(zz - lat) ** 2
        real = np.sum(special.exp1(r2 / (4 * t0))) / (4 * np.pi)
        out[i] = four + real - t0 / A
    return out


def green_spectral_field(torus, M, p=0.0, t0=None):
    """G(., p) from solve_poisson of a Gaussian-smoothed periodic delta.

    Away from p the smoothing shifts G by the constant t0/|Omega|, which
    is removed.
    """
    if t0 is None:
        # Gaussian width set by the grid Nyquist wave number
        t0 = 35.0 * (max(torus.sides()) / (np.pi * M)) ** 2
    kx, ky = torus.wavevectors(M)
    z0 = torus.grid(M)[0, 0]
    phase = np.exp(-1j * (kx * (p - z0).real + ky * (p - z0).imag))
    hat = np.exp(-t0 * (kx ** 2 + ky ** 2)) * phase * M ** 2 / torus.area
    hat[0, 0] = 0.0
    src = PeriodicField.from_hat(torus, hat, real=True)
    u = solve_poisson(src)
    return u - t0 / torus.area
