"""Truncated complex power series around a base point.

Coefficients are Taylor coefficients: f(z) = sum_k c_k (z - base)^k.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import SeriesDiverged


@dataclass(frozen=True, eq=False)
class LocalSeries:
    base: complex
    coeffs: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "base", complex(self.base))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, z):
        w = np.asarray(z, dtype=complex) - self.base
        out = np.zeros_like(w)
        for c in self.coeffs[::-1]:
            out = out * w + c
        return out

    def derivative_at_base(self, k):
        return factorial(k) * self.coeffs[k] if k <= self.degree else 0j

    def derivative(self):
        k = np.arange(1, len(self.coeffs))
        return LocalSeries(self.base, self.coeffs[1:] * k, self.radius)

    def reliable(self, radius=None):
        r = self.radius if radius is None else radius
        c = self.coeffs
        return abs(c[-1]) * r ** self.degree <= 1e3 * max(abs(c[0]), 1e-300)

    def check(self, radius=None):
        if not self.reliable(radius):
            raise SeriesDiverged("term-ratio test failed", "LocalSeries")
        return self

    def truncate(self, K):
        return LocalSeries(self.base, self.coeffs[:K + 1], self.radius)

    def tail_estimate(self, r=None):
        r = self.radius if r is None else r
        c = self.coeffs
        return float(abs(c[-1]) * r ** self.degree + abs(c[-2]) * r ** (self.degree - 1))

    # arithmetic on coefficient arrays (same base assumed)
    def _like(self, c):
        return LocalSeries(self.base, c, self.radius)

    def __add__(self, other):
        if isinstance(other, LocalSeries):
            K = min(self.degree, other.degree)
            return self._like(self.coeffs[:K + 1] + other.coeffs[:K + 1])
        c = self.coeffs.copy()
        c[0] += other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LocalSeries):
            K = min(self.degree, other.degree)
            return self._like(np.convolve(self.coeffs[:K + 1], other.coeffs[:K + 1])[:K + 1])
        return self._like(self.coeffs * other)

    __rmul__ = __mul__

    def shift_power(self, k):
        """Multiply by (z - base)^k for k >= 0 keeping the degree."""
        c = np.zeros_like(self.coeffs)
        if k < len(c):
            c[k:] = self.coeffs[:len(c) - k]
        return self._like(c)

    def drop_power(self, k):
        """Divide by (z - base)^k, assuming the first k coefficients vanish."""
        return self._like(np.concatenate([self.coeffs[k:], np.zeros(k, dtype=complex)])).truncate(self.degree - k)

    def reciprocal(self):
        c = self.coeffs
        out = np.zeros_like(c)
        out[0] = 1.0 / c[0]
        for k in range(1, len(c)):
            out[k] = -np.dot(c[1:k + 1], out[k - 1::-1][:k]) / c[0]
        return self._like(out)

    def __truediv__(self, other):
        if isinstance(other, LocalSeries):
            return self * other.reciprocal()
        return self._like(self.coeffs / other)

    def exp(self):
        c = self.coeffs
        K = len(c)
        out = np.zeros(K, dtype=complex)
        out[0] = np.exp(c[0])
        kc = np.arange(K) * c
        for k in range(1, K):
            out[k] = np.dot(kc[1:k + 1], out[k - 1::-1][:k]) / k
        return self._like(out)

    def log(self):
        c = self.coeffs
        K = len(c)
        out = np.zeros(K, dtype=complex)
        out[0] = np.log(c[0])
        # f' = f * (log f)'
        for k in range(1, K):
            s = k * c[k]
            for j in range(1, k):
                s -= j * out[j] * c[k - j]
            out[k] = s / (k * c[0])
        return self._like(out)

    def power(self, alpha, branch0=None):
        """f^alpha for f(base) != 0; branch of the constant term chosen by branch0."""
        lg = self.log()
        c = lg.coeffs.copy()
        c[0] = 0.0
        out = self._like(c * alpha).exp()
        c0 = self.coeffs[0] ** alpha if branch0 is None else branch0
        return out * c0

    def compose(self, inner):
        """self(inner(w)) where inner(inner.base) == self.base; result based at inner.base."""
        g = inner.coeffs.copy()
        g[0] -= self.base
        if abs(g[0]) > 1e-12 * max(1.0, abs(self.base)):
            raise ValueError("inner series does not map onto the base point")
        g[0] = 0.0
        K = min(self.degree, inner.degree)
        g = g[:K + 1]
        out = np.zeros(K + 1, dtype=complex)
        # Horner in the series ring
        for c in self.coeffs[:K + 1][::-1]:
            out = np.convolve(out, g)[:K + 1]
            out[0] += c
        return LocalSeries(inner.base, out, inner.radius)

    def revert(self):
        """Compositional inverse of a series with f(base)=b0, f'(base) != 0.

        The result is based at b0 = f(base) and maps back to base.
        """
        c = self.coeffs
        if abs(c[1]) == 0:
            raise ValueError("series not invertible: zero linear coefficient")
        K = self.degree
        a = np.zeros(K + 1, dtype=complex)  # inverse coefficients in (w - b0)
        a[1] = 1.0 / c[1]
        # iterate: solve f(base + g(w)) = b0 + w order by order
        f = c.copy()
        f[0] = 0.0
        for k in range(2, K + 1):
            g = a.copy()
            g[k:] = 0.0
            comp = np.zeros(K + 1, dtype=complex)
            powg = np.zeros(K + 1, dtype=complex)
            powg[0] = 1.0
            for j in range(1, k + 1):
                powg = np.convolve(powg, g)[:K + 1]
                comp += f[j] * powg
            a[k] = -comp[k] / c[1]
        a[0] = self.base
        return LocalSeries(c[0], a, abs(c[1]) * self.radius)


def cauchy_series(f, base, radius, K, n=None):
    """Taylor coefficients of f at base from samples on a circle (FFT)."""
    n = n or max(4 * (K + 1), 64)
    th = 2 * np.pi * np.arange(n) / n
    vals = f(base + radius * np.exp(1j * th))
    c = np.fft.fft(vals) / n
    c = c[:K + 1] / radius ** np.arange(K + 1)
    return LocalSeries(base, c, radius)


def cauchy_series_2d(f, r1, r2, K1, K2, n1=None, n2=None):
    """Coefficients c[j, k] of f(z, w) = sum c[j, k] z^j w^k from a bi-circle."""
    n1 = n1 or max(4 * (K1 + 1), 64)
    n2 = n2 or max(4 * (K2 + 1), 64)
    z = r1 * np.exp(2j * np.pi * np.arange(n1) / n1)
    w = r2 * np.exp(2j * np.pi * np.arange(n2) / n2)
    vals = f(z[:, None], w[None, :])
    c = np.fft.fft2(vals) / (n1 * n2)
    c = c[:K1 + 1, :K2 + 1]
    return c / (r1 ** np.arange(K1 + 1))[:, None] / (r2 ** np.arange(K2 + 1))[None, :]
