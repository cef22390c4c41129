"""Lattice geometry, periodic grid fields, the spectral Poisson solver and
quadrature on the flat torus C / (omega1 Z + omega2 Z).

Grid fields are sampled in lattice coordinates (t, s), z = t*omega1 + s*omega2,
with t_i = -1/2 + i/M.  Index order is values[i, j] <-> (t_i, s_j).
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate as _integrate
from scipy import special

from .errors import GridTooSmall, NonZeroMean, PoleOnPath, ToleranceNotMet


@dataclass(frozen=True)
class Torus:
    omega1: complex
    omega2: complex

    def __post_init__(self):
        object.__setattr__(self, "omega1", complex(self.omega1))
        object.__setattr__(self, "omega2", complex(self.omega2))
        if self.omega1 == 0 or (self.omega2 / self.omega1).imag <= 0:
            raise ValueError("periods must satisfy Im(omega2/omega1) > 0")

    @classmethod
    def square(cls, a=1.0):
        return cls(a, 1j * a)

    @classmethod
    def rectangle(cls, a, b):
        return cls(a, 1j * b)

    @property
    def area(self):
        return abs((self.omega1.conjugate() * self.omega2).imag)

    @property
    def tau(self):
        return self.omega2 / self.omega1

    @property
    def diameter(self):
        return max(abs(self.omega1 + self.omega2), abs(self.omega1 - self.omega2))

    def is_rectangle(self, tol=1e-12):
        return abs((self.omega1.conjugate() * self.omega2).real) <= tol * abs(self.omega1) * abs(self.omega2)

    def is_square(self, tol=1e-12):
        return self.is_rectangle(tol) and abs(abs(self.omega1) - abs(self.omega2)) <= tol * abs(self.omega1)

    def sides(self):
        return abs(self.omega1), abs(self.omega2)

    @cached_property
    def reduced_basis(self):
        """Equivalent basis (w1, w2) with w2/w1 in the standard fundamental domain."""
        w1, w2 = self.omega1, self.omega2
        for _ in range(200):
            if abs(w2) < abs(w1) * (1 - 1e-14):
                w1, w2 = w2, -w1
            k = np.round((w2 / w1).real)
            if k != 0:
                w2 = w2 - k * w1
                continue
            if abs(w2) >= abs(w1) * (1 - 1e-14):
                break
        return complex(w1), complex(w2)

    def to_lattice(self, z):
        z = np.asarray(z, dtype=complex)
        det = (self.omega1.conjugate() * self.omega2).imag
        t = (z * self.omega2.conjugate()).imag / (-det)
        s = (self.omega1.conjugate() * z).imag / det
        return t, s

    def from_lattice(self, t, s):
        return np.asarray(t) * self.omega1 + np.asarray(s) * self.omega2

    def wrap(self, z):
        """Representative of z in the half-open fundamental domain [-1/2, 1/2)^2."""
        t, s = self.to_lattice(z)
        t = t - np.floor(t + 0.5)
        s = s - np.floor(s + 0.5)
        return self.from_lattice(t, s)

    def lattice_distance(self, z):
        """Distance from z to the nearest lattice point."""
        t, s = self.to_lattice(z)
        t0 = np.floor(t)
        s0 = np.floor(s)
        best = None
        for dt in (-1, 0, 1, 2):
            for ds in (-1, 0, 1, 2):
                d = np.abs(z - self.from_lattice(t0 + dt, s0 + ds))
                best = d if best is None else np.minimum(best, d)
        return best

    def inside(self, z, margin=0.0):
        t, s = self.to_lattice(z)
        lim = 0.5 - margin
        return (np.abs(t) < lim) & (np.abs(s) < lim)

    def grid_coords(self, M):
        return -0.5 + np.arange(M) / M

    def grid(self, M):
        t = self.grid_coords(M)
        return self.from_lattice(t[:, None], t[None, :])

    def wavevectors(self, M):
        """Cartesian wave vectors K with K.omega1 = 2 pi j, K.omega2 = 2 pi k."""
        j = np.fft.fftfreq(M, 1.0 / M)
        W = np.array([[self.omega1.real, self.omega1.imag],
                      [self.omega2.real, self.omega2.imag]])
        Winv = np.linalg.inv(W)
        J, Kk = np.meshgrid(j, j, indexing="ij")
        kx = 2 * np.pi * (Winv[0, 0] * J + Winv[0, 1] * Kk)
        ky = 2 * np.pi * (Winv[1, 0] * J + Winv[1, 1] * Kk)
        return kx, ky


@dataclass(frozen=True)
class VortexConfig:
    """Vortex points with multiplicities and the indices of concentration points."""
    points: tuple
    concentration: tuple = ()

    def __post_init__(self):
        pts = tuple((complex(p), int(n)) for p, n in self.points)
        if any(n < 0 for _, n in pts):
            raise ValueError("multiplicities must be non-negative")
        conc = tuple(int(i) for i in self.concentration)
        if any(i < 0 or i >= len(pts) for i in conc):
            raise ValueError("concentration index out of range")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "concentration", conc)

    @property
    def N(self):
        return sum(n for _, n in self.points)

    @property
    def positions(self):
        return np.array([p for p, _ in self.points], dtype=complex)

    @property
    def multiplicities(self):
        return np.array([n for _, n in self.points], dtype=int)

    @property
    def centers(self):
        return [self.points[i][0] for i in self.concentration]

    @property
    def orders(self):
        return [self.points[i][1] for i in self.concentration]

    def balance_ok(self):
        return self.N == 2 * sum(n + 1 for n in self.orders)

    def all_inside(self, torus):
        return bool(np.all(torus.inside(self.positions))) if self.points else True

    def shifted(self, c):
        return VortexConfig(tuple((p + c, n) for p, n in self.points), self.concentration)


def _check_grid(M):
    if M < 16:
        raise GridTooSmall(f"grid size {M} < 16", "M")
    if M & (M - 1):
        raise GridTooSmall(f"grid size {M} is not a power of two", "M")


@dataclass(frozen=True, eq=False)
class PeriodicField:
    torus: Torus
    values: np.ndarray

    @classmethod
    def from_function(cls, torus, M, f):
        return cls(torus, np.asarray(f(torus.grid(M))))

    @classmethod
    def from_hat(cls, torus, hat, real=True):
        v = np.fft.ifft2(hat)
        return cls(torus, v.real if real else v)

    @property
    def M(self):
        return self.values.shape[0]

    @cached_property
    def mean(self):
        return self.values.mean()

    @cached_property
    def hat(self):
        return np.fft.fft2(self.values)

    @property
    def is_real(self):
        return not np.iscomplexobj(self.values)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def _wrap(self, v):
        return PeriodicField(self.torus, v)

    def __add__(self, other):
        return self._wrap(self.values + (other.values if isinstance(other, PeriodicField) else other))

    def __sub__(self, other):
        return self._wrap(self.values - (other.values if isinstance(other, PeriodicField) else other))

    def __mul__(self, other):
        return self._wrap(self.values * (other.values if isinstance(other, PeriodicField) else other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self._wrap(-self.values)

    def zero_mean(self):
        return self._wrap(self.values - self.mean)

    def _spectral(self, symbol):
        v = np.fft.ifft2(self.hat * symbol)
        return self._wrap(v.real if self.is_real else v)

    def laplacian(self):
        kx, ky = self.torus.wavevectors(self.M)
        return self._spectral(-(kx ** 2 + ky ** 2))

    def gradient(self):
        kx, ky = self.torus.wavevectors(self.M)
        # drop the unpaired Nyquist mode so derivatives of real fields stay real
        nyq = np.ones(self.M)
        nyq[self.M // 2] = 0.0
        mask = nyq[:, None] * nyq[None, :]
        return self._spectral(1j * kx * mask), self._spectral(1j * ky * mask)

    def at(self, z, chunk=4096):
        """Band-limited (Fourier) interpolation at arbitrary points z."""
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        t, s = self.torus.to_lattice(z.ravel())
        M = self.M
        freq = np.fft.fftfreq(M, 1.0 / M)
        hat = self.hat / M ** 2
        # symmetric treatment of the Nyquist row/column
        nyq = M // 2
        sym = np.ones(M)
        sym[nyq] = 0.5
        freq_ext = np.concatenate([freq, [float(nyq)]])
        hat_e = np.zeros((M + 1, M + 1), dtype=complex)
        hat_e[:M, :M] = hat
        hat_e[M, :M] = hat[nyq, :]
        hat_e[:M, M] = hat[:, nyq]
        hat_e[M, M] = hat[nyq, nyq]
        w = np.concatenate([sym, [0.5]])
        hat_e = hat_e * w[:, None] * w[None, :]
        out = np.empty(t.size, dtype=complex)
        for k in range(0, t.size, chunk):
            tt = t[k:k + chunk] + 0.5
            ss = s[k:k + chunk] + 0.5
            Et = np.exp(2j * np.pi * np.outer(tt, freq_ext))
            Es = np.exp(2j * np.pi * np.outer(ss, freq_ext))
            out[k:k + chunk] = np.einsum("pk,pk->p", Et @ hat_e, Es)
        out = out.reshape(shape)
        return out.real if self.is_real else out


def solve_poisson(f, tol=1e-10):
    """Zero-mean u with -Laplace(u) = f for zero-mean periodic data f."""
    _check_grid(f.M)
    scale = max(f.max_abs(), 1e-300)
    if abs(f.mean) > tol * scale:
        raise NonZeroMean(f"source mean {abs(f.mean):.3e} exceeds {tol:g} * max|f|", "mean")
    kx, ky = f.torus.wavevectors(f.M)
    k2 = kx ** 2 + ky ** 2
    k2[0, 0] = 1.0
    hat = f.hat / k2
    hat[0, 0] = 0.0
    v = np.fft.ifft2(hat)
    return PeriodicField(f.torus, v.real if f.is_real else v)


def integrate(f):
    """Trapezoidal integral over the fundamental domain (area times grid mean)."""
    return f.torus.area * f.mean


def contour_integral(g, path, tol=1e-10, poles=(), clearance=None, torus=None, limit=200):
    """Integral of g along a polyline; returns (value, error estimate)."""
    path = [complex(p) for p in path]
    if clearance is None:
        clearance = 1e-3 * (torus.diameter if torus is not None else 1.0)
    for a, b in zip(path[:-1], path[1:]):
        for p in poles:
            d = _segment_distance(complex(p), a, b)
            if d < clearance:
                raise PoleOnPath(f"pole {p} within {d:.2e} of the path", "path")
    total = 0j
    err = 0.0
    for a, b in zip(path[:-1], path[1:]):
        L = b - a
        val, e = _integrate.quad(lambda x: g(a + L * x) * L, 0.0, 1.0,
                                 epsabs=tol / max(len(path) - 1, 1), epsrel=0.0,
                                 limit=limit, complex_func=True)
        total += val
        err += abs(e)
    if err > tol:
        raise ToleranceNotMet(f"error estimate {err:.2e} above {tol:g}", "contour_integral")
    return total, err


def _segment_distance(p, a, b):
    L = b - a
    if L == 0:
        return abs(p - a)
    x = ((p - a) * L.conjugate()).real / abs(L) ** 2
    x = min(max(x, 0.0), 1.0)
    return abs(p - (a + x * L))


def polygon(center, radius, n=16):
    """Closed counter-clockwise n-gon, used as a polyline contour."""
    ang = 2 * np.pi * np.arange(n + 1) / n
    return list(center + radius * np.exp(1j * ang))


# ---------------------------------------------------------------------------
# quadrature helpers

def smooth_step(r, r0, r1, order=8):
    """C^order cut-off: 1 for r <= r0, 0 for r >= r1; returns (chi, chi', chi'')."""
    w = r1 - r0
    x = np.clip((np.asarray(r, dtype=float) - r0) / w, 0.0, 1.0)
    k = order
    B = special.beta(k + 1, k + 1)
    chi = 1.0 - special.betainc(k + 1, k + 1, x)
    d1 = -(x ** k) * (1 - x) ** k / B / w
    d2 = -k * (x ** (k - 1) * (1 - x) ** k - x ** k * (1 - x) ** (k - 1)) / B / w ** 2
    return chi, d1, d2


def gauss_parallelogram(torus, n=64, panels=1):
    """Tensor Gauss-Legendre nodes and weights covering the fundamental domain."""
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(-0.5, 0.5, panels + 1)
    ts, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        ts.append(lo + (hi - lo) * (x + 1) / 2)
        ws.append(w * (hi - lo) / 2)
    t = np.concatenate(ts)
    wt = np.concatenate(ws)
    z = torus.from_lattice(t[:, None], t[None, :])
    W = wt[:, None] * wt[None, :] * torus.area
    return z.ravel(), W.ravel()


def polar_patch(center, radius, order=16, n_angle=96, levels=24, ratio=0.5):
    """Polar quadrature on a disk, geometrically graded towards the center."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate([[0.0], radius * ratio ** np.arange(levels, -1, -1)])
    rs, wr = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        rs.append(lo + (hi - lo) * (x + 1) / 2)
        wr.append(w * (hi - lo) / 2)
    r = np.concatenate(rs)
    wr = np.concatenate(wr) * r
    th = 2 * np.pi * np.arange(n_angle) / n_angle
    z = center + r[:, None] * np.exp(1j * th[None, :])
    W = wr[:, None] * np.full(n_angle, 2 * np.pi / n_angle)[None, :]
    return z.ravel(), W.ravel()


def split_quadrature(torus, f_smooth_grid, f_point, centers, r0, r1, M, **patch):
    """Integral of a periodic function that is sharp only near `centers`.

    The grid part integrates f*(1 - sum chi) with the trapezoid rule, the
    remainder f*chi is integrated on graded polar patches.  `f_smooth_grid`
    are the grid samples of f, `f_point` evaluates f at arbitrary points.
    """
    Z = torus.grid(M)
    chi_sum = np.zeros(Z.shape)
    for c in centers:
        d = np.abs(torus.wrap(Z - c))
        chi_sum += smooth_step(d, r0, r1)[0]
    grid_part = torus.area * np.mean(f_smooth_grid * (1 - chi_sum))
    patch_part = 0.0
    for c in centers:
        zp, wp = polar_patch(c, r1, **patch)
        chi = smooth_step(np.abs(zp - c), r0, r1)[0]
        patch_part += np.sum(f_point(zp) * chi * wp)
    return grid_part + patch_part
