"""The holomorphic profile H, the meromorphic H_0 = H / prod (z - xi_l)^(n_l+2),
the residue-killing constants c_0^l and the map sigma_0 with its local roots q_0.

Everything is built from log QT(w), where QT(w) = exp(pi zeta^2 / 2 Im tau)
theta1(pi zeta) / eta is the entire function with |QT(w)| = exp(-2 pi G(w) +
pi |w|^2 / (2 |Omega|)).  In these terms

    H_0(z) = prod_j QT(z - p_j)^{n_j} prod_l QT(z - xi_l)^{-2(n_l+1)}
             * exp(pi z conj(P) / |Omega| + C / 2)

with P, C fixed by the positions, which gives |H_0|^2 = e^{u_0 + 8 pi sum (n_l+1) G(., xi_l)}.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BalanceViolated, ResidueNotCancelled, SeriesDegreeInsufficient
from .green import GreenData
from .series import LocalSeries, cauchy_series
from .theta import log_eta, log_theta1
from .torus_core import contour_integral, polygon

SERIES_DEGREE = 48
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _lattice_images(torus, k=2):
    n = np.arange(-k, k + 1)
    return (n[:, None] * torus.omega1 + n[None, :] * torus.omega2).ravel()


@dataclass(frozen=True, eq=False)
class ProfileData:
    torus: object
    config: object
    green: GreenData
    degree: int = SERIES_DEGREE
    phase: float = 0.0

    def __post_init__(self):
        if not self.config.balance_ok():
            raise BalanceViolated(
                f"N = {self.config.N} but 2 sum(n_l + 1) = {2 * sum(n + 1 for n in self.config.orders)}", "N")

    # -- geometry ---------------------------------------------------------
    @property
    def centers(self):
        return [complex(c) for c in self.config.centers]

    @property
    def orders(self):
        return list(self.config.orders)

    @property
    def m(self):
        return len(self.centers)

    @cached_property
    def _powers(self):
        conc = set(self.config.concentration)
        return [(p, n - 2 * (n + 1) * (i in conc)) for i, (p, n) in enumerate(self.config.points)]

    @cached_property
    def series_radius(self):
        """Half the distance from xi_l to the nearest other pole or lattice image."""
        out = []
        lat = _lattice_images(self.torus)
        for l, c in enumerate(self.centers):
            d = [abs(w) for w in lat if abs(w) > 0]
            for k, c2 in enumerate(self.centers):
                if k != l:
                    d.extend(np.abs(c - c2 - lat))
            out.append(0.5 * min(d))
        return out

    # -- log QT -----------------------------------------------------------
    @cached_property
    def _basis(self):
        w1, w2 = self.torus.reduced_basis
        tau = w2 / w1
        return w1, tau, log_eta(tau)

    def _log_qt(self, w):
        w1, tau, le = self._basis
        zeta = np.asarray(w, dtype=complex) / w1
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.pi * zeta ** 2 / (2 * tau.imag) + log_theta1(zeta, tau) - le
        # exact lattice points: a large negative log keeps zeros at zero and poles infinite
        return np.where(np.isfinite(val), val, -1e3)

    def _log_e(self, w):
        """log(QT(w) / w), regular at w = 0."""
        w1, tau, le = self._basis
        w = np.asarray(w, dtype=complex)
        small = np.abs(w) < 1e-14 * abs(w1)
        ws = np.where(small, 1.0, w)
        val = self._log_qt(np.where(small, 1.0, w)) - np.log(ws)
        val0 = np.log(2 * np.pi) + 2 * le - np.log(w1)
        return np.where(small, val0, val)

    @cached_property
    def _linear(self):
        A = self.torus.area
        P = sum(pw * p for p, pw in self._powers)
        C = -(np.pi / A) * sum(pw * abs(p) ** 2 for p, pw in self._powers)
        return np.pi / A * np.conj(P), C / 2

    def _log_raw(self, z, skip=None):
        z = np.asarray(z, dtype=complex)
        a, b = self._linear
        acc = a * z + b
        for i, (p, pw) in enumerate(self._powers):
            if pw == 0:
                continue
            if i == skip:
                acc = acc + pw * self._log_e(z - p)
            else:
                acc = acc + pw * self._log_qt(z - p)
        return acc

    @cached_property
    def gauge(self):
        """Phase making H(xi_1) real and positive (H = H_0 prod (z - xi_l)^(n_l+2)),
        rotated further by the optional extra `phase`."""
        if not self.m:
            return self.phase
        c = self.centers[0]
        val = self._log_raw(c, skip=self.config.concentration[0])
        for k, c2 in enumerate(self.centers[1:], start=1):
            val = val + (self.orders[k] + 2) * np.log(c - c2)
        return -complex(val).imag + self.phase

    def log_H0(self, z):
        return self._log_raw(z) + 1j * self.gauge

    def H0(self, z):
        return np.exp(self.log_H0(z))

    def H_local(self, l, z):
        """H^l(z) = H_0(z) (z - xi_l)^(n_l+2), holomorphic near xi_l."""
        return np.exp(self._log_raw(z, skip=self.config.concentration[l]) + 1j * self.gauge)

    def H_full(self, z):
        """H(z) = H_0(z) prod_l (z - xi_l)^(n_l+2), holomorphic in the domain."""
        z = np.asarray(z, dtype=complex)
        if not self.m:
            return self.H0(z)
        out = self.H_local(0, z)
        for k in range(1, self.m):
            out = out * (z - self.centers[k]) ** (self.orders[k] + 2)
        return out

    def P_other(self, l, z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for k, c in enumerate(self.centers):
            if k != l:
                out = out * (z - c) ** (self.orders[k] + 2)
        return out

    @cached_property
    def H_series(self):
        return [cauchy_series(lambda z, l=l: self.H_local(l, z), c, r, self.degree, n=4 * self.degree + 64)
                for l, (c, r) in enumerate(zip(self.centers, self.series_radius))]

    @cached_property
    def H_full_series(self):
        out = []
        for l, c in enumerate(self.centers):
            r = self.series_radius[l]
            out.append(cauchy_series(self.H_full, c, r, self.degree, n=4 * self.degree + 64))
        return out

    # -- c_0 and the integrand ------------------------------------------------
    @cached_property
    def c0(self):
        out = []
        for l, (c, n) in enumerate(zip(self.centers, self.orders)):
            a = self.H_series[l].coeffs
            out.append(complex(a[n + 1] / (a[0] * self.P_other(l, c))))
        return out

    def exp_factor(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for l, (c, n) in enumerate(zip(self.centers, self.orders)):
            if self.c0[l] != 0:
                acc = acc + self.c0[l] * (z - c) ** (n + 1) * self.P_other(l, z)
        return np.exp(-acc)

    def integrand(self, z):
        """H_0(z) exp(-sum c_0^l (z - xi_l)^(n_l+1) prod_{l' != l} (z - xi_l')^(n_l'+2))."""
        return self.H0(z) * self.exp_factor(z)

    @cached_property
    def laurent_series(self):
        """Taylor series at xi_l of (z - xi_l)^(n_l+2) times the integrand."""
        return [cauchy_series(lambda z, l=l: self.H_local(l, z) * self.exp_factor(z), c, r,
                              self.degree, n=4 * self.degree + 64)
                for l, (c, r) in enumerate(zip(self.centers, self.series_radius))]

    @property
    def alpha0(self):
        return [complex(self.H_series[l].coeffs[0] / (n + 1)) for l, n in enumerate(self.orders)]

    def residues(self):
        return [complex(self.laurent_series[l].coeffs[n + 1]) for l, n in enumerate(self.orders)]

    def loop_residue(self, l, radius=None, sides=64):
        """Closed polygon integral of the integrand around xi_l."""
        c = self.centers[l]
        r = 0.5 * self.series_radius[l] if radius is None else radius
        val, _ = contour_integral(self.integrand, polygon(c, r, sides), tol=1e-9)
        return complex(val)

    def check_residues(self, tol=1e-7):
        for l in range(self.m):
            v = self.loop_residue(l)
            scale = max(1.0, abs(self.H_series[l].coeffs[0]))
            if abs(v) > tol * scale:
                raise ResidueNotCancelled(f"closed-loop integral {abs(v):.2e} at xi_{l}", "c0")
        return True

    # -- principal parts and the regular remainder -----------------------------
    def _pp(self, l, w, antiderivative=False):
        n = self.orders[l]
        s = self.laurent_series[l].coeffs
        d = np.asarray(w, dtype=complex) - self.centers[l]
        out = np.zeros_like(d)
        for k in range(n + 1):
            if antiderivative:
                out = out + s[k] * d ** (k - n - 1) / (k - n - 1)
            else:
                out = out + s[k] * d ** (k - n - 2)
        return out

    def regular_part(self, w):
        """Integrand minus all principal parts (residues are zero): analytic on the domain."""
        w = np.asarray(w, dtype=complex)
        out = np.empty(w.shape, dtype=complex)
        near = np.full(w.shape, -1)
        for l, c in enumerate(self.centers):
            near[np.abs(w - c) < 0.5 * self.series_radius[l]] = l
        far = near < 0
        if np.any(far):
            wf = w[far]
            val = self.integrand(wf)
            for l in range(self.m):
                val = val - self._pp(l, wf)
            out[far] = val
        for l in range(self.m):
            sel = near == l
            if not np.any(sel):
                continue
            n = self.orders[l]
            ws = w[sel]
            d = ws - self.centers[l]
            tail = self.laurent_series[l].coeffs[n + 2:]
            val = np.zeros_like(d)
            for c in tail[::-1]:
                val = val * d + c
            for k in range(self.m):
                if k != l:
                    val = val - self._pp(k, ws)
            out[sel] = val
        return out

    def principal_antiderivative(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for l in range(self.m):
            out = out + self._pp(l, z, antiderivative=True)
        return out

    @cached_property
    def F_constant(self):
        """Additive constant making the Laurent constant of F at xi_1 vanish."""
        c = self.centers[0]
        return -sum(complex(self._pp(l, c, antiderivative=True)) for l in range(1, self.m))

    def regular_integral(self, z, nodes=48):
        """Integral of the regular part from xi_1 to z along a straight segment."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        x, wts = np.polynomial.legendre.leggauss(nodes)
        a = self.centers[0]
        out = np.empty(z.shape, dtype=complex)
        flat = z.ravel()
        res = np.empty(flat.shape, dtype=complex)
        for k in range(0, flat.size, 2048):
            b = flat[k:k + 2048]
            pts = a + (b[:, None] - a) * (x[None, :] + 1) / 2
            res[k:k + 2048] = (self.regular_part(pts) @ wts) * (b - a) / 2
        out[...] = res.reshape(z.shape)
        return out

    def F(self, z):
        """Antiderivative of the integrand; sigma_0 = -1 / F."""
        z = np.asarray(z, dtype=complex)
        return self.principal_antiderivative(z) + self.F_constant + self.regular_integral(z).reshape(z.shape)

    def F_from_regular(self, z, regular):
        return self.principal_antiderivative(z) + self.F_constant + regular

    def sigma0(self, z):
        z = np.asarray(z, dtype=complex)
        for c in self.centers:
            if np.any(np.abs(z - c) == 0):
                break
        else:
            return -1.0 / self.F(z)
        out = np.zeros(z.shape, dtype=complex)
        at = np.zeros(z.shape, dtype=bool)
        for c in self.centers:
            at |= np.abs(z - c) == 0
        out[~at] = -1.0 / self.F(z[~at])
        return out

    def sigma0_prime(self, z, F=None):
        z = np.asarray(z, dtype=complex)
        F = self.F(z) if F is None else F
        return self.integrand(z) / F ** 2

    def sigma0_on_grid(self, M):
        """(sigma_0, sigma_0') sampled on the M x M grid, by cumulative edge integration."""
        cache = self.__dict__.setdefault("_grid_cache", {})
        if M not in cache:
            cache[M] = _grid_sigma(self, M)
        return cache[M]

    # -- local data at the concentration points --------------------------------
    @cached_property
    def rest_constants(self):
        """Laurent constant of F at each xi_l (zero at xi_1 by construction)."""
        out = []
        for l, c in enumerate(self.centers):
            val = self.F_constant + complex(self.regular_integral(c)[0])
            for k in range(self.m):
                if k != l:
                    val += complex(self._pp(k, c, antiderivative=True))
            out.append(val)
        return out

    @cached_property
    def phi_series(self):
        """Series of F(z) (z - xi_l)^(n_l+1) at xi_l."""
        out = []
        for l, (c, n) in enumerate(zip(self.centers, self.orders)):
            s = self.laurent_series[l].coeffs
            k = np.arange(len(s))
            coef = np.empty_like(s)
            mask = k != n + 1
            coef[mask] = s[mask] / (k[mask] - n - 1)
            coef[n + 1] = self.rest_constants[l]
            out.append(LocalSeries(c, coef, self.series_radius[l]))
        return out

    @cached_property
    def q0_series(self):
        """q_0 with sigma_0 = q_0^(n_l+1) near xi_l, q_0(xi_l) = 0."""
        out = []
        for l, n in enumerate(self.orders):
            root = (-self.phi_series[l]).reciprocal().power(1.0 / (n + 1))
            out.append(root.shift_power(1))
        return out

    @cached_property
    def q0_inverse_series(self):
        return [q.revert() for q in self.q0_series]

    @cached_property
    def sigma_series(self):
        """sigma_0 = q_0^(n_l+1) as a series at xi_l."""
        out = []
        for q, n in zip(self.q0_series, self.orders):
            s = q
            for _ in range(n):
                s = s * q
            out.append(s)
        return out

    @cached_property
    def local_radius(self):
        """Largest tested radius on which the local sigma_0 series matches -1/F."""
        out = []
        th = np.exp(2j * np.pi * np.arange(32) / 32)
        for l, c in enumerate(self.centers):
            r_ok = None
            for frac in (0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2, 0.15, 0.1, 0.05):
                r = frac * self.series_radius[l]
                z = c + r * th
                ser = self.sigma_series[l](z)
                ref = -1.0 / self.F(z)
                if np.max(np.abs(ser / ref - 1)) < 1e-11:
                    r_ok = r
                    break
            if r_ok is None:
                raise SeriesDegreeInsufficient(f"sigma_0 series unreliable near xi_{l}", "sigma_0")
            out.append(r_ok)
        return out

    def sigma_pair(self, z):
        """(sigma_0, sigma_0') at arbitrary points: local series near xi_l, antiderivative elsewhere."""
        z = np.asarray(z, dtype=complex)
        near = np.full(z.shape, -1)
        for l, c in enumerate(self.centers):
            near[np.abs(z - c) < self.local_radius[l]] = l
        s = np.empty(z.shape, dtype=complex)
        ds = np.empty(z.shape, dtype=complex)
        far = near < 0
        if np.any(far):
            F = self.F(z[far])
            s[far] = -1.0 / F
            ds[far] = self.integrand(z[far]) / F ** 2
        for l in range(self.m):
            sel = near == l
            if np.any(sel):
                s[sel] = self.sigma_series[l](z[sel])
                ds[sel] = self.sigma_series[l].derivative()(z[sel])
        return s, ds

    def sigma0_local(self, l, z):
        return self.q0_series[l](z) ** (self.orders[l] + 1)

    def local_mask(self, z, fraction=0.25):
        """Index of the concentration point whose series disk holds z, or -1."""
        z = np.asarray(z, dtype=complex)
        near = np.full(z.shape, -1)
        for l, c in enumerate(self.centers):
            near[np.abs(z - c) < fraction * self.series_radius[l]] = l
        return near


def build_H(config, greens, phase=0.0):
    """ProfileData carrying H, H_0, H^l and their series at the concentration points."""
    if not config.balance_ok():
        raise BalanceViolated(f"N = {config.N} violates N = 2 sum(n_l + 1)", "N")
    prof = ProfileData(greens.torus, config, greens, phase=phase)
    prof.H_series
    return prof


def build_sigma0(profile, check=True):
    """Populate c_0, the Laurent data, sigma_0 and q_0; verify the residues vanish."""
    profile.laurent_series
    if check:
        profile.check_residues()
    profile.q0_series
    profile.q0_inverse_series
    return profile


# -- grid evaluation ------------------------------------------------------------

def _edge_integrals(prof, a, b):
    """Gauss-Legendre integrals of the regular part over the segments a -> b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    pts = (a + b)[..., None] / 2 + (b - a)[..., None] / 2 * _GL_X
    vals = prof.regular_part(pts)
    return (vals @ _GL_W) * (b - a) / 2


def _grid_regular_integral(prof, M):
    torus = prof.torus
    Z = torus.grid(M)
    t, s = torus.to_lattice(prof.centers[0])
    i0 = int(np.clip(np.round((t + 0.5) * M), 0, M - 1))
    j0 = int(np.clip(np.round((s + 0.5) * M), 0, M - 1))
    start = complex(prof.regular_integral(Z[i0, j0])[0])
    col = np.empty(M, dtype=complex)
    col[j0] = start
    up = _edge_integrals(prof, Z[i0, j0:-1], Z[i0, j0 + 1:])
    col[j0 + 1:] = start + np.cumsum(up)
    down = _edge_integrals(prof, Z[i0, 1:j0 + 1], Z[i0, :j0])[::-1]
    col[:j0] = (start + np.cumsum(down))[::-1]
    I = np.empty((M, M), dtype=complex)
    I[i0] = col
    right = _edge_integrals(prof, Z[i0:-1], Z[i0 + 1:])
    I[i0 + 1:] = col + np.cumsum(right, axis=0)
    left = _edge_integrals(prof, Z[1:i0 + 1], Z[:i0])[::-1]
    I[:i0] = (col + np.cumsum(left, axis=0))[::-1]
    return I


def _grid_sigma(prof, M):
    Z = prof.torus.grid(M)
    I = _grid_regular_integral(prof, M)
    near = np.full(Z.shape, -1)
    for l, c in enumerate(prof.centers):
        near[np.abs(Z - c) < prof.local_radius[l]] = l
    far = near < 0
    F = prof.F_from_regular(Z[far], I[far])
    sigma = np.empty(Z.shape, dtype=complex)
    dsigma = np.empty(Z.shape, dtype=complex)
    sigma[far] = -1.0 / F
    dsigma[far] = prof.integrand(Z[far]) / F ** 2
    for l in range(prof.m):
        sel = near == l
        ser = prof.sigma_series[l]
        sigma[sel] = ser(Z[sel])
        dsigma[sel] = ser.derivative()(Z[sel])
    return sigma, dsigma
