"""Approximate solutions built from singular Liouville bubbles.

For each concentration point xi_l the bubble is
    U_l = log 8 delta^2 / (delta^2 + |sigma_0 - a_l|^2)^2,
and PU_l is its periodic projection.  Near xi_l the source of PU_l is too
sharp for the grid, so PU_l is split as

    PU_l = psi_l Phi_l + P[ chi_l f_l (1 - psi_l) + 2 grad psi_l . grad Phi_l + Phi_l lap psi_l ] + const

with Phi_l = U_l - log 8 delta^2 + 4 log|g_l| smooth near xi_l (g_l = (sigma - a_l) / prod (z - a_k)),
psi_l a C^8 radial cut-off inside the disk where the local sigma_0 series is valid,
and P the spectral inverse of -Laplace on zero-mean data.  Integrals of sharp
integrands use the trapezoid rule on the grid away from xi_l and graded
polar patches near xi_l.
"""
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import ConfigInvalid, DiscriminantNegative
from .green import GreenData
from .torus_core import (PeriodicField, gauss_parallelogram, polar_patch,
                         smooth_step, solve_poisson)

PATCH = dict(order=16, n_angle=128, levels=30, ratio=0.5)


@dataclass(frozen=True)
class AnsatzParams:
    delta: float
    a: tuple = ()
    epsilon: float = 0.0
    eta_cutoff: float = None
    gamma: float = 0.5

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigInvalid("delta must be positive", "delta")
        if not 0 < self.gamma < 1:
            raise ConfigInvalid("gamma must lie in (0, 1)", "gamma")
        if self.epsilon < 0:
            raise ConfigInvalid("epsilon must be non-negative", "epsilon")
        object.__setattr__(self, "a", tuple(complex(x) for x in self.a))

    def a_for(self, m):
        return self.a if self.a else (0j,) * m

    def validate(self, profile):
        a = self.a_for(profile.m)
        if len(a) != profile.m:
            raise ConfigInvalid(f"need {profile.m} values of a, got {len(a)}", "a")
        for l, al in enumerate(a):
            if abs(al) >= rho_max(profile, l):
                raise ConfigInvalid(f"|a_{l}| = {abs(al):.3g} outside the local sigma_0 disk", "a")
        if profile.m >= 2:
            if self.eta_cutoff is None:
                raise ConfigInvalid("eta_cutoff is required for several concentration points", "eta_cutoff")
            if self.eta_cutoff >= max_eta(profile):
                raise ConfigInvalid(f"eta_cutoff must be below {max_eta(profile):.3g}", "eta_cutoff")


def rho_max(profile, l):
    """Radius of a disk around 0 whose sigma_0-preimage near xi_l stays inside the series disk."""
    c = profile.centers[l]
    r = 0.9 * profile.local_radius[l]
    th = np.exp(2j * np.pi * np.arange(64) / 64)
    return float(np.min(np.abs(profile.sigma_series[l](c + r * th))))


def max_eta(profile):
    """Half the minimal distance between concentration points and to the boundary of Omega."""
    torus = profile.torus
    d = []
    for l, c in enumerate(profile.centers):
        t, s = torus.to_lattice(c)
        w1, w2 = torus.omega1, torus.omega2
        h1 = torus.area / abs(w2)
        h2 = torus.area / abs(w1)
        d.extend([(0.5 - abs(t)) * h1, (0.5 - abs(s)) * h2])
        for k, c2 in enumerate(profile.centers):
            if k != l:
                d.append(torus.lattice_distance(c - c2))
    return 0.5 * float(min(d))


def room(profile, l):
    """Distance from xi_l to the boundary of Omega and half the distance to the other centers."""
    torus = profile.torus
    c = profile.centers[l]
    t, s = torus.to_lattice(c)
    d = [(0.5 - abs(t)) * torus.area / abs(torus.omega2), (0.5 - abs(s)) * torus.area / abs(torus.omega1)]
    d += [0.5 * abs(c - c2) for k, c2 in enumerate(profile.centers) if k != l]
    return float(min(d))


def quintic_cutoff(r, eta):
    """1 on [0, eta], 0 beyond 2 eta, C^2 quintic in between."""
    x = np.clip((np.asarray(r, dtype=float) - eta) / eta, 0.0, 1.0)
    return 1.0 - x ** 3 * (10 - 15 * x + 6 * x ** 2)


def nearest_offset(torus, z, c):
    """z - c reduced to the nearest lattice image."""
    d = torus.wrap(np.asarray(z, dtype=complex) - c)
    best = d
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            cand = d + i * torus.omega1 + j * torus.omega2
            best = np.where(np.abs(cand) < np.abs(best), cand, best)
    return best


# -- vortex data ------------------------------------------------------------------

def u0_at(config, greens, z):
    """u_0 = -4 pi sum n_j G(z, p_j); -inf at vortex points."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape)
    for p, n in config.points:
        if n:
            d = greens.torus.lattice_distance(z - p)
            with np.errstate(divide="ignore"):
                val = -4 * np.pi * n * greens.G(np.where(d > 0, z - p, 1e-300))
            out = out + np.where(d > 0, val, -np.inf)
    return out


def exp_u0(config, greens, z):
    with np.errstate(over="ignore"):
        return np.exp(u0_at(config, greens, z))


def build_u0(config, torus, M=256, greens=None):
    """u_0 sampled on the grid; a sample sitting on a vortex point gets its cell average."""
    greens = greens or GreenData(torus)
    Z = torus.grid(M)
    vals = u0_at(config, greens, Z)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        x, w = np.polynomial.legendre.leggauss(12)
        h = 1.0 / M
        dt = h * x / 2
        off = torus.from_lattice(dt[:, None], dt[None, :])
        ww = (w[:, None] * w[None, :]) / 4
        for idx in zip(*np.nonzero(bad)):
            vals[idx] = np.sum(ww * u0_at(config, greens, Z[idx] + off))
    return PeriodicField(torus, vals)


def liouville_profile(z, params, sigma, a=0j):
    """U = log 8 delta^2 / (delta^2 + |sigma(z) - a|^2)^2; sigma may be a callable or values."""
    s = sigma(z) if callable(sigma) else np.asarray(sigma)
    d = params.delta if isinstance(params, AnsatzParams) else float(params)
    return np.log(8 * d ** 2) - 2 * np.log(d ** 2 + np.abs(s - a) ** 2)


def bubble_density(delta, s, ds, a=0j):
    """|sigma'|^2 e^U."""
    return 8 * delta ** 2 * np.abs(ds) ** 2 / (delta ** 2 + np.abs(s - a) ** 2) ** 2


def preimages(profile, l, a):
    """The n_l + 1 solutions of sigma_0(z) = a near xi_l."""
    n = profile.orders[l]
    if a == 0:
        return [profile.centers[l]] * (n + 1)
    inv = profile.q0_inverse_series[l]
    r = abs(a) ** (1.0 / (n + 1))
    ph = np.angle(a) / (n + 1)
    return [complex(inv(r * np.exp(1j * (ph + 2 * np.pi * k / (n + 1))))) for k in range(n + 1)]


# -- the ansatz -------------------------------------------------------------------

@dataclass(eq=False)
class Ansatz:
    """W = sum PU_l on an M x M grid, with pointwise access near the concentration points."""
    profile: object
    params: AnsatzParams
    M: int = 256
    split_fraction: float = 0.9
    patch: dict = field(default_factory=lambda: dict(PATCH))

    def __post_init__(self):
        self.params.validate(self.profile)
        self.torus = self.profile.torus
        self.greens = self.profile.green
        self.a = self.params.a_for(self.profile.m)
        self.ak = [preimages(self.profile, l, al) for l, al in enumerate(self.a)]

    # -- cut-offs ---------------------------------------------------------------
    @cached_property
    def split_radii(self):
        out = []
        for l, c in enumerate(self.profile.centers):
            r1 = self.split_fraction * room(self.profile, l)
            if self.profile.m >= 2:
                r1 = min(r1, self.params.eta_cutoff)
            out.append((0.3 * r1, r1))
        return out

    def chi(self, l, r):
        if self.profile.m == 1:
            return np.ones_like(np.asarray(r, dtype=float))
        return quintic_cutoff(r, self.params.eta_cutoff)

    # -- local quantities near xi_l ---------------------------------------------------
    def _local_sigma(self, l, z):
        """(sigma_0, sigma_0') near xi_l, beyond the series disk as well."""
        return self.profile.sigma_pair(np.asarray(z, dtype=complex))

    def _log_g(self, l, z, s):
        """log|g_l| = log|sigma - a_l| - sum log|z - a_k|, regular at xi_l when a_l = 0."""
        n = self.profile.orders[l]
        if self.a[l] == 0:
            return (n + 1) * np.log(np.abs(self._root_series[l](z)))
        out = np.log(np.abs(s - self.a[l]))
        for ak in self.ak[l]:
            out = out - np.log(np.abs(z - ak))
        return out

    def _series_phi(self, l, z):
        d = self.params.delta
        s, ds = self._local_sigma(l, z)
        sa = s - self.a[l]
        val = -2 * np.log(d ** 2 + np.abs(sa) ** 2) + 4 * self._log_g(l, z, s)
        dz = -2 * ds * np.conj(sa) / (d ** 2 + np.abs(sa) ** 2)
        if self.a[l] == 0:
            root = self._root_series[l]
            dz = dz + 2 * (self.profile.orders[l] + 1) * root.derivative()(z) / root(z)
        else:
            dz = dz + 2 * ds / sa
            for ak in self.ak[l]:
                dz = dz - 2 / (z - ak)
        return val, dz

    def _antiderivative_phi(self, l, z, F, dF):
        # sigma - a = -(1 + a F) / F, written so that poles of sigma_0 cause no cancellation
        d, a = self.params.delta, self.a[l]
        h = 1 + a * F
        den = d ** 2 * np.abs(F) ** 2 + np.abs(h) ** 2
        val = -2 * np.log(den) + 4 * np.log(np.abs(h))
        dz = -2 * dF * (d ** 2 * np.conj(F) + a * np.conj(h)) / den + 2 * a * dF / h
        for ak in self.ak[l]:
            val = val - 4 * np.log(np.abs(z - ak))
            dz = dz - 2 / (z - ak)
        return val, dz

    def phi_local(self, l, z, sigma=None):
        """Phi_l - log 8 delta^2 and its complex derivative d/dz at points z near xi_l.

        Inside the series disk the local sigma_0 series is used; further out the
        antiderivative F = -1/sigma_0 (taken from `sigma` = (s, ds) when given)."""
        z = np.asarray(z, dtype=complex)
        val = np.empty(z.shape)
        dz = np.empty(z.shape, dtype=complex)
        near = np.abs(z - self.profile.centers[l]) < self.profile.local_radius[l]
        if np.any(near):
            val[near], dz[near] = self._series_phi(l, z[near])
        far = ~near
        if np.any(far):
            if sigma is None:
                F = self.profile.F(z[far])
                dF = self.profile.integrand(z[far])
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    F = -1.0 / sigma[0][far]
                    dF = sigma[1][far] * F ** 2
            val[far], dz[far] = self._antiderivative_phi(l, z[far], F, dF)
        return val, dz

    @cached_property
    def _root_series(self):
        """q_0 / (z - xi_l), nonvanishing near xi_l."""
        out = []
        for q in self.profile.q0_series:
            out.append(type(q)(q.base, np.concatenate([q.coeffs[1:], [0]]), q.radius))
        return out

    # -- grid data --------------------------------------------------------------
    @cached_property
    def Z(self):
        return self.torus.grid(self.M)

    @cached_property
    def _sigma_grid(self):
        return self.profile.sigma0_on_grid(self.M)

    @cached_property
    def _offsets(self):
        return [nearest_offset(self.torus, self.Z, c) for c in self.profile.centers]

    def density_grid(self, l):
        """chi_l |sigma_0'|^2 e^{U_l} on the grid."""
        s, ds = self._sigma_grid
        f = bubble_density(self.params.delta, s, ds, self.a[l])
        return f * self.chi(l, np.abs(self._offsets[l]))

    def density_at(self, l, z, local=True):
        """chi_l |sigma'|^2 e^{U_l} at points z (taken near xi_l when local)."""
        if local:
            s, ds = self._local_sigma(l, z)
        else:
            s, ds = self.profile.sigma_pair(z)
        f = bubble_density(self.params.delta, s, ds, self.a[l])
        return f * self.chi(l, np.abs(z - self.profile.centers[l]))

    @cached_property
    def _split_source(self):
        """Grid source of the smooth part, summed over l, and the psi Phi pieces."""
        src = np.zeros(self.Z.shape)
        near = np.zeros(self.Z.shape)
        for l, c in enumerate(self.profile.centers):
            r0, r1 = self.split_radii[l]
            off = self._offsets[l]
            r = np.abs(off)
            psi, d1, d2 = smooth_step(r, r0, r1)
            src += self.density_grid(l) * (1 - psi)
            inside = r < r1
            zl = c + off[inside]
            sg = self._sigma_grid
            phi, dphi = self.phi_local(l, zl, (sg[0][inside], sg[1][inside]))
            rr = np.maximum(r[inside], 1e-300)
            grad = 4 * d1[inside] / rr * np.real(off[inside] * dphi)
            lap = phi * (d2[inside] + d1[inside] / rr)
            src[inside] += grad + lap
            near[inside] += psi[inside] * phi
        return src, near

    @cached_property
    def smooth_part(self):
        src, _ = self._split_source
        f = PeriodicField(self.torus, src)
        return solve_poisson(f - f.mean)

    @cached_property
    def _near_mean(self):
        """Mean over Omega of sum psi_l Phi_l, by polar quadrature."""
        tot = 0.0
        for l, c in enumerate(self.profile.centers):
            r0, r1 = self.split_radii[l]
            zp, wp = polar_patch(c, r1, **self.patch)
            psi = smooth_step(np.abs(zp - c), r0, r1)[0]
            phi, _ = self.phi_local(l, zp)
            tot += np.sum(psi * phi * wp)
        return tot / self.torus.area

    @cached_property
    def W(self):
        """The ansatz W = sum_l PU_l on the grid (zero mean)."""
        _, near = self._split_source
        return PeriodicField(self.torus, near + self.smooth_part.values - self._near_mean)

    def PU(self):
        return self.W

    def W_at(self, z):
        """W at arbitrary points (Fourier interpolation of the smooth part plus the exact near part)."""
        z = np.asarray(z, dtype=complex)
        out = self.smooth_part.at(z) - self._near_mean
        for l, c in enumerate(self.profile.centers):
            r0, r1 = self.split_radii[l]
            off = nearest_offset(self.torus, z, c)
            r = np.abs(off)
            inside = r < r1
            if np.any(inside):
                psi = smooth_step(r[inside], r0, r1)[0]
                phi, _ = self.phi_local(l, c + off[inside])
                out[inside] = out[inside] + psi * phi
        return out

    # -- integrals ----------------------------------------------------------------
    def _split_integral(self, grid_vals, point_fn):
        """Integral over Omega of a function sharp near the xi_l: grid away, polar patches near."""
        total = 0.0
        wgt = np.ones(self.Z.shape)
        for l in range(self.profile.m):
            r0, r1 = self.split_radii[l]
            wgt = wgt - smooth_step(np.abs(self._offsets[l]), r0, r1)[0]
        total = self.torus.area * np.mean(grid_vals * wgt)
        for l, c in enumerate(self.profile.centers):
            r0, r1 = self.split_radii[l]
            zp, wp = polar_patch(c, r1, **self.patch)
            psi = smooth_step(np.abs(zp - c), r0, r1)[0]
            total = total + np.sum(point_fn(l, zp) * psi * wp)
        return total

    @cached_property
    def _patch_W(self):
        out = []
        for l, c in enumerate(self.profile.centers):
            zp, wp = polar_patch(c, self.split_radii[l][1], **self.patch)
            out.append((zp, self.W_at(zp)))
        return out

    def _patch_values(self, l, zp):
        zq, Wq = self._patch_W[l]
        if zq.shape == zp.shape and np.all(zq == zp):
            return Wq
        return self.W_at(zp)

    @cached_property
    def exp_u0_grid(self):
        return exp_u0(self.profile.config, self.greens, self.Z)

    @cached_property
    def mass(self):
        """sum_l integral of chi_l |sigma'|^2 e^{U_l}."""
        return float(sum(self._split_integral(self.density_grid(l),
                                              lambda k, z, l=l: self.density_at(l, z) if k == l else 0.0)
                         for l in range(self.profile.m)))

    @cached_property
    def exp_integrals(self):
        """(integral e^{u_0 + W}, integral e^{2 u_0 + 2 W})."""
        cfg, g = self.profile.config, self.greens
        e1 = self.exp_u0_grid * np.exp(self.W.values)

        def pt(l, z, power):
            return (exp_u0(cfg, g, z) * np.exp(self._patch_values(l, z))) ** power

        I1 = self._split_integral(e1, lambda l, z: pt(l, z, 1))
        I2 = self._split_integral(e1 ** 2, lambda l, z: pt(l, z, 2))
        return float(I1), float(I2)

    def discriminant(self, epsilon=None):
        eps = self.params.epsilon if epsilon is None else epsilon
        I1, I2 = self.exp_integrals
        N = self.profile.config.N
        return I1 ** 2 - 16 * np.pi * N * eps ** 2 * I2

    # -- residual -----------------------------------------------------------------
    def _residual_from(self, density_sum, e1, I1, I2):
        N = self.profile.config.N
        A = self.torus.area
        eps = self.params.epsilon
        disc = I1 ** 2 - 16 * np.pi * N * eps ** 2 * I2
        if disc < 0:
            raise DiscriminantNegative(f"discriminant {disc:.3e} < 0", "epsilon")
        lapW = -density_sum + self.mass / A
        R = lapW + 4 * np.pi * N * (e1 / I1 - 1 / A)
        if eps > 0:
            coef = 64 * np.pi ** 2 * N ** 2 * eps ** 2 * I2 / (I1 + np.sqrt(disc)) ** 2
            R = R + coef * (e1 / I1 - e1 ** 2 / I2)
        return R

    @cached_property
    def residual(self):
        """R on the grid as a PeriodicField."""
        dens = sum(self.density_grid(l) for l in range(self.profile.m))
        e1 = self.exp_u0_grid * np.exp(self.W.values)
        I1, I2 = self.exp_integrals
        return PeriodicField(self.torus, self._residual_from(dens, e1, I1, I2))

    def residual_at(self, l, z):
        """R at points near xi_l (only the l-th bubble contributes there)."""
        dens = self.density_at(l, z)
        e1 = exp_u0(self.profile.config, self.greens, z) * np.exp(self.W_at(z))
        I1, I2 = self.exp_integrals
        return self._residual_from(dens, e1, I1, I2)

    def residual_integral(self):
        dens_fn = lambda l, z: self.residual_at(l, z)
        return float(self._split_integral(self.residual.values, dens_fn))

    # -- weighted norm ---------------------------------------------------------------
    def weight(self, s, ds, l=0):
        """(delta^2 + |sigma - a|^2)^{1 + gamma/2} / (delta^gamma (|sigma'|^2 + delta^{2n/(n+1)}))."""
        d, g = self.params.delta, self.params.gamma
        n = self.profile.orders[l]
        return (d ** 2 + np.abs(s - self.a[l]) ** 2) ** (1 + g / 2) / (
            d ** g * (np.abs(ds) ** 2 + d ** (2 * n / (n + 1))))

    def weighted_norm(self, h, h_at=None, refine=True):
        """sup of weight * |h| over the grid, refined on polar patches near each xi_l."""
        s, ds = self._sigma_grid
        if self.profile.m == 1:
            best = float(np.max(self.weight(s, ds) * np.abs(h.values if hasattr(h, "values") else h)))
        else:
            best = float(np.max(self._multi_weight(self.Z) * np.abs(h.values if hasattr(h, "values") else h)))
        if refine and h_at is not None:
            for l, c in enumerate(self.profile.centers):
                zp, _ = polar_patch(c, self.split_radii[l][1], **self.patch)
                if self.profile.m == 1:
                    ss, dss = self._local_sigma(l, zp)
                    w = self.weight(ss, dss, l)
                else:
                    w = self._multi_weight(zp)
                best = max(best, float(np.max(w * np.abs(h_at(l, zp)))))
        return best

    def _multi_weight(self, z):
        """The several-point weight: [sum_l delta^g (|z-xi|^{2n} + delta^{2n/(n+1)}) / (delta^2 + |z-xi|^{2n+2})^{1+g/2}]^{-1}."""
        d, g = self.params.delta, self.params.gamma
        tot = 0.0
        for l, c in enumerate(self.profile.centers):
            n = self.profile.orders[l]
            r = np.abs(nearest_offset(self.torus, z, c))
            tot = tot + d ** g * (r ** (2 * n) + d ** (2 * n / (n + 1))) / (d ** 2 + r ** (2 * n + 2)) ** (1 + g / 2)
        return 1.0 / tot

    def residual_norm(self):
        return self.weighted_norm(self.residual, self.residual_at)

    # -- expansion of PU near the bubble ----------------------------------------------------
    def theta_constant(self, l=0, n_gauss=24, panels=4):
        """Theta = -(1/|Omega|) int log(|sigma - a|^4 / (delta^2 + |sigma - a|^2)^2)."""
        d = self.params.delta
        c = self.profile.centers[l]
        r0, r1 = self.split_radii[l]

        def integrand(s):
            return 2 * np.log1p(d ** 2 / np.abs(s - self.a[l]) ** 2)

        zg, wg = gauss_parallelogram(self.torus, n_gauss, panels)
        s, _ = self.profile.sigma_pair(zg)
        psi = smooth_step(np.abs(zg - c), r0, r1)[0]
        far = np.sum(integrand(s) * (1 - psi) * wg)
        zp, wp = polar_patch(c, r1, **self.patch)
        sp, _ = self._local_sigma(l, zp)
        psi = smooth_step(np.abs(zp - c), r0, r1)[0]
        near = np.sum(integrand(sp) * psi * wp)
        return float((far + near) / self.torus.area)

    def expansion_remainder(self, z, l=0):
        """PU - [U - log 8 delta^2 + 4 log|g| + 8 pi sum_k H(z - a_k) + Theta] at points z of Omega (m = 1)."""
        z = np.asarray(z, dtype=complex)
        d = self.params.delta
        s, ds = self.profile.sigma_pair(z)
        c = self.profile.centers[l]
        near = np.abs(z - c) < self.profile.local_radius[l]
        logg = np.empty(z.shape)
        if np.any(near):
            logg[near] = self._log_g(l, z[near], s[near])
        if np.any(~near):
            zz = z[~near]
            lg = np.log(np.abs(s[~near] - self.a[l]))
            for ak in self.ak[l]:
                lg = lg - np.log(np.abs(zz - ak))
            logg[~near] = lg
        model = -2 * np.log(d ** 2 + np.abs(s - self.a[l]) ** 2) + 4 * logg
        for ak in self.ak[l]:
            model = model + 8 * np.pi * self.greens.H(z - ak)
        return self.W_at(z) - model - self.theta_constant(l)

    def boundary_f(self, z, l=0, panels=16, order=16):
        """f_{a,sigma}(z): boundary integral of dnu(1/|sigma-a|^2) G - 1/|sigma-a|^2 dnu G over the boundary of Omega."""
        torus = self.torus
        w1, w2 = torus.omega1, torus.omega2
        corners = [(-w1 - w2) / 2, (w1 - w2) / 2, (w1 + w2) / 2, (-w1 + w2) / 2]
        if (w2 / w1).imag < 0:
            corners = corners[::-1]
        x, wts = np.polynomial.legendre.leggauss(order)
        pts, wds, nrm = [], [], []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            L = b - a
            for p in range(panels):
                t = (p + (x + 1) / 2) / panels
                pts.append(a + L * t)
                wds.append(wts / 2 / panels * abs(L))
                nrm.append(np.full(order, -1j * L / abs(L)))
        w = np.concatenate(pts)
        ds = np.concatenate(wds)
        nu = np.concatenate(nrm)
        s, sp = self.profile.sigma_pair(w)
        sa = s - self.a[l]
        phi = 1.0 / np.abs(sa) ** 2
        dphi = -sp / sa ** 2 / np.conj(sa)
        dn_phi = 2 * np.real(nu * dphi)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape)
        for i, zz in enumerate(z):
            G = self.greens.G(w - zz)
            dG = green_dz(self.greens, w - zz)
            out[i] = np.sum((dn_phi * G - phi * 2 * np.real(nu * dG)) * ds)
        return out

    # -- kernel elements -----------------------------------------------------------
    def kernel_fields(self, l=0):
        """Z_0, Z (complex) on the grid and their projections PZ_0, PZ (zero mean)."""
        d = self.params.delta
        s, ds = self._sigma_grid
        sa = s - self.a[l]
        den = d ** 2 + np.abs(sa) ** 2
        Z0 = (d ** 2 - np.abs(sa) ** 2) / den
        Z1 = d * sa / den
        PZ0 = self._project_local(l, lambda z: self._z0_local(l, z), self.density_grid(l) * Z0)
        PZr = self._project_local(l, lambda z: self._z1_local(l, z, 0), self.density_grid(l) * Z1.real)
        PZi = self._project_local(l, lambda z: self._z1_local(l, z, 1), self.density_grid(l) * Z1.imag)
        return Z0, Z1, PZ0, (PZr, PZi)

    def _z0_local(self, l, z):
        d = self.params.delta
        s, ds = self._local_sigma(l, z)
        sa = s - self.a[l]
        den = d ** 2 + np.abs(sa) ** 2
        val = (d ** 2 - np.abs(sa) ** 2) / den
        dz = -2 * d ** 2 * ds * np.conj(sa) / den ** 2
        return val, dz

    def _z1_local(self, l, z, part):
        d = self.params.delta
        s, ds = self._local_sigma(l, z)
        sa = s - self.a[l]
        den = d ** 2 + np.abs(sa) ** 2
        val = d * sa / den
        # d/dz of sa / den (sa holomorphic, den = d^2 + sa conj(sa))
        dz = d * (ds / den - sa * ds * np.conj(sa) / den ** 2)
        # d/dz of the conjugate field
        dzc = d * (-np.conj(sa) ** 2 * ds / den ** 2)
        if part == 0:
            return val.real, (dz + dzc) / 2
        return val.imag, (dz - dzc) / 2j

    def _project_local(self, l, local_fn, grid_source):
        """Zero-mean solution of -Laplace P = source - mean, split near xi_l as for PU."""
        c = self.profile.centers[l]
        r0, r1 = self.split_radii[l]
        off = self._offsets[l]
        r = np.abs(off)
        psi, d1, d2 = smooth_step(r, r0, r1)
        src = grid_source * (1 - psi)
        near = np.zeros(r.shape)
        inside = r < r1
        val, dz = local_fn(c + off[inside])
        rr = np.maximum(r[inside], 1e-300)
        src[inside] += 4 * d1[inside] / rr * np.real(off[inside] * dz) + val * (d2[inside] + d1[inside] / rr)
        near[inside] = psi[inside] * val
        zp, wp = polar_patch(c, r1, **self.patch)
        pv, _ = local_fn(zp)
        pmean = np.sum(smooth_step(np.abs(zp - c), r0, r1)[0] * pv * wp) / self.torus.area
        f = PeriodicField(self.torus, src)
        sm = solve_poisson(f - f.mean)
        return PeriodicField(self.torus, near + sm.values - pmean)

    def gram(self, l=0):
        """(int Lap PZ_0 PZ_0, int Lap PZ PZ_0) with Lap PZ = -(density Z - mean)."""
        Z0, Z1, PZ0, (PZr, PZi) = self.kernel_fields(l)
        dens = self.density_grid(l)

        def near_term(zfun):
            def fn(k, z):
                if k != l:
                    return 0.0
                val, _ = zfun(z)
                pz0 = self._pz_at(PZ0, l, z, self._z0_local)
                return -self.density_at(l, z) * val * pz0
            return fn

        g00 = self._split_integral(-dens * Z0 * PZ0.values, near_term(lambda z: self._z0_local(l, z)))
        g10 = self._split_integral(-dens * Z1.real * PZ0.values, near_term(lambda z: self._z1_local(l, z, 0)))
        g11 = self._split_integral(-dens * Z1.imag * PZ0.values, near_term(lambda z: self._z1_local(l, z, 1)))
        return float(g00), complex(g10 + 1j * g11)

    def _pz_at(self, field_, l, z, local_fn):
        # the projected field near xi_l: psi * local value + interpolated smooth remainder
        c = self.profile.centers[l]
        r0, r1 = self.split_radii[l]
        psi = smooth_step(np.abs(z - c), r0, r1)[0]
        val, _ = local_fn(l, z)
        off_grid = self._offsets[l]
        psi_grid = smooth_step(np.abs(off_grid), r0, r1)[0]
        inside = np.abs(off_grid) < r1
        near_grid = np.zeros(off_grid.shape)
        v, _ = local_fn(l, c + off_grid[inside])
        near_grid[inside] = psi_grid[inside] * v
        rest = PeriodicField(self.torus, field_.values - near_grid)
        return psi * val + rest.at(z)


def green_dz(greens, w):
    """Complex derivative d/dw of G(w) (as a real function, d/dw = (d/dx - i d/dy) / 2)."""
    from .theta import dlog_theta1
    w1, tau, le = greens._basis
    zeta = np.asarray(w, dtype=complex) / w1
    dlogqt = (np.pi * zeta / tau.imag + dlog_theta1(zeta, tau)) / w1
    return -dlogqt / (4 * np.pi) + np.conj(w) / (4 * greens.torus.area)


# -- functional interface -------------------------------------------------------------

def build_ansatz(profile, params, M=256, **kw):
    return Ansatz(profile, params, M, **kw)


def project_PU(params, profile, M=256):
    return Ansatz(profile, params, M).W


def residual_R(params, profile, M=256):
    return Ansatz(profile, params, M).residual


def weighted_norm(h, ansatz, h_at=None):
    return ansatz.weighted_norm(h, h_at)


def kernel_elements(params, profile, M=256, l=0):
    an = Ansatz(profile, params, M)
    return an.kernel_fields(l)


def residual_sweep(profile, deltas, gamma=0.5, M=256, probes=None):
    """Residual norms of the ansatz over a delta sweep with matched epsilon.

    Where the matched epsilon leaves no real c_- branch for the ansatz
    (negative discriminant) the Liouville limit epsilon = 0 is used instead
    and the row is flagged.
    """
    n = min(profile.orders)
    cutoff = None if profile.m == 1 else 0.9 * max_eta(profile)
    rows = []
    for d in deltas:
        eps = matched_epsilon(d, n)
        an = Ansatz(profile, AnsatzParams(delta=float(d), epsilon=eps, gamma=gamma, eta_cutoff=cutoff), M=M)
        matched = an.discriminant() >= 0
        if not matched:
            eps = 0.0
            an = Ansatz(profile, AnsatzParams(delta=float(d), epsilon=0.0, gamma=gamma, eta_cutoff=cutoff), M=M)
        row = {"delta": float(d), "epsilon": eps, "matched": bool(matched),
               "weighted_norm": float(an.residual_norm()), "sup_norm": float(an.residual.max_abs())}
        if probes is not None and profile.m == 1:
            row["expansion_remainder"] = float(np.max(np.abs(an.expansion_remainder(probes))))
        rows.append(row)
    return rows


def plane_radial_integral(profile_fn, tol=1e-13):
    """int over R^2 of a radial function given as profile_fn(|y|^2)."""
    # dA = pi d(|y|^2) for radial integrands; an exactly vanishing integral
    # triggers a harmless roundoff warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(profile_fn, 0.0, np.inf, epsabs=1e-15, epsrel=tol, limit=200)
    return float(np.pi * val)


def matched_epsilon(delta, n):
    """epsilon with eta = epsilon^2 delta^{-2/(n+1)} equal to delta^2."""
    return float(np.sqrt(delta ** 2 * delta ** (2.0 / (n + 1))))
