"""Existence conditions: the renormalized mass D_0, the pair (Gamma, Upsilon),
the matrix A for several concentration points, and the half-period examples.

D_0 is computed twice.  The quadrature route integrates |H_0|^2 =
e^{u_0 + 8 pi sum (n_l+1) G(., xi_l)} over the torus minus the sets
{|sigma_0| < rho} and subtracts the Liouville tails (n_l+1) pi / rho^2.  The
area route uses |H_0|^2 = |F'|^2 with F = -1/sigma_0: the multiplicity-weighted
image area equals the integral of the winding number of the closed curve
F(boundary of Omega), which by Green's theorem is (1/2i) \\oint conj(F) dF.

Gamma and Upsilon come from Taylor coefficients of
    L(z, w) = 2 log[(w - q_0(z)) / (q_0^{-1}(w) - z)] + 4 pi H*(z - q_0^{-1}(w)).
With u = q_0^{-1}(w) the ratio is the divided difference
(q_0(u) - q_0(z)) / (u - z), so L is an honest bivariate power series in (u, z)
and is composed with u = q_0^{-1}(w) coefficientwise.
"""
import json
from dataclasses import asdict, dataclass, field
from math import comb, factorial

import numpy as np
from scipy import signal

from .ansatz import room, rho_max, u0_at
from .elliptic import EllipticData
from .errors import ConfigInvalid, RhoTooLarge, SeriesDegreeInsufficient
from .green import hstar_derivatives, lambda_k
from .series import cauchy_series
from .theta import dlog_theta1
from .torus_core import smooth_step

INNER_FRACTION = 0.6


# -- truncated bivariate series: A[i, j] is the coefficient of u^i z^j -------------

def _truncate(A, K):
    i, j = np.indices(A.shape)
    A = A.copy()
    A[i + j > K] = 0
    return A


def _mul2(A, B, K):
    return _truncate(signal.convolve2d(A, B)[:K + 1, :K + 1], K)


def _log2(A, K):
    a0 = A[0, 0]
    X = A / a0
    X[0, 0] = 0
    out = np.zeros_like(X)
    P = X
    for k in range(1, K + 1):
        out = out + (-1) ** (k + 1) * P / k
        P = _mul2(P, X, K)
    out[0, 0] += np.log(a0)
    return out


def _difference_series(coeffs, K):
    """g(z - u) from the Taylor coefficients of g at 0."""
    out = np.zeros((K + 1, K + 1), dtype=complex)
    for i in range(K + 1):
        for j in range(K + 1 - i):
            out[i, j] = coeffs[i + j] * comb(i + j, i) * (-1) ** i
    return out


def _divided_difference(q, K):
    """(q(u) - q(z)) / (u - z) for q with q(0) = 0."""
    out = np.zeros((K + 1, K + 1), dtype=complex)
    for i in range(K + 1):
        for j in range(K + 1 - i):
            if i + j + 1 < len(q):
                out[i, j] = q[i + j + 1]
    return out


def _substitute_u(L, U, K):
    """Replace u by the series U(w) (U(0) = 0); result B[k, j] multiplies w^k z^j."""
    out = np.zeros((K + 1, K + 1), dtype=complex)
    power = np.zeros(K + 1, dtype=complex)
    power[0] = 1.0
    u = np.zeros(K + 1, dtype=complex)
    u[:min(K + 1, len(U))] = U[:K + 1]
    for i in range(K + 1):
        out += power[:, None] * L[i][None, :]
        power = np.convolve(power, u)[:K + 1]
    return out


# -- local data -------------------------------------------------------------------

def _degree_budget(profile):
    n = max(profile.orders)
    K = 2 * n + 8
    if profile.degree < 2 * n + 4 or profile.degree < K:
        raise SeriesDegreeInsufficient(f"series degree {profile.degree} below {K}", "degree")
    return K


def _local_q(profile, l):
    q = profile.q0_series[l].coeffs.copy()
    U = profile.q0_inverse_series[l].coeffs.copy()
    U[0] = 0.0
    return q, U


def b_coefficient(profile, l=0):
    """b_{n+1}: coefficient of w^(n+1) in q_0^{-1}(w) - xi_l."""
    n = profile.orders[l]
    return complex(profile.q0_inverse_series[l].coeffs[n + 1])


def f_series(profile, l=0, K=None):
    """Taylor coefficients in z - xi_l of f_{n+1}(z) (the w^(n+1) coefficient of L)."""
    K = K or _degree_budget(profile)
    n = profile.orders[l]
    q, U = _local_q(profile, l)
    D = _divided_difference(q, K)
    hs = profile.green.hstar_series.coeffs
    L = 2 * _log2(D, K) + 4 * np.pi * _difference_series(hs, K)
    B = _substitute_u(L, U, K)
    return B[n + 1, :K - n]


def _log_qt_coeffs(profile, base, K):
    """Taylor coefficients of log QT at `base` (constant term dropped), via its derivative."""
    w1, tau, _ = profile._basis

    def dlog(w):
        zeta = w / w1
        return (np.pi * zeta / tau.imag + dlog_theta1(zeta, tau)) / w1

    r = 0.4 * float(profile.torus.lattice_distance(base))
    d = cauchy_series(dlog, base, r, K, n=256).coeffs
    out = np.zeros(K + 1, dtype=complex)
    out[1:] = d[:K] / np.arange(1, K + 1)
    return out


def f_cross_series(profile, l, j, K=None):
    """Coefficients in z - xi_l of the w^(n_j+1) coefficient of
    -2 log(z - q_{0,j}^{-1}(w)) + 4 pi H*(z - q_{0,j}^{-1}(w)) = -2 log QT(z - q_{0,j}^{-1}(w)) + const."""
    K = K or _degree_budget(profile)
    nj = profile.orders[j]
    _, U = _local_q(profile, j)
    d = profile.centers[l] - profile.centers[j]
    c = -2 * _log_qt_coeffs(profile, d, K)
    L = _difference_series(c, K)
    B = _substitute_u(L, U, K)
    return B[nj + 1, :K - nj]


def _h(profile, l):
    return profile.H_series[l].coeffs


def gamma_upsilon_pair(profile, l, j, K=None):
    """(Gamma^{lj}, Upsilon^{lj}); for l == j these are the single-point Gamma, Upsilon."""
    nl, nj = profile.orders[l], profile.orders[j]
    h = _h(profile, l)
    area = profile.torus.area
    if l == j:
        phi = f_series(profile, l, K)
        gamma = (nl + 1) * sum(h[k] * phi[nl + 1 - k] for k in range(nl + 2))
    else:
        phi = f_cross_series(profile, l, j, K)
        gamma = (nj + 1) * sum(h[k] * phi[nl + 1 - k] for k in range(nl + 2))
    upsilon = -2 * np.pi * (nj + 1) / area * np.conj(b_coefficient(profile, j)) * h[nl]
    return complex(gamma), complex(upsilon)


def compute_gamma_upsilon(profile, check=True):
    """Gamma and Upsilon at the (single) concentration point, or at xi_1 when m >= 2."""
    if check:
        profile.check_residues()
    return gamma_upsilon_pair(profile, 0, 0)


def correction_coefficient(n):
    """n (2n+3) / (n+1), the weight of D_0 in the non-degeneracy condition."""
    return n * (2 * n + 3) / (n + 1)


def _block(gamma, upsilon):
    """Real 2x2 matrix of a -> gamma a + upsilon conj(a)."""
    return np.array([[(gamma + upsilon).real, (upsilon - gamma).imag],
                     [(gamma + upsilon).imag, (gamma - upsilon).real]])


def build_matrix_A(profile, D0, check=True):
    """2m x 2m real matrix of the linearized residue map, with the D_0 diagonal correction
    on the points of minimal multiplicity."""
    if check:
        profile.check_residues()
    m = profile.m
    n = min(profile.orders)
    K = _degree_budget(profile)
    minimal = [l for l in range(m) if profile.orders[l] == n]
    weights = {l: abs(_h(profile, l)[0]) ** (-2.0 / (n + 1)) for l in minimal}
    total = sum(weights.values())
    A = np.zeros((2 * m, 2 * m))
    for l in range(m):
        for j in range(m):
            g, u = gamma_upsilon_pair(profile, l, j, K)
            if l == j and l in weights:
                u = u + correction_coefficient(n) * D0 * weights[l] / total
            A[2 * l:2 * l + 2, 2 * j:2 * j + 2] = _block(g, u)
    return A


# -- D_0 ----------------------------------------------------------------------------

def patch_radii(profile):
    """Outer radius of the cut-off disk at each concentration point."""
    radii = [0.9 * room(profile, l) for l in range(profile.m)]
    if min(radii) <= 0:
        raise ConfigInvalid("concentration points must lie inside the fundamental domain", "points")
    return radii


def excluded_radius(profile, l, rho, theta, iters=60):
    """r(theta) with |sigma_0(xi_l + r e^{i theta})| = rho (Newton on log|sigma_0|)."""
    n = profile.orders[l]
    c = profile.centers[l]
    e = np.exp(1j * np.asarray(theta, dtype=float))
    a1 = abs(profile.q0_series[l].coeffs[1])
    r = (rho ** (1.0 / (n + 1)) / a1) * np.ones(e.shape)
    for _ in range(iters):
        s, ds = profile.sigma_pair(c + r * e)
        g = np.log(np.abs(s)) - np.log(rho)
        dg = np.real(ds / s * e)
        step = g / dg
        r = r - step
        if np.max(np.abs(step)) < 1e-15 * np.max(r):
            break
    return r


def default_rho(profile):
    """A rho whose excluded sets sit well inside the inner cut-off disks."""
    out = []
    th = 2 * np.pi * np.arange(64) / 64
    for l, r1 in enumerate(patch_radii(profile)):
        # as large as allowed: the excluded-set integral and its tail cancel to leading order,
        # so a small rho costs digits
        r = 0.8 * min(INNER_FRACTION * r1, profile.local_radius[l])
        s, _ = profile.sigma_pair(profile.centers[l] + r * np.exp(1j * th))
        out.append(float(np.min(np.abs(s))))
    return min(out)


def _check_rho(profile, rho):
    for l, r1 in enumerate(patch_radii(profile)):
        if rho >= rho_max(profile, l):
            raise RhoTooLarge(f"rho = {rho:.3g} exceeds the local root disk at xi_{l}", "rho")
        r = excluded_radius(profile, l, rho, np.linspace(0, 2 * np.pi, 64, endpoint=False))
        if np.max(r) >= min(INNER_FRACTION * r1, profile.local_radius[l]):
            raise RhoTooLarge(f"sigma_0^-1(B_rho) reaches radius {np.max(r):.3g} at xi_{l}", "rho")


def _abs_H0_sq(profile, z):
    return np.exp(2 * np.real(profile.log_H0(z)))


def _grid_part(profile, M, radii):
    torus = profile.torus
    Z = torus.grid(M)
    chi = np.zeros(Z.shape)
    for c, r1 in zip(profile.centers, radii):
        d = np.abs(torus.wrap(Z - c))
        chi += smooth_step(d, INNER_FRACTION * r1, r1)[0]
    keep = chi < 1
    vals = np.zeros(Z.shape)
    vals[keep] = _abs_H0_sq(profile, Z[keep]) * (1 - chi[keep])
    return torus.area * vals.mean()


def _near_part(profile, l, rho, r1, n_angle, order, ratio=1.5):
    c = profile.centers[l]
    th = 2 * np.pi * np.arange(n_angle) / n_angle
    r_in = excluded_radius(profile, l, rho, th)
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    r0 = INNER_FRACTION * r1
    transition = np.linspace(r0, r1, 9)[1:]
    for k, t in enumerate(th):
        edges = [r_in[k]]
        while edges[-1] * ratio < r0:
            edges.append(edges[-1] * ratio)
        edges = np.concatenate([edges, [r0], transition])
        lo, hi = edges[:-1, None], edges[1:, None]
        r = (lo + (hi - lo) * (x + 1) / 2).ravel()
        wr = ((hi - lo) / 2 * w).ravel() * r
        chi = smooth_step(r, INNER_FRACTION * r1, r1)[0]
        total += np.sum(_abs_H0_sq(profile, c + r * np.exp(1j * t)) * chi * wr)
    return total * 2 * np.pi / n_angle


def compute_D0_quadrature(profile, rho=None, M=256, n_angle=128, order=16, with_error=False):
    """pi D_0 = int_{Omega minus sigma_0^-1(B_rho)} |H_0|^2 - sum (n_l+1) pi / rho^2, returned as D_0."""
    rho = default_rho(profile) if rho is None else rho
    _check_rho(profile, rho)
    radii = patch_radii(profile)

    def evaluate(M_, na, od):
        total = _grid_part(profile, M_, radii)
        for l, r1 in enumerate(radii):
            total += _near_part(profile, l, rho, r1, na, od)
        total -= sum(n + 1 for n in profile.orders) * np.pi / rho ** 2
        return total / np.pi

    D0 = evaluate(M, n_angle, order)
    if not with_error:
        return float(D0)
    coarse = evaluate(M // 2, n_angle, order)
    return float(D0), float(abs(D0 - coarse))


def boundary_nodes(torus, panels=16, order=24):
    """Gauss-Legendre nodes, weights (dz) on the counter-clockwise boundary of Omega."""
    w1, w2 = torus.omega1, torus.omega2
    corners = [(-w1 - w2) / 2, (w1 - w2) / 2, (w1 + w2) / 2, (-w1 + w2) / 2]
    if (w2 / w1).imag < 0:
        corners = corners[::-1]
    x, wts = np.polynomial.legendre.leggauss(order)
    pts, dz = [], []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        L = b - a
        for p in range(panels):
            t = (p + (x + 1) / 2) / panels
            pts.append(a + L * t)
            dz.append(wts / 2 / panels * L)
    return np.concatenate(pts), np.concatenate(dz)


def compute_D0_area(profile, rho=None, panels=16, order=24):
    """D_0 from the signed, multiplicity-weighted area enclosed by F(boundary of Omega).

    The preimage count of a value v with |v| < 1/rho equals wind(v) + sum (n_l+1), so the
    image area minus sum (n_l+1) pi / rho^2 is the integral of the winding number,
    (1/2i) \\oint conj(F) F' dz; rho drops out once the excluded sets are interior.
    """
    if rho is not None:
        _check_rho(profile, rho)
    z, dz = boundary_nodes(profile.torus, panels, order)
    F = profile.F(z)
    dF = profile.integrand(z)
    return float(np.real(np.sum(np.conj(F) * dF * dz) / 2j) / np.pi)


def image_curve(profile, samples=4096):
    """F = -1/sigma_0 along the counter-clockwise boundary of Omega (closed polyline)."""
    torus = profile.torus
    w1, w2 = torus.omega1, torus.omega2
    corners = [(-w1 - w2) / 2, (w1 - w2) / 2, (w1 + w2) / 2, (-w1 + w2) / 2, (-w1 - w2) / 2]
    per = samples // 4
    t = np.arange(per) / per
    z = np.concatenate([a + (b - a) * t for a, b in zip(corners[:-1], corners[1:])])
    return profile.F(z)


def winding_number(curve, points, chunk=2048):
    """Winding number of the closed polyline `curve` around each point."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    flat = points.ravel()
    nxt = np.roll(curve, -1)
    out = np.empty(flat.shape)
    for k in range(0, flat.size, chunk):
        p = flat[k:k + chunk, None]
        out[k:k + chunk] = np.sum(np.angle((nxt[None, :] - p) / (curve[None, :] - p)), axis=1) / (2 * np.pi)
    return np.rint(out).reshape(points.shape)


def preimage_count(profile, values, rho, curve=None):
    """Number of preimages under 1/sigma_0 in Omega minus sigma_0^{-1}(B_rho)."""
    curve = image_curve(profile) if curve is None else curve
    values = np.asarray(values, dtype=complex)
    poles = sum(n + 1 for n in profile.orders)
    return winding_number(curve, values) + poles * (np.abs(values) < 1.0 / rho)


def winding_area(profile, pixels=400, curve=None):
    """Pixel estimate of pi D_0 / pi = (1/pi) sum of winding numbers times pixel area."""
    curve = image_curve(profile) if curve is None else curve
    lo = complex(curve.real.min(), curve.imag.min())
    hi = complex(curve.real.max(), curve.imag.max())
    xs = lo.real + (np.arange(pixels) + 0.5) / pixels * (hi.real - lo.real)
    ys = lo.imag + (np.arange(pixels) + 0.5) / pixels * (hi.imag - lo.imag)
    grid = xs[:, None] + 1j * ys[None, :]
    wind = winding_number(curve, grid)
    cell = (hi.real - lo.real) * (hi.imag - lo.imag) / pixels ** 2
    return float(wind.sum() * cell / np.pi)


# -- the n = 0 reduction ----------------------------------------------------------------

def hessian_u0(config, greens, z0, h=1e-3):
    """Hessian of u_0 at z0 by Richardson-extrapolated central differences."""
    def hess(hh):
        f = lambda dx, dy: float(u0_at(config, greens, np.array(z0 + dx + 1j * dy)))
        f0 = f(0, 0)
        fxx = (f(hh, 0) - 2 * f0 + f(-hh, 0)) / hh ** 2
        fyy = (f(0, hh) - 2 * f0 + f(0, -hh)) / hh ** 2
        fxy = (f(hh, hh) - f(hh, -hh) - f(-hh, hh) + f(-hh, -hh)) / (4 * hh ** 2)
        return np.array([[fxx, fxy], [fxy, fyy]])
    return (4 * hess(h / 2) - hess(h)) / 3


def D0_single_point_limit(profile, M=256, n_angle=128, order=16):
    """The n = 0 form |H(xi)|^2 / pi * lim [int_{Omega minus B_r} e^{8pi(H - H(0)) + u_0 - u_0(xi)} / |z-xi|^4 - pi / r^2]."""
    if profile.m != 1 or profile.orders[0] != 0:
        raise ValueError("the single-point limit form needs one concentration point with n = 0")
    torus, greens, config = profile.torus, profile.green, profile.config
    c = profile.centers[0]
    r1 = patch_radii(profile)[0]
    r0 = INNER_FRACTION * r1
    u0c = float(u0_at(config, greens, np.array(c)))
    H00 = greens.H(np.array(0j))

    def expo(d):
        return 8 * np.pi * (greens.H(d) - H00) + u0_at(config, greens, c + d) - u0c

    Z = torus.grid(M)
    d = torus.wrap(Z - c)
    chi = smooth_step(np.abs(d), r0, r1)[0]
    keep = chi < 1
    vals = np.zeros(Z.shape)
    vals[keep] = np.exp(expo(d[keep])) / np.abs(d[keep]) ** 4 * (1 - chi[keep])
    total = torus.area * vals.mean()
    x, w = np.polynomial.legendre.leggauss(order)
    # below r1 / 2^10 the angular mean of the integrand is O(r^2 |D^2 u|^2) while the
    # cancellation of the quadratic harmonic would only amplify rounding noise
    edges = r1 * 0.5 ** np.arange(10, -1, -1)
    lo, hi = edges[:-1, None], edges[1:, None]
    r = (lo + (hi - lo) * (x + 1) / 2).ravel()
    wr = ((hi - lo) / 2 * w).ravel() * r
    chi_r = smooth_step(r, r0, r1)[0]
    th = 2 * np.pi * np.arange(n_angle) / n_angle
    dd = r[:, None] * np.exp(1j * th[None, :])
    g = np.expm1(expo(dd)) / r[:, None] ** 4
    total += np.sum(g.mean(axis=1) * 2 * np.pi * chi_r * wr)
    # int_r^inf chi 2 pi s^-3 ds - pi / r^2 -> - int_0^inf (1 - chi) 2 pi s^-3 ds
    edges = np.linspace(r0, r1, 9)
    lo, hi = edges[:-1, None], edges[1:, None]
    s = (lo + (hi - lo) * (x + 1) / 2).ravel()
    ws = ((hi - lo) / 2 * w).ravel()
    tail = np.sum((1 - smooth_step(s, r0, r1)[0]) * 2 * np.pi * s ** -3 * ws) + np.pi / r1 ** 2
    total -= tail
    lam2 = abs(profile.H_series[0].coeffs[0]) ** 2
    return float(lam2 * total / np.pi)


# -- the half-period examples -----------------------------------------------------------

def section_constants(K=40):
    """(32 pi^4 sum lambda_k(lambda_k+1)(6lambda_k^2+6lambda_k+1), 80 pi^4 sum_{m,k} k^3 e^{-2 pi k m})."""
    lam = lambda_k(1.0, K)
    s1 = 32 * np.pi ** 4 * np.sum(lam * (lam + 1) * (6 * lam ** 2 + 6 * lam + 1))
    k = np.arange(1, K + 1)
    q = np.exp(-2 * np.pi * k)
    s2 = 80 * np.pi ** 4 * np.sum(k ** 3.0 * q / (1 - q))
    return float(s1), float(s2)


def square_inequality(K=40):
    """Both sides of the square-torus sufficient inequality in closed numeric form."""
    s1, s2 = section_constants(K)
    lhs = abs(np.pi ** 4 / 3 + 1.4 * s2 - s1)
    rhs = 3 * np.pi * np.sqrt(np.pi ** 4 / 3 + s2)
    return dict(sum_lambda=s1, sum_k3=s2, lhs=float(lhs), rhs=float(rhs), holds=bool(lhs < rhs))


def half_period_checks(profile, D0):
    """Cross-checks for one concentration point of order 2 with vortices at the half periods.

    Compares the H derivatives with their elliptic expressions, the composed-series Gamma,
    Upsilon, b_3 with the closed forms in H''(0), H''''(0), H^(6)(0) and H*, and evaluates
    the exact condition beside the stronger sufficient inequality.
    """
    torus = profile.torus
    ell = EllipticData(torus)
    h = _h(profile, 0)
    lam0 = h[0]
    e1, e2, e3, G4, G6 = ell.e1, ell.e2, ell.e3, ell.G4, ell.G6
    Hd = {k: factorial(k) * h[k] / lam0 for k in (2, 4, 6)}
    elliptic = {2: 2 * e2, 4: 24 * (e1 * e3 + 6 * G4), 6: 720 * (10 * G6 + 3 * G4 * e2)}
    # the elliptic forms refer to the frame where omega_1 is real
    u = torus.omega1 / abs(torus.omega1)
    rel = {k: abs(Hd[k] - elliptic[k] * u ** k) / abs(elliptic[k]) for k in (2, 4, 6)}
    hs2, hs4, hs6 = hstar_derivatives(torus)
    H2, H4, H6 = (factorial(k) * h[k] for k in (2, 4, 6))
    a2 = torus.area
    f3p = H4 / 36 - 2 * np.pi * lam0 / 9 * hs4 - 2 * np.pi / 3 * H2 * hs2
    f3ppp = H6 / 540 - 2 * np.pi * lam0 / 9 * hs6 - 2 * np.pi / 3 * H2 * hs4
    gamma_closed = (3 * H2 * f3p + lam0 * f3ppp) / 2
    b3_closed = H2 / 6
    gamma, upsilon = compute_gamma_upsilon(profile, check=False)
    b3 = b_coefficient(profile, 0)
    exact_lhs = abs(3 * H2 * f3p + lam0 * f3ppp)
    exact_rhs = abs(6 * np.pi / a2 * np.conj(b3_closed) * H2 - 28.0 / 3.0 * D0)
    Hn = {k: v for k, v in Hd.items()}
    strong_lhs = abs(Hn[2] * Hn[4] / 4 + Hn[6] / 180 - 6 * np.pi * Hn[2] ** 2 * hs2
                     - 4 * np.pi * Hn[2] * hs4 - 2 * np.pi / 3 * hs6)
    strong_rhs = 3 * np.pi / a2 * abs(Hn[2]) ** 2
    return dict(
        H_derivative_rel_error=rel,
        gamma_series=gamma, gamma_closed=complex(gamma_closed),
        upsilon_series=upsilon,
        upsilon_closed=complex(-3 * np.pi / a2 * np.conj(b3_closed) * H2),
        b3_series=b3, b3_closed=complex(b3_closed),
        exact_lhs=float(exact_lhs), exact_rhs=float(exact_rhs),
        exact_holds=bool(abs(exact_lhs - exact_rhs) > 1e-6 * max(exact_lhs, exact_rhs)),
        strong_lhs=float(strong_lhs), strong_rhs=float(strong_rhs),
        strong_holds=bool(strong_lhs < strong_rhs),
    )


# -- report -------------------------------------------------------------------------------

@dataclass
class ConditionReport:
    D0: float
    D0_method2: float
    gamma: complex
    upsilon: complex
    A: list
    detA: float
    balance_ok: bool
    residues_ok: bool
    nondegenerate: bool
    tol: float = 0.0
    margin: float = 0.0
    D0_error: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for k in ("gamma", "upsilon"):
            d[k] = [d[k].real, d[k].imag]
        d["A"] = [list(map(float, row)) for row in self.A]
        return _jsonable(d)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.generic):
        return x.item()
    return x


def nondegeneracy_margin(gamma, upsilon, D0, n, rel_tol=1e-6):
    """(margin, tol) for ||Gamma| - |Upsilon + n(2n+3)D_0/(n+1)||."""
    a = abs(gamma)
    b = abs(upsilon + correction_coefficient(n) * D0)
    return abs(a - b), rel_tol * max(a, b, 1e-300)


def check_conditions(profile, rho=None, M=256, rel_tol=1e-6):
    """Evaluate every condition for a built profile and return a ConditionReport."""
    try:
        residues_ok = bool(profile.check_residues())
    except Exception:
        residues_ok = False
    D0, err = compute_D0_quadrature(profile, rho, M=M, with_error=True)
    D0b = compute_D0_area(profile)
    n = min(profile.orders)
    gamma, upsilon = gamma_upsilon_pair(profile, 0, 0) if residues_ok else (np.nan, np.nan)
    A = build_matrix_A(profile, D0, check=False) if residues_ok else np.full((2 * profile.m,) * 2, np.nan)
    detA = float(np.linalg.det(A))
    if profile.m == 1:
        margin, tol = nondegeneracy_margin(gamma, upsilon, D0, n, rel_tol)
    else:
        margin = abs(detA)
        tol = rel_tol * float(np.prod(np.linalg.norm(A, axis=1)))
    return ConditionReport(
        D0=D0, D0_method2=D0b, gamma=complex(gamma), upsilon=complex(upsilon), A=A.tolist(), detA=detA,
        balance_ok=bool(profile.config.balance_ok()), residues_ok=residues_ok,
        nondegenerate=bool(residues_ok and margin > tol), tol=float(tol), margin=float(margin),
        D0_error=err)
