"""Newton continuation for the regularized vortex equation on the grid.

The unknown is the zero-mean field w; the mean c of v = w + c is slaved to
w through the quadratic

    e^{2c} int e^{2u_0+2w} - e^c int e^{u_0+w} + 4 pi N eps^2 = 0,

on its lower root c_-(w) (non-topological branch).  With E = e^{u_0+w} the
equation for w reads

    F(w) = Lap w + (e^c E - e^{2c} E^2) / eps^2 - 4 pi N / |Omega| = 0,

which is the same as the reduced form with the ratio coefficients; F has
zero mean automatically because of the quadratic.
"""
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import linalg as spla

from .ansatz import AnsatzParams, build_ansatz, exp_u0, nearest_offset
from .errors import ConfigInvalid, DiscriminantNegative, NewtonDiverged
from .green import GreenData
from .torus_core import PeriodicField


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-9
    max_iter: int = 40
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 2.0 ** -20
    max_increase: int = 5
    krylov_rtol: float = 1e-7
    krylov_restart: int = 80
    krylov_maxiter: int = 20


@dataclass(eq=False)
class VortexProblem:
    """Grid data of e^{u_0} for a vortex configuration."""
    config: object
    torus: object
    M: int = 256

    @cached_property
    def greens(self):
        return GreenData(self.torus)

    @cached_property
    def Z(self):
        return self.torus.grid(self.M)

    @cached_property
    def exp_u0(self):
        return exp_u0(self.config, self.greens, self.Z)

    @property
    def N(self):
        return self.config.N

    @property
    def area(self):
        return self.torus.area

    @property
    def epsilon_max(self):
        """Necessary solvability bound 16 pi N eps^2 < |Omega|."""
        return float(np.sqrt(self.area / (16 * np.pi * self.N)))

    def integrals(self, w):
        E = self.exp_u0 * np.exp(w)
        return E, self.area * E.mean(), self.area * (E * E).mean()


def _values(w):
    return w.values if isinstance(w, PeriodicField) else np.asarray(w)


def c_branch(w, epsilon, problem, sign="minus"):
    """c_-(w) (or c_+(w)) from the quadratic relation between mean and oscillation."""
    _, A1, A2 = problem.integrals(_values(w))
    disc = A1 * A1 - 16 * np.pi * problem.N * epsilon ** 2 * A2
    if disc < 0:
        raise DiscriminantNegative(f"discriminant {disc:.3e} < 0", "discriminant")
    root = np.sqrt(disc)
    den = A1 + root if sign == "minus" else A1 - root
    if sign not in ("minus", "plus"):
        raise ValueError("sign must be 'minus' or 'plus'")
    return float(np.log(8 * np.pi * problem.N * epsilon ** 2 / den))


def discriminant(w, epsilon, problem):
    _, A1, A2 = problem.integrals(_values(w))
    return float(A1 * A1 - 16 * np.pi * problem.N * epsilon ** 2 * A2)


def _lap(torus, w):
    return PeriodicField(torus, w).laplacian().values


def residual(w, epsilon, problem):
    """(F(w), c_-(w)) on the grid."""
    c = c_branch(w, epsilon, problem)
    E, _, _ = problem.integrals(w)
    ec = np.exp(c)
    F = _lap(problem.torus, w) + (ec * E - ec * ec * E * E) / epsilon ** 2 - 4 * np.pi * problem.N / problem.area
    return F, c


def residual_v(v, epsilon, problem):
    """Residual of the v-equation: -Lap v - eps^-2 e^{u0+v}(1 - e^{u0+v}) + 4 pi N/|Omega|."""
    e = problem.exp_u0 * np.exp(v)
    return -_lap(problem.torus, v) - e * (1 - e) / epsilon ** 2 + 4 * np.pi * problem.N / problem.area


def roundoff_floor(w, problem):
    """Size of the round-off in a spectral Laplacian of w: eps_mach k_max^2 max|w|."""
    kx, ky = problem.torus.wavevectors(problem.M)
    k2max = float(np.max(kx ** 2 + ky ** 2))
    return 8 * np.finfo(float).eps * k2max * float(np.max(np.abs(w)))


def _jacobian(w, c, epsilon, problem):
    """Matrix-free derivative of F at w, including the dependence of c_-(w)."""
    E, A1, A2 = problem.integrals(w)
    ec = np.exp(c)
    k = (ec * E - 2 * ec * ec * E * E) / epsilon ** 2
    S = np.sqrt(A1 * A1 - 16 * np.pi * problem.N * epsilon ** 2 * A2)
    area, M, torus = problem.area, problem.M, problem.torus

    def mv(h):
        h = h.reshape(M, M)
        dc = -area * np.mean(E * h - 2 * ec * E * E * h) / S
        out = _lap(torus, h) + k * (h + dc)
        return (out - out.mean()).ravel()

    kx, ky = torus.wavevectors(M)
    k2 = kx ** 2 + ky ** 2
    k2[0, 0] = np.inf

    def prec(r):
        # Poisson preconditioner: inverse Laplacian on zero-mean data
        return np.fft.ifft2(-np.fft.fft2(r.reshape(M, M)) / k2).real.ravel()

    n = M * M
    return spla.LinearOperator((n, n), matvec=mv), spla.LinearOperator((n, n), matvec=prec)


@dataclass
class SolveResult:
    v: PeriodicField
    w: PeriodicField
    c_minus: float
    epsilon: float
    newton_iters: int
    final_residual: float
    flux_error: float = float("nan")
    concentration_masses: list = field(default_factory=list)
    phi_max: float = float("nan")
    history: list = field(default_factory=list)
    seconds: float = 0.0
    tolerance: float = 0.0

    def summary(self):
        return {
            "epsilon": self.epsilon, "c_minus": self.c_minus, "newton_iters": self.newton_iters,
            "final_residual": self.final_residual, "flux_error": self.flux_error,
            "concentration_masses": list(self.concentration_masses), "phi_max": self.phi_max,
            "seconds": self.seconds, "tolerance": self.tolerance,
        }


def newton_solve(problem, epsilon, initial, settings=None):
    """Damped Newton-Krylov on the zero-mean subspace."""
    settings = settings or SolverSettings()
    if epsilon >= problem.epsilon_max:
        raise ConfigInvalid(f"epsilon {epsilon:g} violates 16 pi N eps^2 < |Omega|", "epsilon")
    t0 = time.perf_counter()
    w = _values(initial).astype(float)
    w = w - w.mean()
    F, c = residual(w, epsilon, problem)
    res = float(np.max(np.abs(F)))
    history = [res]
    increases = 0
    target = max(settings.tol, roundoff_floor(w, problem))
    for it in range(1, settings.max_iter + 1):
        if res <= target:
            break
        J, P = _jacobian(w, c, epsilon, problem)
        step, _ = spla.gmres(J, -F.ravel(), M=P, rtol=settings.krylov_rtol, atol=0.0,
                             restart=settings.krylov_restart, maxiter=settings.krylov_maxiter)
        step = step.reshape(w.shape)
        step -= step.mean()
        norm0 = float(np.sqrt(np.mean(F * F)))
        t = 1.0
        accepted = False
        while t >= settings.min_step:
            trial = w + t * step
            try:
                Ft, ct = residual(trial, epsilon, problem)
            except DiscriminantNegative:
                t *= settings.backtrack
                continue
            if np.sqrt(np.mean(Ft * Ft)) <= (1 - settings.armijo * t) * norm0:
                accepted = True
                break
            t *= settings.backtrack
        if not accepted:
            # take the smallest step anyway and count it as an increase
            if t < settings.min_step:
                t = settings.min_step
            trial = w + t * step
            Ft, ct = residual(trial, epsilon, problem)
        new = float(np.max(np.abs(Ft)))
        increases = increases + 1 if (not accepted or new > res) else 0
        w, F, c, res = trial, Ft, ct, new
        history.append(res)
        target = max(settings.tol, roundoff_floor(w, problem))
        if increases >= settings.max_increase:
            raise NewtonDiverged(f"residual grew over {increases} damped steps at eps={epsilon:g}",
                                 "residual", history)
    if res > target:
        raise NewtonDiverged(f"no convergence in {settings.max_iter} steps (residual {res:.3e})",
                             "residual", history)
    wf = PeriodicField(problem.torus, w)
    vf = wf + c
    return SolveResult(vf, wf, c, epsilon, len(history) - 1, res, history=history,
                       seconds=time.perf_counter() - t0, tolerance=target)


# -- diagnostics -------------------------------------------------------------

def flux_density(result, problem):
    """eps^-2 e^{u_0+v}(1 - e^{u_0+v}) = 2 F_12 on the grid."""
    e = problem.exp_u0 * np.exp(result.v.values)
    return e * (1 - e) / result.epsilon ** 2


def radial_mass_profile(result, problem, center, radii):
    dens = flux_density(result, problem)
    r = np.abs(nearest_offset(problem.torus, problem.Z, center))
    cell = problem.area / problem.M ** 2
    return np.array([float(np.sum(dens[r < R]) * cell) for R in radii])


def diagnostics(result, problem, radius=None):
    """Flux identity, total magnetic flux, concentration masses and max|phi|."""
    e = problem.exp_u0 * np.exp(result.v.values)
    area, N, eps = problem.area, problem.N, result.epsilon
    flux_int = area * np.mean(e * (1 - e))
    target = 4 * np.pi * N * eps ** 2
    total_flux = area * np.mean(e * (1 - e)) / (2 * eps ** 2)
    centers = problem.config.centers
    if radius is None:
        radius = 0.1 * float(np.hypot(*problem.torus.sides()))
    masses = [float(radial_mass_profile(result, problem, c, [radius])[0]) for c in centers]
    phi = np.sqrt(e)
    k = int(np.argmax(phi))
    result.flux_error = float(abs(flux_int - target) / target)
    result.concentration_masses = masses
    result.phi_max = float(phi.ravel()[k])
    return {
        "flux_identity": float(flux_int), "flux_target": float(target),
        "flux_error": result.flux_error,
        "total_flux": float(total_flux), "total_flux_error": float(abs(total_flux - 2 * np.pi * N) / (2 * np.pi * N)),
        "concentration_masses": masses, "mass_targets": [8 * np.pi * (n + 1) for n in problem.config.orders],
        "ball_radius": radius, "phi_max": result.phi_max, "phi_argmax": complex(problem.Z.ravel()[k]),
        "mean_w": float(result.w.mean),
        "v_equation_residual": float(np.max(np.abs(residual_v(result.v.values, eps, problem)))),
    }


# -- initial guess and continuation -----------------------------------------------

def delta_of_epsilon(epsilon, mu, n, H_abs):
    """delta = [(n+1) eps^{n+1} / |H(xi)|]^{1/(n+2)} mu."""
    return float(((n + 1) * epsilon ** (n + 1) / H_abs) ** (1.0 / (n + 2)) * mu)


def ansatz_guess(profile, epsilon, mu, zeta=0j, M=256):
    """The ansatz W with (delta, a) from a zero (mu, zeta) of the reduced map."""
    n = profile.orders[0]
    H_abs = abs(complex(profile.H_series[0].coeffs[0]))
    delta = delta_of_epsilon(epsilon, mu, n, H_abs)
    params = AnsatzParams(delta=delta, a=(delta * zeta,) * profile.m, epsilon=epsilon)
    return build_ansatz(profile, params, M=M).W


def continuation(problem, epsilons, initial, settings=None, on_step=None):
    """Solve along decreasing eps, warm-starting from the previous solution.

    Returns the list of converged results; stops at the first failure and
    records it on the last entry's history.
    """
    results = []
    guess = initial
    for eps in epsilons:
        try:
            res = newton_solve(problem, eps, guess, settings)
        except (NewtonDiverged, DiscriminantNegative) as err:
            if on_step:
                on_step(eps, err)
            break
        diagnostics(res, problem)
        results.append(res)
        if on_step:
            on_step(eps, res)
        guess = res.w
    return results


def geometric_epsilons(eps_start, eps_stop, ratio=0.8):
    out = [eps_start]
    while out[-1] * ratio >= eps_stop * (1 - 1e-12):
        out.append(out[-1] * ratio)
    return out
