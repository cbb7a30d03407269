"""Worst-case discrepancy solver.

For a threshold veps > 0 and a base point x0 >= 1, the resolvent problem

    veps^2 psi(x) + (K psi)(x) = 1/(x0 + x),  x in [0, 1]

has the spectral solution (eps_hat = veps / sqrt(2*pi))

    psi(z)       = int_0^inf u(x0;mu) u(z;mu) mu tanh(pi mu) / D(mu) dmu
    ||psi||_2^2  = int_0^inf u(x0;mu)^2 mu tanh(pi mu) / D(mu)^2 dmu
    ||psi||_H^2  = (1/pi) int_0^inf u(x0;mu)^2 mu sinh(pi mu) / D(mu)^2 dmu

with D(mu) = 2 eps_hat^2 cosh(pi mu) + 1, where ||.||_H is the
half-plane Hardy norm  ||phi||_H^2 = (1/pi) int_0^inf |phi(iy)|^2 dy.
The three integrals satisfy the consistency identity

    ||psi||_2^2 + veps^2 ||psi||_H^2 = psi(x0)

pointwise in mu, so its discrete residual measures only round-off.

The worst-case discrepancy at constraint level eps is obtained from the
pair map  eps = ||psi||_2 / ||psi||_H  (strictly increasing in veps) and

    Delta*(eps) = psi(x0) / ||psi||_H ,

evaluated at the matching veps.  For eps -> 0 this obeys the power law
Delta* ~ C*(x0) eps^(gamma*(x0)) for x0 > 1 and picks up a logarithmic
factor at x0 = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .grids import (
    SpectralGrid,
    TAIL_FRACTION,
    spectral_grid_for_solver,
)
from .special import c_star, eigfun_profile, eigfun_u, eigfun_unit_matrix, gamma_star

__all__ = [
    "PhiSolution",
    "PhiExtremal",
    "PowerlawFit",
    "solve_psi",
    "psi_value",
    "eps_of_veps",
    "delta_star_at",
    "match_veps",
    "powerlaw_fit",
    "phi_extremal",
    "delta_star_asymptotic",
    "delta_star_curve",
    "hp_norm",
    "hp_constant",
    "hp_reverse_constant",
    "solver_grid",
]

_BISECT_LO = -16.0
_BISECT_HI = 0.0
_BISECT_ITERS = 60


@dataclass(frozen=True)
class PhiSolution:
    """Solved state at one (x0, veps): the three norms and derived values."""

    x0: float
    veps: float
    veps_hat: float
    mu_max: float
    psi_at_x0: float
    norm_l2: float
    norm_hardy: float
    eps: float
    delta_star: float
    pythagoras_residual: float
    grid: SpectralGrid

    @property
    def p_weight(self) -> float:
        """Relaxation weight psi(x0)/||psi||_2^2; always > 1."""
        return self.psi_at_x0 / self.norm_l2**2


def solver_grid(x0: float, veps_min: float = 1e-16, step: float = 0.02) -> SpectralGrid:
    """Build (and cache per call site) the shared solver grid for x0."""
    return spectral_grid_for_solver(x0, veps_min, step=step)


def _densities(grid: SpectralGrid):
    mu = grid.mu_nodes
    u2 = grid.u_x0 * grid.u_x0
    a = u2 * mu * np.tanh(np.pi * mu)
    b = u2 * mu * np.sinh(np.pi * mu) / np.pi
    return a, b


def solve_psi(x0: float, veps: float, grid: SpectralGrid | None = None) -> PhiSolution:
    """Solve the resolvent problem spectrally and assemble all norms.

    A grid built by solver_grid(x0) may be passed to share the
    eigenfunction cache across a sweep; it must have been built for a
    veps_min at or below this veps (checked through the tail estimate,
    which raises if the truncation carries more than ten times the tail
    budget).
    """
    if not 0.0 < veps < 1.0:
        raise ValueError("veps must lie in (0, 1)")
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    if grid is None:
        grid = spectral_grid_for_solver(x0, veps)
    elif grid.x0 != x0:
        raise ValueError(f"grid was built for x0 = {grid.x0}, not {x0}")

    ehat = veps / math.sqrt(2.0 * math.pi)
    mu = grid.mu_nodes
    a, b = _densities(grid)
    d = 2.0 * ehat * ehat * np.cosh(np.pi * mu) + 1.0
    i1 = grid.integrate(a / d)
    i2 = grid.integrate(a / (d * d))
    ih = grid.integrate(b / (d * d))

    # Tail estimate for the slowest integrand (the psi(x0) density): its
    # decay rate past the crossover is pi*(1-beta).
    beta = 2.0 * math.acos(1.0 / x0) / math.pi if x0 > 1.0 else 0.0
    rate = math.pi * (1.0 - beta)
    tail = (a[-1] / d[-1]) / rate
    if tail > 10.0 * TAIL_FRACTION * i1:
        raise ValueError(
            f"mu_max = {grid.mu_max} insufficient for veps = {veps}: "
            f"estimated tail mass {tail:.3e} vs integral {i1:.3e}"
        )

    norm_l2 = math.sqrt(i2)
    norm_hardy = math.sqrt(ih)
    pythagoras = abs(i2 + veps * veps * ih - i1) / i1
    return PhiSolution(
        x0=float(x0),
        veps=float(veps),
        veps_hat=ehat,
        mu_max=grid.mu_max,
        psi_at_x0=i1,
        norm_l2=norm_l2,
        norm_hardy=norm_hardy,
        eps=norm_l2 / norm_hardy,
        delta_star=i1 / norm_hardy,
        pythagoras_residual=pythagoras,
        grid=grid,
    )


def psi_value(sol: PhiSolution, z):
    """Evaluate psi at z: real in (0, 1], real > 1, or complex in Omega.

    Same spectral quadrature as the solve; z = x0 reproduces psi_at_x0
    through the identical code path (the cache holds u(x0; mu)).
    """
    grid = sol.grid
    mu = grid.mu_nodes
    ehat = sol.veps_hat
    d = 2.0 * ehat * ehat * np.cosh(np.pi * mu) + 1.0
    zc = complex(z)
    if zc.imag == 0.0 and zc.real == sol.x0:
        uz = grid.u_x0
    elif zc.imag == 0.0 and 0.0 < zc.real <= 1.0:
        uz = eigfun_unit_matrix(np.array([zc.real]), mu)[:, 0]
    elif zc.imag == 0.0 and zc.real > 1.0:
        uz = eigfun_profile(zc.real, mu, mu_switch=grid.mu_switch)
    else:
        switch = grid.mu_switch if grid.mu_switch is not None else np.inf
        uz = eigfun_u(zc, mu, mu_switch=min(switch, 40.0))
    density = grid.u_x0 * uz * mu * np.tanh(np.pi * mu) / d
    val = grid.weights @ density
    return float(np.real(val)) if zc.imag == 0.0 else complex(val)


def eps_of_veps(sol: PhiSolution) -> float:
    """Constraint level eps = ||psi||_2 / ||psi||_H reached at this veps."""
    return sol.eps


def match_veps(x0: float, eps: float, grid: SpectralGrid | None = None) -> PhiSolution:
    """Invert veps -> eps by bisection on log10(veps) and return the matched state.

    eps must lie in (0, 1/2); the map is strictly increasing, so 60
    bisection steps on [1e-16, 1] pin veps to full double precision.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if grid is None:
        grid = spectral_grid_for_solver(x0, 10.0**_BISECT_LO)
    lo, hi = _BISECT_LO, _BISECT_HI
    eps_lo = solve_psi(x0, 10.0**lo, grid).eps
    eps_hi = solve_psi(x0, 1.0 - 1e-12, grid).eps
    if not eps_lo < eps < eps_hi:
        raise ValueError(
            f"eps = {eps} not bracketed on veps in [1e-16, 1]: "
            f"range is ({eps_lo:.3e}, {eps_hi:.3e})"
        )
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if solve_psi(x0, 10.0**mid, grid).eps < eps:
            lo = mid
        else:
            hi = mid
    return solve_psi(x0, 10.0 ** (0.5 * (lo + hi)), grid)


def delta_star_at(x0: float, eps: float, grid: SpectralGrid | None = None) -> float:
    """Worst-case relative discrepancy Delta*(eps) at the point x0."""
    return match_veps(x0, eps, grid).delta_star


@dataclass(frozen=True)
class PowerlawFit:
    """Least-squares slope of ln Delta* against ln eps, with local slopes."""

    x0: float
    eps: np.ndarray
    delta_star: np.ndarray
    slope: float
    intercept: float
    local_slopes: np.ndarray

    @property
    def gamma_reference(self) -> float:
        return gamma_star(self.x0)


def powerlaw_fit(x0: float, eps_list, grid: SpectralGrid | None = None) -> PowerlawFit:
    """Fit the power-law exponent over >= 4 decades of eps."""
    eps = np.sort(np.asarray(eps_list, dtype=float))
    if eps.size < 3:
        raise ValueError("need at least 3 eps values")
    if eps[-1] / eps[0] < 0.999e4:
        raise ValueError("eps range must span at least 4 decades")
    if grid is None:
        grid = spectral_grid_for_solver(x0, 10.0**_BISECT_LO)
    delta = np.array([delta_star_at(x0, e, grid) for e in eps])
    ln_e, ln_d = np.log(eps), np.log(delta)
    slope, intercept = np.polyfit(ln_e, ln_d, 1)
    local = np.gradient(ln_d, ln_e)
    return PowerlawFit(float(x0), eps, delta, float(slope), float(intercept), local)


@dataclass(frozen=True)
class PhiExtremal:
    """The normalized extremal phi = eps * psi / ||psi||_2.

    Carries ||phi||_2 = eps and Hardy norm 1 by construction; phi(x0)
    equals the worst-case discrepancy.
    """

    solution: PhiSolution

    def __call__(self, z):
        s = self.solution
        return s.eps * psi_value(s, z) / s.norm_l2

    @property
    def norm_l2(self) -> float:
        return self.solution.eps

    @property
    def norm_hardy(self) -> float:
        s = self.solution
        return s.eps * s.norm_hardy / s.norm_l2  # identically 1

    @property
    def at_x0(self) -> float:
        s = self.solution
        return s.eps * s.psi_at_x0 / s.norm_l2


def phi_extremal(sol: PhiSolution) -> PhiExtremal:
    return PhiExtremal(sol)


def _log_family_scale(eps: float) -> float:
    """Solve v * sqrt(|ln v|) = eps for v in (0, 1) (Newton on ln v)."""
    w = math.log(eps)
    for _ in range(80):
        f = w + 0.5 * math.log(-w) - math.log(eps)
        fp = 1.0 + 0.5 / w
        step = f / fp
        w -= step
        if abs(step) < 1e-15:
            break
    return math.exp(w)


def delta_star_asymptotic(x0: float, eps: float) -> float:
    """Small-eps law for Delta*(eps).

    x0 > 1:  C*(x0) * eps^gamma*(x0)  (pure power; exact closed form).

    x0 = 1:  the law is (sqrt(2)/pi) * eps * |ln eps| to leading order.
    Evaluated here through the composition of the two scale maps that
    define it,  (sqrt(2)/pi) * v * |ln v|^(3/2)  with  v sqrt(|ln v|) = eps,
    whose ratio to the leading form tends to 1 but resolves the
    |ln ln / ln| family drift at finite eps.
    """
    if x0 > 1.0:
        return c_star(x0) * eps ** gamma_star(x0)
    v = _log_family_scale(eps)
    return math.sqrt(2.0) / math.pi * v * abs(math.log(v)) ** 1.5


def delta_star_curve(x0: float, eps_list, grid: SpectralGrid | None = None):
    """Rows (eps, veps, delta_star, asymptotic_value, ratio, local_slope)."""
    eps = np.sort(np.asarray(eps_list, dtype=float))
    if grid is None:
        grid = spectral_grid_for_solver(x0, 10.0**_BISECT_LO)
    sols = [match_veps(x0, e, grid) for e in eps]
    delta = np.array([s.delta_star for s in sols])
    local = np.gradient(np.log(delta), np.log(eps))
    rows = []
    for e, s, d, sl in zip(eps, sols, delta, local):
        asym = delta_star_asymptotic(x0, e)
        rows.append(
            {
                "eps": float(e),
                "veps": s.veps,
                "delta_star": float(d),
                "asymptotic_value": asym,
                "ratio": float(d / asym),
                "local_slope": float(sl),
            }
        )
    return rows


# ----------------------------------------------------------------------
# bridge norms between the L2(0,1) norm and the Hardy norm
# ----------------------------------------------------------------------

def _atoms_of(f):
    ts = getattr(f, "ts", None)
    if ts is not None:
        return np.asarray(ts, dtype=float), np.asarray(f.coeffs, dtype=float)
    pairs = list(f)
    ts = np.array([p[0] for p in pairs], dtype=float)
    cs = np.array([p[1] for p in pairs], dtype=float)
    return ts, cs


def hp_constant(p: float) -> float:
    """Forward constant C_p with C_p^2 = p/(pi a_p) + pi p a_p / 6, a_p = cos(pi/(2p))."""
    if p <= 1.0:
        raise ValueError("the forward constant requires p > 1")
    ap = math.cos(math.pi / (2.0 * p))
    return math.sqrt(p / (math.pi * ap) + math.pi * p * ap / 6.0)


def hp_reverse_constant(p: float) -> float:
    """Reverse constant: ||f||_2 <= 2 sqrt(2 pi / p) ||f||_(h,p) on differences."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    return 2.0 * math.sqrt(2.0 * math.pi / p)


def hp_norm(f, p: float) -> float:
    """Bridge norm of an exponential sum f(x) = sum a_j e^(-t_j x).

    ||f||_(h,p)^2 = (1/pi) int_0^inf |F_p[f](iy)|^2 dy  with
    F_p[f](z) = f(z^(1/p)) / (z^((p-1)/(2p)) (z^(1/p) + 1)).

    After the substitution u = a_p y^(1/p) (a_p = cos(pi/(2p)), p > 1)
    this becomes

        (p / (pi a_p)) int_0^inf |f(u (1 + i tan(pi/(2p))))|^2
                                  / ((1+u)^2 + u^2 tan^2(pi/(2p))) du,

    evaluated by adaptive quadrature; p = 1 integrates the defining form
    directly.  f may be a CmfMeasure or an iterable of (t, a) pairs with
    coefficients of either sign (differences of completely monotone
    functions are allowed; the forward C_p bound only applies to
    nonnegative coefficients).
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    ts, cs = _atoms_of(f)
    if p == 1.0:
        def integrand(y):
            val = np.sum(cs * np.exp(-1j * ts * y))
            return abs(val) ** 2 / (1.0 + y * y)

        total, err = quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=400)
        norm_sq = total / math.pi
    else:
        tp = math.tan(math.pi / (2.0 * p))
        ap = math.cos(math.pi / (2.0 * p))

        def integrand(u):
            val = np.sum(cs * np.exp(-ts * u * (1.0 + 1j * tp)))
            return abs(val) ** 2 / ((1.0 + u) ** 2 + (u * tp) ** 2)

        total, err = quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=400)
        norm_sq = total * p / (math.pi * ap)
    if not np.isfinite(norm_sq) or (norm_sq > 0 and err / norm_sq > 1e-6):
        raise RuntimeError(f"bridge-norm quadrature did not converge (err={err:.2e})")
    return math.sqrt(norm_sq)
