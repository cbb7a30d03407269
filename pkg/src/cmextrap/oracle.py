"""Independent brute-force validators for the spectral and local solvers.

* Nystrom: dense symmetric collocation of veps^2 psi + K psi = 1/(x0 + .)
  on a Gauss-Legendre grid, with the Hardy norm in closed Gram form
  (no quadrature over the half-line) and the analytic extension rule
  psi(z) = (1/veps^2) (1/(z+x0) - (K psi)(z)).
* A dense-grid nonnegative least-squares competitor for the local
  problem (a restriction of the true problem, so its residual upper
  bounds the exchange solver's).
* The convex-duality upper bound  Delta*(eps)^2 <= q * Q(eps sqrt(p/q)),
  q = p/(p-1), scanned over p, with equality at p = psi(x0)/||psi||_2^2.
* The closed-form family showing left-of-interval extrapolation is
  unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import nnls

from .grids import UnitGridFunction, unit_gauss_legendre
from .local import CmfMeasure, solve_local

__all__ = [
    "NystromSolution",
    "DualBoundResult",
    "nystrom_solve",
    "nystrom_match_veps",
    "dual_upper_bound",
    "grid_local_solve",
    "left_unbounded_demo",
]

_EPS2_FLOOR = 1e-10


@dataclass(frozen=True)
class NystromSolution:
    """Collocation solution of the resolvent equation on a unit grid."""

    grid: UnitGridFunction
    x0: float
    eps2: float
    psi_values: np.ndarray
    psi_at_x0: float
    norm_l2: float
    norm_hardy: float
    eps: float
    delta_star: float
    pythagoras_residual: float
    system_residual: float

    def psi_at(self, z):
        """Analytic extension (1/eps2) (1/(z+x0) - (K psi)(z))."""
        nodes, w = self.grid.nodes, self.grid.weights
        z_arr = np.atleast_1d(np.asarray(z))
        kpsi = (1.0 / (z_arr[:, None] + nodes[None, :])) @ (w * self.psi_values)
        out = (1.0 / (z_arr + self.x0) - kpsi) / self.eps2
        return out[0] if np.ndim(z) == 0 else out


def nystrom_solve(x0: float, eps2: float, n: int = 400) -> NystromSolution:
    """Dense symmetric solve of (eps2 I + K) psi = 1/(x0 + .) at n >= 50 nodes.

    Refused below eps2 = 1e-10: the smallest operator eigenvalue is about
    eps2, so the dense route degrades exactly where the spectral solver
    excels; the two validate each other on the overlap.
    """
    if n < 50:
        raise ValueError("need n >= 50 nodes")
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    if eps2 < _EPS2_FLOOR:
        raise ValueError(
            f"eps2 = {eps2:.3e} below the conditioning floor {_EPS2_FLOOR:.0e} "
            f"(condition estimate {math.pi / max(eps2, 1e-300):.2e}); "
            "use the spectral solver there"
        )
    grid = unit_gauss_legendre(n)
    y, w = grid.nodes, grid.weights
    kmat = 1.0 / (y[:, None] + y[None, :])
    sw = np.sqrt(w)
    sym = eps2 * np.eye(n) + sw[:, None] * kmat * sw[None, :]
    rhs = 1.0 / (x0 + y)
    chol = cho_factor(sym)
    psi = cho_solve(chol, sw * rhs) / sw

    sys_resid = eps2 * psi + kmat @ (w * psi) - rhs
    sys_scale = np.max(np.abs(rhs)) + eps2 * np.max(np.abs(psi)) + np.max(np.abs(kmat @ (w * psi)))
    system_residual = float(np.max(np.abs(sys_resid)) / sys_scale)

    kpsi_x0 = float(np.sum(w * psi / (x0 + y)))
    psi_x0 = (1.0 / (2.0 * x0) - kpsi_x0) / eps2
    norm_l2_sq = float(w @ (psi * psi))
    # ||Lambda psi - e^(-x0 t)||^2 in closed Gram form, then the Hardy norm
    # via the extension identity.
    gram = float((w * psi) @ kmat @ (w * psi))
    cross = float(np.sum(w * psi / (y + x0)))
    hardy_sq = (gram - 2.0 * cross + 1.0 / (2.0 * x0)) / eps2**2
    pythagoras = abs(norm_l2_sq + eps2 * hardy_sq - psi_x0) / psi_x0

    norm_l2 = math.sqrt(norm_l2_sq)
    norm_hardy = math.sqrt(hardy_sq)
    return NystromSolution(
        grid=grid,
        x0=float(x0),
        eps2=float(eps2),
        psi_values=psi,
        psi_at_x0=psi_x0,
        norm_l2=norm_l2,
        norm_hardy=norm_hardy,
        eps=norm_l2 / norm_hardy,
        delta_star=psi_x0 / norm_hardy,
        pythagoras_residual=pythagoras,
        system_residual=system_residual,
    )


def nystrom_match_veps(x0: float, eps: float, n: int = 400) -> NystromSolution:
    """Invert eps(veps) within the Nystrom solver's validity range."""
    lo, hi = math.log10(math.sqrt(_EPS2_FLOOR)), 0.0
    sol_lo = nystrom_solve(x0, (10.0**lo) ** 2, n)
    sol_hi = nystrom_solve(x0, (1.0 - 1e-10) ** 2, n)
    if not sol_lo.eps < eps < sol_hi.eps:
        raise ValueError(
            f"eps = {eps} outside the Nystrom-reachable range "
            f"({sol_lo.eps:.3e}, {sol_hi.eps:.3e}) for veps in [1e-5, 1]"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if nystrom_solve(x0, (10.0**mid) ** 2, n).eps < eps:
            lo = mid
        else:
            hi = mid
    return nystrom_solve(x0, (10.0 ** (0.5 * (lo + hi))) ** 2, n)


@dataclass(frozen=True)
class DualBoundResult:
    """Scan of the relaxation upper bound over the weight parameter p."""

    x0: float
    eps: float
    p_scan: np.ndarray
    bounds: np.ndarray
    p_star: float
    bound_at_p_star: float
    delta_star: float

    @property
    def min_bound(self) -> float:
        return float(np.min(self.bounds))


def dual_upper_bound(x0: float, eps: float, p_scan, n: int = 400) -> DualBoundResult:
    """Upper bound sqrt(q * Q(eps sqrt(p/q))) for each scanned p > 1.

    Q(veps) = veps^2 psi_veps(x0) from the Nystrom solver.  Every scanned
    p yields a valid upper bound for Delta*(eps); at the optimizer
    p* = psi(x0)/||psi||_2^2 of the matched state the bound collapses to
    Delta* itself.
    """
    p_scan = np.asarray(p_scan, dtype=float)
    if np.any(p_scan <= 1.0):
        raise ValueError("every scanned p must exceed 1")
    matched = nystrom_match_veps(x0, eps, n)
    delta_star = matched.delta_star

    def bound(p):
        q = p / (p - 1.0)
        veps = eps * math.sqrt(p / q)  # = eps * sqrt(p - 1)
        sol = nystrom_solve(x0, veps * veps, n)
        return math.sqrt(q * veps * veps * sol.psi_at_x0)

    bounds = np.array([bound(p) for p in p_scan])
    p_star = matched.psi_at_x0 / matched.norm_l2**2
    return DualBoundResult(
        x0=float(x0),
        eps=float(eps),
        p_scan=p_scan,
        bounds=bounds,
        p_star=float(p_star),
        bound_at_p_star=float(bound(p_star)),
        delta_star=float(delta_star),
    )


def grid_local_solve(f0, x0: float, delta: float, t_grid) -> tuple[CmfMeasure, float]:
    """Dense-grid competitor for the local problem.

    Nonnegative least squares over weights on a fixed atom grid, with the
    value constraint adjoined as a large penalty row; the objective is the
    Gauss-Legendre discretization of ||f - f0||_2^2.  Restricting the
    support to the grid can only increase the residual, so this upper
    bounds (and under refinement approaches) the exchange solver's value.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size > 2000:
        raise ValueError("atom grid capped at 2000 points")
    f0_x0 = float(f0.value(x0))
    v = f0_x0 + delta
    if v <= 0.0:
        raise ValueError("infeasible offset")

    carrier = unit_gauss_legendre(400)
    x, w = carrier.nodes, carrier.weights
    sqw = np.sqrt(w)
    design = np.exp(-np.outer(x, t_grid)) * sqw[:, None]
    target = np.asarray(f0.value(x)) * sqw

    h = np.exp(-x0 * t_grid)
    rho = 1e7 * max(1.0, float(np.abs(target).max()))
    a_mat = np.vstack([design, rho * h])
    b_vec = np.concatenate([target, [rho * v]])
    weights, _ = nnls(a_mat, b_vec)

    keep = weights > 0.0
    measure = CmfMeasure(t_grid[keep], weights[keep])
    # Residual in the same closed Gram form the exchange solver reports.
    from .local import gram_entry

    ts, a = measure.ts, measure.coeffs
    cross = np.atleast_1d(f0.lambda_transform(ts))
    res_sq = float(a @ gram_entry(ts[:, None] + ts[None, :]) @ a) - 2.0 * float(
        a @ cross
    ) + f0.l2_norm_sq()
    return measure, math.sqrt(max(res_sq, 0.0))


def left_unbounded_demo(eps: float, k_list, c: float = 0.0):
    """Perturbation family showing extrapolation left of the data interval fails.

    For f_K - f = eps sqrt(2K) e^(-Kx): the L2(0,1) discrepancy is
    eps sqrt(1 - e^(-2K)) <= eps for every K, while the gap at c <= 0 is
    eps sqrt(2K) e^(-Kc), unbounded as K grows.  All values closed-form.
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    if c > 0.0:
        raise ValueError("the demonstration point must satisfy c <= 0")
    rows = []
    for k in k_list:
        if k <= 0.0:
            raise ValueError("K must be > 0")
        l2 = eps * math.sqrt(-math.expm1(-2.0 * k))
        gap = eps * math.sqrt(2.0 * k) * math.exp(-k * c)
        rows.append({"K": float(k), "l2_discrepancy": l2, "gap_at_c": gap, "c": float(c)})
    return rows
