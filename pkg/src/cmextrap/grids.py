"""Quadrature grids on (0, 1) and on the spectral mu axis.

Two grid families cover the unit interval:

* plain Gauss-Legendre, the default carrier for grid functions and the
  Nystrom discretization;
* Gauss-Legendre under the log map y = e^(-v), v in [0, vmax], whose
  nodes resolve the x^(-1/2 +- i*mu) endpoint oscillation of the kernel
  eigenfunctions (fixed frequency in v).

Both integrate the constant 1 to unity within 1e-12 (the log family
drops only the mass e^(-vmax) below its smallest node).

The spectral grid is a uniform composite-Simpson rule on [0, mu_max].
For the worst-case solver, mu_max follows the tail rule

    mu_max = (2/pi) |ln eps_hat| + margin(x0),

where the margin is sized so that the slowest integrand, decaying like
e^((beta-1)*pi*mu) past the crossover mu* = (2/pi)|ln eps_hat| with
beta = 2*arccos(1/x0)/pi, contributes at most TAIL_FRACTION of the
integral beyond mu_max.  At x0 = 1 (beta -> 0) the margin floor of 6
already gives e^(-6*pi) ~ 6.5e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .special import eigfun_profile

__all__ = [
    "UnitGridFunction",
    "SpectralGrid",
    "unit_gauss_legendre",
    "unit_gauss_legendre_log",
    "dense_log_rule",
    "simpson_weights",
    "spectral_grid_for_transform",
    "spectral_grid_for_solver",
    "solver_mu_max",
    "TAIL_FRACTION",
]

TAIL_FRACTION = 1e-8
_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class UnitGridFunction:
    """A function carried by quadrature nodes/weights on (0, 1)."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    family: str = "gauss-legendre"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        values = np.asarray(self.values)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "values", values)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.shape != values.shape:
            raise ValueError("nodes, weights, values must be 1-d and congruent")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        if np.any((nodes <= 0.0) | (nodes >= 1.0)):
            raise ValueError("nodes must lie in the open interval (0, 1)")
        if np.any(weights <= 0.0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(
                f"weights sum to {weights.sum():.15f}, expected 1 within {_WEIGHT_SUM_TOL}"
            )

    @property
    def n(self) -> int:
        return self.nodes.size

    def with_values(self, values) -> "UnitGridFunction":
        return UnitGridFunction(self.nodes, self.weights, np.asarray(values), self.family)

    def integral(self):
        return self.weights @ self.values

    def norm_l2(self) -> float:
        return float(np.sqrt(np.real(self.weights @ (self.values * np.conj(self.values)))))

    def dot(self, other: "UnitGridFunction"):
        if other.nodes.shape != self.nodes.shape or not np.allclose(other.nodes, self.nodes):
            raise ValueError("grid functions live on different grids")
        return self.weights @ (self.values * other.values)


def _gl01(n: int):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def unit_gauss_legendre(n: int, fn=None) -> UnitGridFunction:
    """Gauss-Legendre rule on (0, 1); values from `fn` or ones."""
    nodes, weights = _gl01(n)
    values = np.ones_like(nodes) if fn is None else np.asarray(fn(nodes))
    return UnitGridFunction(nodes, weights, values, "gauss-legendre")


def unit_gauss_legendre_log(n: int, vmax: float = 40.0, fn=None) -> UnitGridFunction:
    """Gauss-Legendre rule in the log variable y = e^(-v), v in [0, vmax].

    Weight sum is 1 - e^(-vmax); vmax >= 28 keeps it within 1e-12 of 1.
    """
    if vmax < 28.0:
        raise ValueError("vmax < 28 violates the unit weight-sum invariant")
    s, w = _gl01(n)
    v = vmax * s
    nodes = np.exp(-v)[::-1]
    weights = (vmax * w * np.exp(-v))[::-1]
    values = np.ones_like(nodes) if fn is None else np.asarray(fn(nodes))
    return UnitGridFunction(nodes, weights, values, "gauss-legendre-log")


def dense_log_rule(vmax: float = 60.0, points_per_panel: int = 24):
    """Composite Gauss-Legendre rule on (e^(-vmax), 1), one panel per e-fold.

    Resolves integrands with x^(-1/2) * oscillation-in-ln(x) behaviour at
    the origin; used to apply the kernel operator to eigenfunctions
    accurately.  Returns (nodes, weights) without the UnitGridFunction
    weight-sum constraint (the truncated mass below e^(-vmax) is
    ~ vmax * e^(-vmax)).
    """
    xs, ws = _gl01(points_per_panel)
    panels = int(math.ceil(vmax))
    v = (np.arange(panels)[:, None] + xs[None, :]).ravel()
    w = np.tile(ws, panels)
    nodes = np.exp(-v)
    return nodes, w * nodes


def simpson_weights(intervals: int, step: float) -> np.ndarray:
    """Composite Simpson weights on intervals+1 uniform nodes (intervals even)."""
    if intervals % 2 != 0 or intervals < 2:
        raise ValueError("composite Simpson needs an even, positive interval count")
    w = np.ones(intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (step / 3.0)


@dataclass(frozen=True)
class SpectralGrid:
    """Simpson rule on [0, mu_max] with cached eigenfunction samples at x0."""

    mu_nodes: np.ndarray
    weights: np.ndarray
    mu_max: float
    x0: float | None = None
    u_x0: np.ndarray | None = None
    mu_switch: float | None = field(default=None)

    def __post_init__(self):
        if np.any(np.diff(self.mu_nodes) <= 0.0) or self.mu_nodes[0] != 0.0:
            raise ValueError("mu grid must increase from 0")
        if np.any(self.weights <= 0.0):
            raise ValueError("mu weights must be positive")

    @property
    def n(self) -> int:
        return self.mu_nodes.size

    def integrate(self, samples) -> float:
        return float(self.weights @ samples)


def _uniform_simpson(mu_max: float, step: float):
    m = int(math.ceil(mu_max / step))
    if m % 2:
        m += 1
    mu = np.linspace(0.0, m * step, m + 1)
    return mu, simpson_weights(m, step)


def spectral_grid_for_transform(mu_max: float = 12.0, step: float = 0.05) -> SpectralGrid:
    """Grid for the forward/inverse eigenfunction transforms."""
    mu, w = _uniform_simpson(mu_max, step)
    return SpectralGrid(mu, w, mu[-1])


def solver_mu_max(x0: float, veps_hat: float) -> float:
    """Tail rule for the solver's truncation point."""
    crossover = (2.0 / math.pi) * abs(math.log(veps_hat))
    if x0 <= 1.0:
        margin = 6.0
    else:
        beta = 2.0 * math.acos(1.0 / x0) / math.pi
        rate = math.pi * (1.0 - beta)
        margin = max(6.0, (math.log(math.sin(math.pi * beta) / rate) - math.log(TAIL_FRACTION)) / rate)
    return crossover + margin


def spectral_grid_for_solver(
    x0: float,
    veps_min: float,
    step: float = 0.02,
    mu_switch: float | None = None,
) -> SpectralGrid:
    """Solver grid sized for every threshold down to veps_min, with u(x0; mu) cached.

    One grid serves a whole sweep: thresholds above veps_min concentrate
    their integrands below this grid's crossover, so the cache is shared.
    """
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    if not 0.0 < veps_min <= 1.0:
        raise ValueError("veps_min must lie in (0, 1]")
    veps_hat = veps_min / math.sqrt(2.0 * math.pi)
    mu, w = _uniform_simpson(solver_mu_max(x0, veps_hat), step)
    u = eigfun_profile(x0, mu, mu_switch=mu_switch)
    return SpectralGrid(mu, w, mu[-1], x0=float(x0), u_x0=u, mu_switch=mu_switch)
