"""Local worst-case problem: nearest completely monotone functions with a
prescribed offset at the evaluation point.

Given a completely monotone f0 with finite L2(0,1) norm, a point x0 >= 1
and an offset delta > -f0(x0), we minimize ||f - f0||_(L2(0,1))^2 over
completely monotone f with f(x0) = f0(x0) + delta.  The minimizer is an
atomic measure sum a_j exp(-t_j x), characterized by the certificate

    Chat(t) = C(t) - m e^(-x0 t) >= 0  for all t >= 0,
    Chat(t_j) = 0 at every support atom,

where C(t) = int_0^1 e^(-xt) (f_*(x) - f0(x)) dx is the moment gap and
m = (1/(f0(x0)+delta)) int_0^1 f_* (f_* - f0) dx.  Nonnegativity plus the
atom zeros is necessary and sufficient, so a verified certificate is a
machine-checkable proof of optimality.

The solver is an exchange iteration: solve the equality-constrained
nonnegative quadratic program for the weights on the current support,
insert the global minimizer of the certificate, prune, repeat.  For
f0(x) = e^(-x) the optimum has closed form (two atoms {0, tau} for
delta > 0, one atom {tau} for delta < 0) and is solved here by
eliminating the linear unknowns and root-finding the single tau
equation; the two routes cross-validate each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "CmfMeasure",
    "BlackBoxCmf",
    "CapriniState",
    "SweepResult",
    "gram_entry",
    "gram_entry_deriv",
    "caprini_gap",
    "caprini_C",
    "solve_local",
    "sweep_epsilon",
    "exp_closed_form",
    "e_slopes",
    "certificate_report",
]

_PRUNE_REL = 1e-12
_MERGE_TOL = 1e-6
_CONSTRAINT_TOL = 1e-10


def gram_entry(s):
    """g(s) = (1 - e^(-s))/s = int_0^1 e^(-sx) dx, with g(0) = 1."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s == 0.0, 1.0, s)
    out = np.where(s == 0.0, 1.0, -np.expm1(-safe) / safe)
    return float(out) if out.ndim == 0 else out


def gram_entry_deriv(s):
    """g'(s) = (e^(-s)(1+s) - 1)/s^2, series switch below |s| = 1e-4."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = np.abs(s) < 1e-4
    sb = s[~small]
    out[~small] = (np.exp(-sb) * (1.0 + sb) - 1.0) / (sb * sb)
    ss = s[small]
    out[small] = -0.5 + ss / 3.0 - ss * ss / 8.0 + ss**3 / 30.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CmfMeasure:
    """Finite atomic positive measure; represents f(x) = sum a_j exp(-x t_j)."""

    ts: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        cs = np.asarray(self.coeffs, dtype=float)
        order = np.argsort(ts)
        ts, cs = ts[order], cs[order]
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "coeffs", cs)
        if ts.size != cs.size:
            raise ValueError("atom locations and coefficients must pair up")
        if ts.size and (np.any(ts < 0.0) or np.any(np.diff(ts) <= 0.0)):
            raise ValueError("atom locations must be distinct, sorted, >= 0")
        if np.any(cs <= 0.0):
            raise ValueError("atom coefficients must be positive")

    @classmethod
    def from_pairs(cls, pairs) -> "CmfMeasure":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    @classmethod
    def exponential(cls) -> "CmfMeasure":
        return cls(np.array([1.0]), np.array([1.0]))

    @property
    def n_atoms(self) -> int:
        return self.ts.size

    def value(self, x):
        x_arr = np.atleast_1d(np.asarray(x))
        out = np.exp(-np.multiply.outer(x_arr, self.ts)) @ self.coeffs
        return out[0] if np.ndim(x) == 0 else out

    def lambda_transform(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = gram_entry(t_arr[:, None] + self.ts[None, :]) @ self.coeffs
        return float(out[0]) if np.ndim(t) == 0 else out

    def l2_norm_sq(self) -> float:
        g = gram_entry(self.ts[:, None] + self.ts[None, :])
        return float(self.coeffs @ g @ self.coeffs)

    def star_norm(self) -> float:
        """sum a_j/(t_j + 1); a lower bound for the L2(0,1) norm."""
        return float(np.sum(self.coeffs / (self.ts + 1.0)))


@dataclass(frozen=True)
class BlackBoxCmf:
    """f0 exposed only through its value at x0 and its cutoff Laplace transform."""

    value_fn: object
    lambda_fn: object
    l2_sq: float

    def value(self, x):
        return self.value_fn(x)

    def lambda_transform(self, t):
        return self.lambda_fn(t)

    def l2_norm_sq(self) -> float:
        return self.l2_sq


def caprini_gap(f_star, f0, t):
    """Moment gap C(t) = (Lambda f_*)(t) - (Lambda f0)(t)."""
    return f_star.lambda_transform(t) - f0.lambda_transform(t)


@dataclass(frozen=True)
class CapriniState:
    """A solved local problem with its optimality certificate data."""

    f0: object
    x0: float
    delta: float
    support: CmfMeasure
    m: float
    residual_l2: float
    cert_min: float
    iterations: int = 0
    converged: bool = True
    residual_history: tuple = field(default=())

    def certificate(self, t):
        """Chat(t) = C(t) - m e^(-x0 t); >= 0 with zeros on the support at optimum."""
        return caprini_gap(self.support, self.f0, t) - self.m * np.exp(
            -self.x0 * np.asarray(t, dtype=float)
        )

    def constraint_residual(self) -> float:
        f0_x0 = float(self.f0.value(self.x0))
        target = f0_x0 + self.delta
        got = float(self.support.value(self.x0)) if self.support.n_atoms else 0.0
        return abs(got - target) / (abs(f0_x0) + abs(self.delta) + 1e-300)

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "delta": self.delta,
            "atoms": [[float(t), float(a)] for t, a in zip(self.support.ts, self.support.coeffs)],
            "multiplier_m": self.m,
            "residual_l2": self.residual_l2,
            "cert_min": self.cert_min,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def caprini_C(state: CapriniState, t):
    """Moment gap of a solved state at t (vectorized)."""
    return caprini_gap(state.support, state.f0, t)


def certificate_report(state: CapriniState, n_grid: int = 10_000, t_max: float | None = None):
    """Scan the certificate on {0} + a log-spaced grid; return (min, argmin, atom_max).

    atom_max is max_j |Chat(t_j)| over the support atoms; together with a
    nonnegative grid minimum this is the machine check of optimality.
    """
    if t_max is None:
        t_max = 50.0 + 10.0 * state.x0
    ts = np.concatenate([[0.0], np.geomspace(1e-8, t_max, n_grid - 1)])
    vals = state.certificate(ts)
    i = int(np.argmin(vals))
    atom_max = (
        float(np.max(np.abs(state.certificate(state.support.ts))))
        if state.support.n_atoms
        else 0.0
    )
    return float(vals[i]), float(ts[i]), atom_max


# ----------------------------------------------------------------------
# equality-constrained nonnegative quadratic program (dense active set)
# ----------------------------------------------------------------------

def _kkt_solve(g, c, h, v, free):
    """Solve the equality-KKT system on the free index set.

    Near-duplicate atoms make the Gram block numerically singular; a
    trace-scaled Tikhonov jitter then picks the minimum-energy split
    between the duplicates, which is physically immaterial.
    """
    idx = np.nonzero(free)[0]
    k = idx.size
    gff = g[np.ix_(idx, idx)]
    rhs = np.concatenate([c[idx], [v]])

    def assemble(ridge):
        mat = np.zeros((k + 1, k + 1))
        mat[:k, :k] = gff + ridge * np.eye(k)
        mat[:k, k] = -h[idx]
        mat[k, :k] = h[idx]
        return mat

    sol = None
    for ridge in (0.0, 1e-13 * np.trace(gff) / max(k, 1)):
        mat = assemble(ridge)
        try:
            cand = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(cand)):
            sol = cand
            break
    if sol is None:
        sol = np.linalg.lstsq(assemble(0.0), rhs, rcond=None)[0]
    a = np.zeros_like(c)
    a[idx] = sol[:k]
    return a, sol[k]


def _eq_nnls(g, c, h, v, max_iter=400):
    """min (1/2) a^T G a - c^T a  s.t.  h^T a = v, a >= 0.

    Primal active set; exact for the handful of atoms an exchange support
    carries.  Requires v > 0 and at least one h_j > 0.
    """
    n = c.size
    if not np.any(h > 0.0):
        raise ValueError("constraint row has no positive entry; problem infeasible")
    a = np.zeros(n)
    j0 = int(np.argmax(h))
    a[j0] = v / h[j0]
    free = np.zeros(n, dtype=bool)
    free[j0] = True
    lam = 0.0
    zero_steps = 0
    for _ in range(max_iter):
        a_new, lam = _kkt_solve(g, c, h, v, free)
        if np.all(a_new[free] >= -1e-14 * max(1.0, float(np.abs(a_new).max()))):
            a = np.where(free, np.maximum(a_new, 0.0), 0.0)
            grad = g @ a - c - lam * h
            grad[free] = 0.0
            j = int(np.argmin(grad))
            dual_scale = max(1.0, float(np.abs(c).max()), abs(lam) * float(np.abs(h).max()))
            if grad[j] >= -1e-11 * dual_scale:
                return a, lam
            free[j] = True
            zero_steps = 0
            continue
        # step toward a_new until the first free variable hits zero
        d = a_new - a
        bad = free & (a_new < 0.0) & (d < 0.0)
        if not bad.any():
            return np.where(free, np.maximum(a_new, 0.0), 0.0), lam
        steps = -a[bad] / d[bad]
        alpha = float(np.min(steps))
        block = np.nonzero(bad)[0][int(np.argmin(steps))]
        a = a + alpha * d
        a[block] = 0.0
        free[block] = False
        if alpha < 1e-15:
            zero_steps += 1
            if zero_steps > n + 2:
                # Degenerate cycling on duplicate columns: the current a is
                # feasible and KKT-stationary up to the duplication; accept.
                return a, lam
        else:
            zero_steps = 0
    raise RuntimeError("active-set weight solve did not converge")


def _as_f0(f0):
    if isinstance(f0, (CmfMeasure, BlackBoxCmf)):
        return f0
    raise TypeError("f0 must be a CmfMeasure or BlackBoxCmf")


def _identity_state(f0, x0) -> CapriniState:
    support = f0 if isinstance(f0, CmfMeasure) else CmfMeasure(np.array([]), np.array([]))
    return CapriniState(
        f0=f0, x0=float(x0), delta=0.0, support=support, m=0.0,
        residual_l2=0.0, cert_min=0.0, iterations=0, converged=True,
    )


def solve_local(
    f0,
    x0: float,
    delta: float,
    tol_cert: float | None = None,
    t_max: float | None = None,
    max_outer: int = 200,
    search_points: int = 2000,
) -> CapriniState:
    """Exchange iteration plus Newton polish for the local worst-case minimizer.

    Discovery phase: solve the nonnegative weight program on the current
    support (value constraint adjoined) and insert the global minimizer
    of the certificate Chat on [0, t_max]; the objective decreases
    strictly at every insertion.  Coalescing optima make the inserted
    atoms cluster, so once insertion stalls the clusters are merged and
    the full stationarity system -- Chat(t_j) = 0 at every atom,
    Chat'(t_j) = 0 at interior atoms, and the value constraint -- is
    solved by Newton in (weights, interior positions, multiplier).  The
    polished state must then pass the global certificate scan; otherwise
    progressively looser cluster radii are tried and, failing all, the
    best discovery-phase state is returned unconverged.
    """
    f0 = _as_f0(f0)
    x0 = float(x0)
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    f0_x0 = float(f0.value(x0))
    if delta <= -f0_x0:
        raise ValueError(f"infeasible offset: delta must exceed -f0(x0) = {-f0_x0:.6e}")
    if delta == 0.0:
        return _identity_state(f0, x0)
    if t_max is None:
        t_max = 50.0 + 10.0 * x0
    f0_l2sq = f0.l2_norm_sq()
    if tol_cert is None:
        tol_cert = 1e-10 * f0_l2sq
    v = f0_x0 + delta

    support = [0.0, 0.5, 2.0]
    if isinstance(f0, CmfMeasure):
        support = sorted(set(support) | {float(t) for t in f0.ts if t < t_max})
    ts = np.array(support)

    scan = np.concatenate([[0.0], np.geomspace(1e-6, t_max, search_points)])
    history = []
    best = None
    for it in range(1, max_outer + 1):
        ts, a, m, residual, cert, t_new, c_min = _weights_and_certificate(
            f0, x0, v, ts, f0_l2sq, scan
        )
        history.append(residual)
        state = CapriniState(
            f0=f0, x0=x0, delta=float(delta), support=CmfMeasure(ts, a), m=m,
            residual_l2=residual, cert_min=c_min, iterations=it,
            converged=c_min >= -tol_cert, residual_history=tuple(history),
        )
        if best is None or state.cert_min > best.cert_min:
            best = state
        # The Newton polish certifies the true support long before the
        # one-point insertion converges (which is only linear when optimum
        # atoms coalesce), so try it every round.
        polished = _newton_polish(f0, x0, v, state, f0_l2sq, tol_cert, scan, delta, history)
        if polished is not None:
            return polished
        if state.converged or np.min(np.abs(ts - t_new)) < _MERGE_TOL:
            break  # certified, or insertion stalled on an existing atom
        ts = np.sort(np.append(ts, t_new))

    return best


def _weights_and_certificate(f0, x0, v, ts, f0_l2sq, scan):
    """One exchange round: weights, multiplier, residual, certificate minimum."""
    g = gram_entry(ts[:, None] + ts[None, :])
    c = np.atleast_1d(f0.lambda_transform(ts))
    h = np.exp(-x0 * ts)
    a, _ = _eq_nnls(g, c, h, v)
    keep = a > _PRUNE_REL * a.sum()
    ts, a, c = ts[keep], a[keep], c[keep]

    gram = gram_entry(ts[:, None] + ts[None, :])
    m = float((a @ gram @ a - a @ c) / v)
    res_sq = float(a @ gram @ a) - 2.0 * float(a @ c) + f0_l2sq
    residual = math.sqrt(max(res_sq, 0.0))
    f_star = CmfMeasure(ts, a)

    def cert(t):
        return caprini_gap(f_star, f0, t) - m * np.exp(-x0 * np.asarray(t, dtype=float))

    grid_vals = cert(scan)
    i_min = int(np.argmin(grid_vals))
    t_new, c_min = _refine_scalar_min(
        cert, scan[max(i_min - 1, 0)], scan[min(i_min + 1, scan.size - 1)]
    )
    if grid_vals[i_min] < c_min:
        t_new, c_min = float(scan[i_min]), float(grid_vals[i_min])
    return ts, a, m, residual, cert, t_new, c_min


def _cluster_merge(ts, a, radius):
    """Group atoms within `radius`; weighted-mean positions, summed weights."""
    out_t, out_a = [], []
    i = 0
    while i < ts.size:
        j = i
        while j + 1 < ts.size and ts[j + 1] - ts[j] <= radius:
            j += 1
        w = a[i : j + 1]
        t = ts[i : j + 1]
        mass = float(w.sum())
        pos = 0.0 if t[0] == 0.0 else float((w @ t) / mass)
        out_t.append(pos)
        out_a.append(mass)
        i = j + 1
    return np.array(out_t), np.array(out_a)


def _lambda_f0_deriv(f0, t):
    if isinstance(f0, CmfMeasure):
        return float(gram_entry_deriv(t + f0.ts) @ f0.coeffs)
    h = 1e-6 * (1.0 + abs(t))
    return (float(f0.lambda_transform(t + h)) - float(f0.lambda_transform(max(t - h, 0.0)))) / (
        h + min(t, h)
    )


def _newton_polish(f0, x0, v, seed, f0_l2sq, tol_cert, scan, delta, history):
    """Solve the stationarity system on merged clusters; accept only if certified."""
    from scipy.optimize import root

    ts0, a0 = seed.support.ts, seed.support.coeffs
    for radius in (0.25, 0.08, 0.02, 10.0 * _MERGE_TOL):
        ts, a = _cluster_merge(ts0, a0, radius)
        interior = ts > 0.0
        k, ki = ts.size, int(np.count_nonzero(interior))

        def equations(u):
            w = u[:k]
            pos = ts.copy()
            pos[interior] = u[k : k + ki]
            m = u[k + ki]
            fs_g = gram_entry(pos[:, None] + pos[None, :])
            lam0 = np.atleast_1d(f0.lambda_transform(pos))
            chat = fs_g @ w - lam0 - m * np.exp(-x0 * pos)
            dchat = np.array(
                [
                    float(gram_entry_deriv(pos[j] + pos) @ w)
                    - _lambda_f0_deriv(f0, pos[j])
                    + m * x0 * math.exp(-x0 * pos[j])
                    for j in range(k)
                    if interior[j]
                ]
            )
            constraint = float(w @ np.exp(-x0 * pos)) - v
            return np.concatenate([chat, dchat, [constraint]])

        u0 = np.concatenate([a, ts[interior], [seed.m]])
        sol = root(equations, u0, method="hybr")
        # hybr can flag success=False on xtol exhaustion at an excellent
        # root; judge by the residual itself.
        if np.max(np.abs(np.atleast_1d(sol.fun))) > 1e-11 * max(1.0, abs(v)):
            continue
        w = sol.x[:k]
        pos = ts.copy()
        pos[interior] = sol.x[k : k + ki]
        if np.any(w <= 0.0) or np.any(pos < 0.0) or np.any(np.diff(np.sort(pos)) < _MERGE_TOL):
            continue
        order = np.argsort(pos)
        support = CmfMeasure(pos[order], w[order])
        m = float(sol.x[k + ki])
        gram = gram_entry(support.ts[:, None] + support.ts[None, :])
        c = np.atleast_1d(f0.lambda_transform(support.ts))
        res_sq = float(support.coeffs @ gram @ support.coeffs) - 2.0 * float(
            support.coeffs @ c
        ) + f0_l2sq
        residual = math.sqrt(max(res_sq, 0.0))

        def cert(t):
            return caprini_gap(support, f0, t) - m * np.exp(-x0 * np.asarray(t, dtype=float))

        grid_vals = cert(scan)
        i_min = int(np.argmin(grid_vals))
        _, c_min = _refine_scalar_min(
            cert, scan[max(i_min - 1, 0)], scan[min(i_min + 1, scan.size - 1)]
        )
        c_min = min(c_min, float(grid_vals[i_min]))
        if c_min < -tol_cert:
            continue
        return CapriniState(
            f0=f0, x0=x0, delta=float(delta), support=support, m=m,
            residual_l2=residual, cert_min=c_min,
            iterations=seed.iterations, converged=True,
            residual_history=tuple(history) + (residual,),
        )
    return None


def _refine_scalar_min(fn, lo, hi):
    if hi <= lo:
        return float(lo), float(fn(lo))
    res = minimize_scalar(
        lambda t: float(fn(float(t))), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-14},
    )
    return float(res.x), float(res.fun)


def _merge_close(ts):
    if ts.size < 2:
        return ts
    out = [ts[0]]
    for t in ts[1:]:
        if t - out[-1] < _MERGE_TOL:
            out[-1] = 0.5 * (out[-1] + t) if out[-1] > 0.0 else out[-1]
        else:
            out.append(t)
    return np.array(out)


@dataclass(frozen=True)
class SweepResult:
    """Two-sided envelope at constraint level eps."""

    eps: float
    m_upper: float       # max of f(x0) over the eps-ball
    m_lower: float       # min of f(x0) over the eps-ball
    state_plus: CapriniState
    state_minus: CapriniState


def sweep_epsilon(f0, x0: float, eps: float, **solve_kw) -> SweepResult:
    """Root-find offsets delta+- with ||f_* - f0||_2 = eps on both sides.

    The residual is strictly increasing in |delta|; on the negative side
    it is bounded by ||f0||_2 (the zero function is the delta -> -f0(x0)
    limit), and an eps beyond that bound is reported as unreachable.
    """
    f0 = _as_f0(f0)
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    f0_x0 = float(f0.value(x0))

    def residual(delta):
        return solve_local(f0, x0, delta, **solve_kw).residual_l2

    hi = 2.0 * eps
    while residual(hi) < eps:
        hi *= 4.0
        if hi > 1e8:
            raise RuntimeError("positive-side residual never reached eps")
    lo = hi / 4.0 if hi > 2.0 * eps else 1e-3 * eps
    while residual(lo) >= eps:
        lo /= 8.0
    delta_plus = brentq(lambda d: residual(d) - eps, lo, hi, xtol=1e-14, rtol=1e-12)

    # Negative side: residual grows toward ||f0||_2 (the f -> 0 limit) as
    # delta -> -f0(x0); walk toward the edge until eps is bracketed.
    sup_minus = math.sqrt(f0.l2_norm_sq())
    if eps >= sup_minus:
        raise ValueError(
            f"eps = {eps} unreachable on the negative side: supremum is {sup_minus:.6e}"
        )
    edge = None
    for k in range(2, 44):
        cand = -f0_x0 * (1.0 - 2.0**-k)
        if residual(cand) > eps:
            edge = cand
            break
    if edge is None:
        raise ValueError(
            f"eps = {eps} not bracketed on the negative side; supremum {sup_minus:.6e} "
            "is approached only in the infeasible limit"
        )
    delta_minus = brentq(lambda d: residual(d) - eps, edge, -1e-14 * f0_x0,
                         xtol=1e-16, rtol=1e-12)

    return SweepResult(
        eps=eps,
        m_upper=f0_x0 + delta_plus,
        m_lower=f0_x0 + delta_minus,
        state_plus=solve_local(f0, x0, delta_plus, **solve_kw),
        state_minus=solve_local(f0, x0, delta_minus, **solve_kw),
    )


# ----------------------------------------------------------------------
# closed form for f0(x) = e^(-x)
# ----------------------------------------------------------------------

_GL80 = leggauss(80)
_RES_X = 0.5 * (_GL80[0] + 1.0)
_RES_W = 0.5 * _GL80[1]


def _residual_two_atom(a, b, tau):
    """||a + b e^(-x tau) - e^(-x)||_2, evaluated pointwise-stably.

    Written as a + e^(-x) (b expm1(-x eta) + (b-1)) with eta = tau - 1, so
    every term carries the small scale and no large cancellation occurs.
    """
    eta = tau - 1.0
    h = a + np.exp(-_RES_X) * (b * np.expm1(-_RES_X * eta) + (b - 1.0))
    return math.sqrt(float(np.sum(_RES_W * h * h)))


def _residual_one_atom(a, tau):
    eta = tau - 1.0
    h = np.exp(-_RES_X) * (a * np.expm1(-_RES_X * eta) + (a - 1.0))
    return math.sqrt(float(np.sum(_RES_W * h * h)))


def _bracket_root(fn, grid):
    vals = np.array([fn(t) for t in grid])
    finite = np.isfinite(vals)
    for i in range(len(grid) - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        if vals[i] == 0.0:
            return grid[i]
        if vals[i] * vals[i + 1] < 0.0:
            return brentq(fn, grid[i], grid[i + 1], xtol=1e-15, rtol=8.9e-16)
    raise RuntimeError(
        "tau equation not bracketed on (1, {:.3g}); scanned {} points, "
        "value range [{:.3e}, {:.3e}]".format(
            grid[-1], len(grid), np.nanmin(vals), np.nanmax(vals)
        )
    )


def exp_closed_form(x0: float, delta: float, tau_max: float = 60.0) -> CapriniState:
    """Exact local extremal for f0(x) = e^(-x).

    delta > 0: f_* = a + b e^(-x tau); the certificate zeros Chat(0) =
    Chat(tau) = Chat'(tau) = 0 plus the value constraint are linear in
    (a, b, m) once tau is fixed, leaving one scalar equation for tau,
    root-found on (1, tau_max).  delta in (-e^(-x0), 0): f_* = a e^(-x tau)
    with the analogous 3-equation system.  The returned state carries the
    same certificate fields as the iterative solver, so the optimality
    check applies verbatim.
    """
    x0 = float(x0)
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    f0 = CmfMeasure.exponential()
    if delta == 0.0:
        return _identity_state(f0, x0)
    g, gp = gram_entry, gram_entry_deriv

    if delta > 0.0:
        v = math.exp(-x0) + delta

        def abm(tau):
            e = math.exp(-x0 * tau)
            mat = np.array([
                [1.0, g(tau), -1.0],
                [g(tau), g(2.0 * tau), -e],
                [1.0, e, 0.0],
            ])
            return np.linalg.solve(mat, np.array([g(1.0), g(tau + 1.0), v]))

        def tau_eq(tau):
            a, b, m = abm(tau)
            return a * gp(tau) + b * gp(2.0 * tau) - gp(tau + 1.0) + m * x0 * math.exp(-x0 * tau)

        grid = 1.0 + np.geomspace(1e-12, tau_max - 1.0, 800)
        tau = _bracket_root(tau_eq, grid)
        a, b, m = abm(tau)
        if a <= 0.0 or b <= 0.0:
            raise RuntimeError(f"closed form produced nonpositive weights (a={a}, b={b})")
        support = CmfMeasure(np.array([0.0, tau]), np.array([a, b]))
        residual = _residual_two_atom(a, b, tau)
    else:
        if delta <= -math.exp(-x0):
            raise ValueError("delta must exceed -e^(-x0) on the negative side")
        v = math.exp(-x0) + delta
        ln_v = math.log(v)

        def a_of(tau):
            arg = ln_v + x0 * tau
            return math.exp(arg) if arg < 700.0 else math.inf

        def tau_eq(tau):
            a = a_of(tau)
            if not math.isfinite(a):
                return math.nan
            # m e^(-x0 tau) eliminated via Chat(tau) = 0; no underflow.
            return a * (gp(2.0 * tau) + x0 * g(2.0 * tau)) - gp(tau + 1.0) - x0 * g(tau + 1.0)

        grid = 1.0 + np.geomspace(1e-12, tau_max - 1.0, 800)
        tau = _bracket_root(tau_eq, grid)
        a = a_of(tau)
        m = (a * g(2.0 * tau) - g(tau + 1.0)) * math.exp(x0 * tau)
        support = CmfMeasure(np.array([tau]), np.array([a]))
        residual = _residual_one_atom(a, tau)

    state = CapriniState(
        f0=f0, x0=x0, delta=float(delta), support=support, m=m,
        residual_l2=residual, cert_min=0.0, iterations=0, converged=True,
    )
    c_min, _, _ = certificate_report(state)
    return CapriniState(
        f0=f0, x0=x0, delta=float(delta), support=support, m=m,
        residual_l2=residual, cert_min=c_min, iterations=0, converged=True,
    )


def e_slopes(x0: float) -> tuple[float, float]:
    """Leading envelope slopes (E+, E-): f0(x0) +- E eps + O(eps^2) for e^(-x).

    Extracted from the closed form at two small offsets with one
    Richardson step; the negative-side offset is capped by the domain
    bound |delta| < e^(-x0).
    """
    def slope(side):
        d0 = 1e-6 if side > 0 else min(1e-6, math.exp(-x0) / 4.0)
        vals = []
        for d in (d0, d0 / 2.0):
            st = exp_closed_form(x0, side * d)
            vals.append(d / st.residual_l2)
        return 2.0 * vals[1] - vals[0]

    return slope(+1), slope(-1)
