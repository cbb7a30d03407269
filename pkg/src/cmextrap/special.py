"""Special functions of the extrapolation kernel.

The integral operator (Kf)(x) = int_0^1 f(y)/(x+y) dy on L^2(0,1) is
diagonalized by a continuous family of eigenfunctions

    u(x; mu) = x^(-1/2 + i*mu) * 2F1(1/4 + i*mu/2, 3/4 + i*mu/2; 1; 1 - x^2),

with eigenvalues nu(mu) = pi / cosh(pi*mu), mu >= 0.  The same formula
extends u analytically to Omega = {Re z > 0} \\ [0, 1], where for large mu

    u(z; mu) ~ u0(z; mu) = R(z) * exp(mu * alpha(z)) / sqrt(2*pi*mu),
    R(z) = z^(-1/2) * (z^2 - 1)^(-1/4),    alpha(z) = arccos(1/z),

with principal branches everywhere and relative error O(1/mu).

Evaluation strategy
-------------------
The Pfaff transformation gives u(z; mu) = (1/z) * 2F1(1/4 + i*mu/2,
1/4 - i*mu/2; 1; 1 - 1/z^2), whose conjugate parameter pair makes every
series coefficient real.  We evaluate u through hypergeometric series in
whichever argument is small:

* real z > 1:   argument 1 - 1/z^2 in (0, 1); all terms positive, so the
  sum is cancellation-free for every mu (used for z <= 14), with a
  c = 1/2 connection pair in 1/z^2 for larger z;
* real x near 1:  same series, argument 1 - 1/x^2 in (-0.66, 0];
* real x in (0, 0.95):  connection formula at unit argument, which yields
  the manifestly real form  2*Re[K1 * x^(i*mu) * 2F1(...; 1+i*mu; x^2)]
  / sqrt(x);
* complex z and tiny mu:  direct quadrature of the Euler integral after
  a logit substitution, which turns it into a Fourier-type integral of an
  analytic exponentially decaying function (trapezoid rule converges
  geometrically).

Direct Gauss-Jacobi quadrature of the Euler integral is *not* used: the
factors t^(i*mu/2), (1-t)^(-i*mu/2) oscillate without bound at the
endpoints, which defeats any fixed Jacobi weight (observed convergence
O(n^-1/2)), and on (0,1) the integral additionally loses exp(pi*mu/2)
digits to cancellation against its prefactor.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

__all__ = [
    "AsymptoticParams",
    "EigenfunctionSample",
    "ConvergenceError",
    "alpha",
    "r_factor",
    "asymptotic_params",
    "eigenvalue_nu",
    "gamma_star",
    "c_star",
    "eigfun_u",
    "eigfun_u_asymptotic",
    "eigfun_u_euler",
    "eigfun_sample",
    "eigfun_unit_matrix",
    "eigfun_profile",
    "MU_SWITCH_DEFAULT",
]

MU_SWITCH_DEFAULT = 20.0

# Series split points on the positive real axis.
_X_CONN_MAX = 0.95      # below: connection series in x^2
_Z_PFAFF_MAX = 14.0     # above: c=1/2 connection series in 1/z^2
_MU_QUAD_MIN = 0.05     # below: logit quadrature (connection coeffs ~ 1/mu)
_SERIES_TOL = 1e-17
_SERIES_NMAX = 200_000


class ConvergenceError(RuntimeError):
    """Series or quadrature failed to converge; carries the achieved error."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


def _in_omega(z) -> bool:
    z = complex(z)
    if z.real <= 0.0:
        return False
    if z.imag == 0.0 and z.real <= 1.0:
        return False
    return True


def _require_omega(z, what="z"):
    if not _in_omega(z):
        raise ValueError(f"{what} = {z!r} outside Omega = {{Re z > 0}} \\ [0, 1]")


def alpha(z):
    """arccos(1/z) with principal branches; Re alpha in (0, pi/2) on Omega.

    Real for real z > 1; the defining relation z * cos(alpha(z)) = 1 holds
    to machine precision.
    """
    _require_omega(z)
    if isinstance(z, (int, float)) or (isinstance(z, complex) and z.imag == 0.0):
        return math.acos(1.0 / z.real)
    return cmath.acos(1.0 / complex(z))


def r_factor(z):
    """R(z) = z^(-1/2) * (z^2 - 1)^(-1/4), principal branches.

    Real positive for real z > 1; diverges at the quartic-root
    singularity z = 1.
    """
    _require_omega(z)
    zc = complex(z)
    if zc == 1.0:
        raise ValueError("r_factor is singular at z = 1")
    if zc.imag == 0.0:
        x = zc.real
        return x ** -0.5 * (x * x - 1.0) ** -0.25
    return zc ** -0.5 * (zc * zc - 1.0) ** -0.25


@dataclass(frozen=True)
class AsymptoticParams:
    """Growth-rate bundle for u(z; mu) at a point z and base point x0 >= 1.

    beta = (alpha(x0) + alpha(z)) / pi controls the small-threshold decay
    exponents of the worst-case solver; Re beta lies in (0, 1) on Omega.
    """

    z: complex
    alpha: complex
    r_factor: complex
    beta: complex
    x0: float


def asymptotic_params(z, x0) -> AsymptoticParams:
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    a_z = alpha(z)
    a_x0 = math.pi / 2.0 if np.isinf(x0) else alpha(x0) if x0 > 1.0 else 0.0
    return AsymptoticParams(
        z=complex(z),
        alpha=a_z,
        r_factor=r_factor(z),
        beta=(a_x0 + a_z) / math.pi,
        x0=float(x0),
    )


def eigenvalue_nu(mu):
    """Eigenvalue nu(mu) = pi / cosh(pi*mu) of the kernel 1/(x+y) on (0,1).

    Strictly decreasing from nu(0) = pi; evaluated in overflow-safe form.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0.0):
        raise ValueError("mu must be >= 0")
    e = np.exp(-np.pi * mu)
    out = 2.0 * np.pi * e / (1.0 + e * e)
    return float(out) if out.ndim == 0 else out


def gamma_star(x0):
    """Worst-case extrapolation power-law exponent (2/pi) * arcsin(1/x0)."""
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < 1.0):
        raise ValueError("x0 must be >= 1")
    out = (2.0 / np.pi) * np.arcsin(1.0 / x0)
    return float(out) if out.ndim == 0 else out


def c_star(x0: float) -> float:
    """Leading constant of the power law  Delta*(eps) ~ C*(x0) eps^gamma*.

    Defined for x0 > 1 only; diverges as x0 -> 1+ where the power law
    picks up a logarithmic factor (handled separately by the solver).
    """
    if x0 <= 1.0:
        raise ValueError("c_star requires x0 > 1; the x0 = 1 law has a log factor")
    asn = math.asin(1.0 / x0)
    acs = math.acos(1.0 / x0)
    lead = 0.5 * math.sqrt(x0 / (2.0 * (x0 * x0 - 1.0) * asn))
    return lead * (2.0 * math.pi * asn / acs) ** (acs / math.pi)


# ----------------------------------------------------------------------
# series kernels
# ----------------------------------------------------------------------

def _pfaff_series_real(z, mus):
    """u(z; mu) for real z with |1 - 1/z^2| < 1, vectorized over mus.

    Sum_n |(1/4 + i*mu/2)_n|^2 w^n / (n!)^2 with w = 1 - 1/z^2: positive
    terms for z > 1, alternating for z < 1.
    """
    w = 1.0 - 1.0 / (z * z)
    q = mus * mus / 4.0
    tot = np.ones_like(mus)
    term = np.ones_like(mus)
    scale = np.ones_like(mus)
    for n in range(_SERIES_NMAX):
        term = term * (((n + 0.25) ** 2 + q) * (w / (n + 1.0) ** 2))
        tot = tot + term
        np.maximum(scale, np.abs(term), out=scale)
        if n > 5 and np.max(np.abs(term)) <= _SERIES_TOL * np.max(np.abs(tot)):
            break
    else:
        raise ConvergenceError(
            f"series for u({z}; mu) did not converge in {_SERIES_NMAX} terms",
            error_estimate=float(np.max(np.abs(term))),
        )
    return tot / z


def _half_connection_real(z, mus):
    """u(z; mu) for real z > _Z_PFAFF_MAX via the c = 1/2 connection pair.

    Both partial series have positive terms; the single subtraction loses
    about exp(-2*mu*arcsin(1/z)) which is harmless for z >= 14.
    """
    v = 1.0 / (z * z)
    q = mus * mus / 4.0
    k1 = math.sqrt(math.pi) * np.exp(-2.0 * np.real(loggamma(0.75 + 0.5j * mus)))
    k2 = -2.0 * math.sqrt(math.pi) * np.exp(-2.0 * np.real(loggamma(0.25 + 0.5j * mus)))

    def body(afac, c):
        tot = np.ones_like(mus)
        term = np.ones_like(mus)
        for n in range(_SERIES_NMAX):
            term = term * (((n + afac) ** 2 + q) * (v / ((c + n) * (n + 1.0))))
            tot = tot + term
            if n > 5 and np.max(term) <= _SERIES_TOL * np.max(tot):
                return tot
        raise ConvergenceError("half-connection series did not converge")

    f1 = body(0.25, 0.5)
    f2 = body(0.75, 1.5)
    return (k1 * f1 + k2 * math.sqrt(v) * f2) / z


def _connection_unit_matrix(xs, mus):
    """u(x; mu) for x in (0, _X_CONN_MAX), mu >= _MU_QUAD_MIN.

    Manifestly real connection form at unit argument:
        u = 2 Re[ K1(mu) x^(i mu) 2F1(a, b; 1 + i mu; x^2) ] / sqrt(x),
        K1 = Gamma(-i mu) / (Gamma(3/4 - i mu/2) Gamma(1/4 - i mu/2)).

    Returns an (n_mu, n_x) real matrix.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    a = 0.25 + 0.5j * mus
    b = 0.75 + 0.5j * mus
    log_k1 = (
        loggamma(-1j * mus)
        - loggamma(0.75 - 0.5j * mus)
        - loggamma(0.25 - 0.5j * mus)
    )
    v = (xs * xs)[None, :]
    tot = np.ones((mus.size, xs.size), dtype=complex)
    term = np.ones_like(tot)
    for n in range(_SERIES_NMAX):
        fac = ((a + n) * (b + n) / ((1.0 + 1j * mus + n) * (n + 1.0)))[:, None]
        term = term * fac * v
        tot = tot + term
        if n > 5 and np.max(np.abs(term)) <= _SERIES_TOL * np.max(np.abs(tot)):
            break
    else:
        raise ConvergenceError("unit-argument connection series did not converge")
    phase = np.exp(log_k1[:, None] + 1j * np.outer(mus, np.log(xs)))
    return 2.0 * np.real(phase * tot) / np.sqrt(xs)[None, :]


def _pfaff_unit_matrix(xs, mus):
    """u(x; mu) for real x with |1 - 1/x^2| < 1, (n_mu, n_x) real matrix."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    w = (1.0 - 1.0 / (xs * xs))[None, :]
    q = (mus * mus / 4.0)[:, None]
    tot = np.ones((mus.size, xs.size))
    term = np.ones_like(tot)
    for n in range(_SERIES_NMAX):
        term = term * (((n + 0.25) ** 2 + q) * (w / (n + 1.0) ** 2))
        tot = tot + term
        if n > 5 and np.max(np.abs(term)) <= _SERIES_TOL * np.max(np.abs(tot)):
            break
    else:
        raise ConvergenceError("Pfaff series did not converge")
    return tot / xs[None, :]


def _pfaff_series_complex(z, mus):
    """u(z; mu) for complex z with |1 - 1/z^2| <= 0.8, vectorized over mus."""
    w = 1.0 - 1.0 / (z * z)
    q = mus * mus / 4.0
    tot = np.ones(mus.size, dtype=complex)
    term = np.ones(mus.size, dtype=complex)
    for n in range(_SERIES_NMAX):
        term = term * (((n + 0.25) ** 2 + q) * (w / (n + 1.0) ** 2))
        tot = tot + term
        if n > 5 and np.max(np.abs(term)) <= _SERIES_TOL * np.max(np.abs(tot)):
            break
    else:
        raise ConvergenceError("complex Pfaff series did not converge")
    return tot / z


# ----------------------------------------------------------------------
# Euler-integral quadrature (logit substitution)
# ----------------------------------------------------------------------

def eigfun_u_euler(point, mu, step=None, cutoff=180.0, check=False):
    """u(point; mu) by direct quadrature of the Euler integral.

    The substitution t = 1/(1 + e^(-s)) maps the integral over (0,1) with
    endpoint factors t^(-1/4+i*mu/2) (1-t)^(-3/4-i*mu/2) to

        int_R e^(i*mu*s/2) t^(3/4) (1-t)^(1/4) (1 - (1-z^2) t)^(-1/4-i*mu/2) ds,

    an analytic integrand decaying like e^(-|s|/4), for which the
    trapezoid rule converges geometrically in 1/step.

    Valid on Omega and on (0, 1].  The result carries an intrinsic
    cancellation of order e^(mu*(pi/2 - Re alpha)) against the e^(pi*mu/2)
    prefactor, so this branch is only quoted for small and moderate mu; the
    series branches take over elsewhere.  With ``check=True`` the rule is
    re-evaluated at half the step and a ConvergenceError is raised if the
    two disagree by more than 1e-8 relative (estimate attached).
    """
    zc = complex(point)
    if not (_in_omega(zc) or (zc.imag == 0.0 and 0.0 < zc.real <= 1.0)):
        raise ValueError(f"point {point!r} not in Omega nor (0, 1]")
    if step is None:
        step = 2.0 * math.pi / (2.0 * abs(mu) + 50.0)

    def rule(h):
        s = np.arange(-cutoff, cutoff + h, h)
        t = 1.0 / (1.0 + np.exp(-s))
        one_m_t = 1.0 / (1.0 + np.exp(s))
        # 1 - (1 - z^2) t written as (1 - t) + z^2 t: exact even when
        # z^2 underflows the rounding of 1 - z^2.
        one_m_wt = one_m_t + (zc * zc) * t
        f = np.exp(
            0.75 * np.log(t)
            + 0.25 * np.log(one_m_t)
            + 1j * (mu / 2.0) * s
            + (-0.25 - 0.5j * mu) * np.log(one_m_wt)
        )
        integral = h * np.sum(f)
        pref = np.exp((-0.5 + 1j * mu) * np.log(zc)) * cmath.sin(
            0.75 * math.pi + 0.5j * math.pi * mu
        ) / math.pi
        return pref * integral

    val = rule(step)
    if check:
        ref = rule(step / 2.0)
        err = abs(val - ref) / max(abs(ref), 1e-300)
        if err > 1e-8:
            raise ConvergenceError(
                f"Euler quadrature for u({point}; {mu}) not converged", error_estimate=err
            )
        val = ref
    return val


def eigfun_u_asymptotic(z, mu):
    """Large-mu form u0(z; mu) = R(z) e^(mu*alpha(z)) / sqrt(2*pi*mu), z in Omega."""
    if mu <= 0.0:
        raise ValueError("asymptotic branch requires mu > 0")
    val = r_factor(z) * cmath.exp(mu * complex(alpha(z))) / math.sqrt(2.0 * math.pi * mu)
    if isinstance(val, complex) and val.imag == 0.0:
        return val.real
    return val


# ----------------------------------------------------------------------
# dispatcher
# ----------------------------------------------------------------------

def _u_exact_real_unit(x, mus):
    """Exact u(x; mu) for scalar real x in (0, 1], vector mus; real output."""
    if x == 1.0:
        return np.ones_like(mus)
    if x >= _X_CONN_MAX:
        return _pfaff_series_real(x, mus)
    out = np.empty_like(mus)
    small = mus < _MU_QUAD_MIN
    if small.any():
        for i in np.nonzero(small)[0]:
            val = eigfun_u_euler(x, float(mus[i]), step=0.06)
            out[i] = _project_real(val, x, mus[i])
    if (~small).any():
        out[~small] = _connection_unit_matrix([x], mus[~small])[:, 0]
    return out


def _u_exact_real_gt1(z, mus):
    """Exact u(z; mu) for scalar real z > 1, vector mus; real output."""
    if z <= _Z_PFAFF_MAX:
        return _pfaff_series_real(z, mus)
    return _half_connection_real(z, mus)


def _u_exact_complex(z, mus):
    zc = complex(z)
    w = 1.0 - 1.0 / (zc * zc)
    if abs(w) <= 0.8:
        return _pfaff_series_complex(zc, mus)
    return np.array([eigfun_u_euler(zc, float(m)) for m in mus], dtype=complex)


def _project_real(value, x, mu, tol=1e-8):
    """Real-part projection for x in (0, 1], flagged if the residue is large.

    The kernel is real symmetric and u(1; mu) = 1 pins the eigenfunction
    phase, so the exact value is real; a large imaginary residue signals
    quadrature trouble rather than genuine complexity.
    """
    value = complex(value)
    scale = max(abs(value), 1e-300)
    if abs(value.imag) > tol * scale:
        warnings.warn(
            f"u({x}; {mu}): imaginary residue {abs(value.imag)/scale:.2e} "
            "above tolerance; taking the real part",
            stacklevel=3,
        )
    return value.real


def eigfun_u(point, mu, mu_switch=MU_SWITCH_DEFAULT):
    """Kernel eigenfunction u(point; mu), hybrid exact/asymptotic.

    For mu <= mu_switch the exact branch is used (series, or logit
    quadrature of the Euler integral where the connection coefficients
    degenerate); beyond mu_switch, points in Omega use the closed
    asymptotic form u0, whose relative error is O(1/mu).  Real points in
    (0, 1] always use the exact branch (the asymptotic form only applies
    on Omega) and the result is real; u(1; mu) = 1 exactly.

    `mu` may be a scalar or an array; arrays are evaluated in one
    vectorized sweep.
    """
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    if np.any(mus < 0.0):
        raise ValueError("mu must be >= 0")
    scalar = np.isscalar(mu) or np.ndim(mu) == 0

    zc = complex(point)
    real_unit = zc.imag == 0.0 and 0.0 < zc.real <= 1.0
    if not real_unit:
        _require_omega(zc, "point")

    if real_unit:
        out = _u_exact_real_unit(zc.real, mus)
        return float(out[0]) if scalar else out

    exact = mus <= mu_switch
    if zc.imag == 0.0:
        out = np.empty_like(mus)
        if exact.any():
            out[exact] = _u_exact_real_gt1(zc.real, mus[exact])
        for i in np.nonzero(~exact)[0]:
            out[i] = eigfun_u_asymptotic(zc.real, float(mus[i]))
        return float(out[0]) if scalar else out

    out = np.empty(mus.size, dtype=complex)
    if exact.any():
        out[exact] = _u_exact_complex(zc, mus[exact])
    for i in np.nonzero(~exact)[0]:
        out[i] = eigfun_u_asymptotic(zc, float(mus[i]))
    return complex(out[0]) if scalar else out


def eigfun_unit_matrix(xs, mus):
    """u(x; mu) on the grid xs in (0,1] x mus >= 0, as an (n_mu, n_x) real matrix.

    Used by the discrete transforms; exact branch throughout.
    """
    xs = np.asarray(xs, dtype=float)
    mus = np.asarray(mus, dtype=float)
    if np.any((xs <= 0.0) | (xs > 1.0)):
        raise ValueError("xs must lie in (0, 1]")
    out = np.empty((mus.size, xs.size))
    conn = xs < _X_CONN_MAX
    near1 = (~conn) & (xs < 1.0)
    at1 = xs == 1.0
    big = mus >= _MU_QUAD_MIN
    if conn.any():
        if big.any():
            out[np.ix_(big, conn)] = _connection_unit_matrix(xs[conn], mus[big])
        for i in np.nonzero(~big)[0]:
            out[i, conn] = [
                _project_real(eigfun_u_euler(x, float(mus[i]), step=0.06), x, mus[i])
                for x in xs[conn]
            ]
    if near1.any():
        out[:, near1] = _pfaff_unit_matrix(xs[near1], mus)
    if at1.any():
        out[:, at1] = 1.0
    return out


def eigfun_profile(x0, mus, mu_switch=None):
    """u(x0; mu) over a mu grid for a fixed real x0 >= 1; real output.

    This is the solver's cache-filling path.  For real x0 > 1 the series
    branch is stable at every mu (positive terms), so by default it is
    used throughout; pass a finite ``mu_switch`` to force the asymptotic
    branch beyond it.
    """
    if x0 < 1.0:
        raise ValueError("x0 must be >= 1")
    mus = np.asarray(mus, dtype=float)
    if x0 == 1.0:
        return np.ones_like(mus)
    if mu_switch is None or np.isinf(mu_switch):
        return _u_exact_real_gt1(x0, mus)
    out = np.empty_like(mus)
    exact = mus <= mu_switch
    out[exact] = _u_exact_real_gt1(x0, mus[exact])
    for i in np.nonzero(~exact)[0]:
        out[i] = eigfun_u_asymptotic(x0, float(mus[i]))
    return out


@dataclass(frozen=True)
class EigenfunctionSample:
    """One evaluated eigenfunction value with its provenance."""

    mu: float
    point: complex
    value: complex
    method: str          # "series", "euler_integral", or "asymptotic"
    imag_residue: float  # |Im|/|value| before real projection (real points)


def eigfun_sample(point, mu, mu_switch=MU_SWITCH_DEFAULT) -> EigenfunctionSample:
    """Evaluate u and record which branch produced the value."""
    zc = complex(point)
    real_unit = zc.imag == 0.0 and 0.0 < zc.real <= 1.0
    if real_unit:
        if zc.real == 1.0:
            return EigenfunctionSample(mu, zc, 1.0, "series", 0.0)
        if mu < _MU_QUAD_MIN and zc.real < _X_CONN_MAX:
            raw = eigfun_u_euler(zc.real, mu, step=0.06)
            res = abs(raw.imag) / max(abs(raw), 1e-300)
            return EigenfunctionSample(mu, zc, raw.real, "euler_integral", res)
        return EigenfunctionSample(mu, zc, eigfun_u(zc.real, mu), "series", 0.0)
    if mu > mu_switch:
        return EigenfunctionSample(mu, zc, eigfun_u_asymptotic(zc, mu), "asymptotic", 0.0)
    w = 1.0 - 1.0 / (zc * zc)
    if zc.imag != 0.0 and abs(w) > 0.8:
        return EigenfunctionSample(mu, zc, eigfun_u_euler(zc, mu), "euler_integral", 0.0)
    return EigenfunctionSample(mu, zc, eigfun_u(zc, mu, mu_switch=mu_switch), "series", 0.0)
