"""Certified worst-case extrapolation bounds for completely monotone functions.

Two complementary solvers:

* the global worst-case discrepancy curve Delta*(eps) for the class of
  completely monotone functions that nearly agree on (0, 1), computed
  through the spectral diagonalization of the kernel 1/(x+y), together
  with its closed-form power law;
* the local worst-case envelope around a given completely monotone
  function, computed by a support-exchange algorithm whose output comes
  with a verifiable certificate of optimality.

Brute-force oracles (dense collocation, grid-restricted least squares,
convex-duality bounds) validate both, and ``cmextrap verify`` runs the
full acceptance suite from the command line.
"""

from .grids import SpectralGrid, UnitGridFunction, unit_gauss_legendre, unit_gauss_legendre_log
from .local import (
    BlackBoxCmf,
    CapriniState,
    CmfMeasure,
    SweepResult,
    caprini_C,
    caprini_gap,
    certificate_report,
    e_slopes,
    exp_closed_form,
    solve_local,
    sweep_epsilon,
)
from .operators import (
    UTransform,
    apply_K,
    apply_K_exact,
    apply_Lambda,
    diffop_L_residual,
    eigen_relation_residual,
    u_forward,
    u_inverse,
)
from .oracle import (
    DualBoundResult,
    NystromSolution,
    dual_upper_bound,
    grid_local_solve,
    left_unbounded_demo,
    nystrom_match_veps,
    nystrom_solve,
)
from .solver import (
    PhiExtremal,
    PhiSolution,
    PowerlawFit,
    delta_star_asymptotic,
    delta_star_at,
    delta_star_curve,
    eps_of_veps,
    hp_constant,
    hp_norm,
    hp_reverse_constant,
    match_veps,
    phi_extremal,
    powerlaw_fit,
    psi_value,
    solve_psi,
    solver_grid,
)
from .special import (
    AsymptoticParams,
    ConvergenceError,
    EigenfunctionSample,
    alpha,
    asymptotic_params,
    c_star,
    eigenvalue_nu,
    eigfun_sample,
    eigfun_u,
    eigfun_u_asymptotic,
    eigfun_u_euler,
    gamma_star,
    r_factor,
)

__version__ = "0.1.0"
