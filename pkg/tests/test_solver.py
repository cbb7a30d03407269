"""Worst-case discrepancy solver: norms, threshold map, power law, bridge norms."""

import math

import numpy as np
import pytest

from cmextrap import oracle, solver, special
from cmextrap.grids import solver_mu_max, spectral_grid_for_solver
from cmextrap.local import CmfMeasure, gram_entry


@pytest.fixture(scope="module")
def grid_x2():
    return spectral_grid_for_solver(2.0, 1e-16)


@pytest.fixture(scope="module")
def grid_x1():
    return spectral_grid_for_solver(1.0, 1e-16)


class TestSolvePsi:
    def test_pythagoras_sweep(self, grid_x1, grid_x2):
        for grid in (grid_x1, grid_x2):
            for veps in (1e-2, 1e-4, 1e-6):
                sol = solver.solve_psi(grid.x0, veps, grid)
                assert sol.pythagoras_residual <= 1e-8

    def test_log_point_norm_scale(self, grid_x1):
        # at x0 = 1 the squared L2 norm grows like (2/pi^2) ln^2(veps)
        sol = solver.solve_psi(1.0, 1e-3, grid_x1)
        scale = (2.0 / math.pi**2) * math.log(1e-3) ** 2
        assert 0.8 <= sol.norm_l2**2 / scale <= 1.2

    def test_against_collocation(self, grid_x2):
        sol = solver.solve_psi(2.0, 1e-4, grid_x2)
        nys = oracle.nystrom_solve(2.0, 1e-8, 400)
        assert sol.psi_at_x0 == pytest.approx(nys.psi_at_x0, rel=1e-4)
        assert sol.norm_l2 == pytest.approx(nys.norm_l2, rel=1e-4)

    def test_p_weight_above_one(self, grid_x2):
        for veps in (1e-2, 1e-4, 1e-6):
            assert solver.solve_psi(2.0, veps, grid_x2).p_weight > 1.0

    def test_tail_rule_violation_reported(self):
        small = spectral_grid_for_solver(2.0, 1e-2)
        with pytest.raises(ValueError, match="tail"):
            solver.solve_psi(2.0, 1e-8, small)

    def test_grid_mismatch(self, grid_x2):
        with pytest.raises(ValueError):
            solver.solve_psi(3.0, 1e-4, grid_x2)

    def test_mu_max_rule(self):
        # crossover + margin; margin floor 6 at x0 = 1
        ehat = 1e-6 / math.sqrt(2.0 * math.pi)
        assert solver_mu_max(1.0, ehat) == pytest.approx(
            (2.0 / math.pi) * abs(math.log(ehat)) + 6.0
        )
        assert solver_mu_max(5.0, ehat) > solver_mu_max(2.0, ehat)


class TestPsiValue:
    def test_base_point_identity(self, grid_x2):
        sol = solver.solve_psi(2.0, 1e-5, grid_x2)
        assert solver.psi_value(sol, 2.0) == sol.psi_at_x0

    def test_analytic_extension_ratio(self, grid_x2):
        # growth of psi at z = 3 matches the closed form within 10 percent
        sol = solver.solve_psi(2.0, 1e-6, grid_x2)
        z = 3.0
        beta = (special.alpha(2.0) + special.alpha(z)) / math.pi
        pred = (
            special.r_factor(2.0)
            * special.r_factor(z)
            * sol.veps_hat ** (-2.0 * beta)
            / (2.0 * math.pi * math.sin(math.pi * beta))
        )
        assert abs(solver.psi_value(sol, z) / pred - 1.0) <= 0.10

    def test_log_point_extension_ratio(self, grid_x1):
        # x0 = 1 branch carries a sqrt(|ln|) factor
        sol = solver.solve_psi(1.0, 1e-6, grid_x1)
        z = 2.0
        a = special.alpha(z)
        pred = (
            special.r_factor(z)
            * math.sqrt(abs(math.log(sol.veps_hat)))
            * sol.veps_hat ** (-2.0 * a / math.pi)
            / (math.pi * math.sin(a))
        )
        assert abs(solver.psi_value(sol, z) / pred - 1.0) <= 0.15

    def test_complex_point(self, grid_x2):
        sol = solver.solve_psi(2.0, 1e-4, grid_x2)
        val = solver.psi_value(sol, 1.5 + 0.5j)
        assert np.isfinite(val.real) and np.isfinite(val.imag)


class TestThresholdMap:
    def test_ratio_limit(self, grid_x2):
        # eps/veps -> sqrt(arcsin(1/2)/arccos(1/2)) = sqrt(1/2)
        sol = solver.solve_psi(2.0, 1e-8, grid_x2)
        assert abs(sol.eps / 1e-8 / math.sqrt(0.5) - 1.0) <= 0.02

    def test_log_point_map(self, grid_x1):
        sol = solver.solve_psi(1.0, 1e-8, grid_x1)
        assert abs(sol.eps / (1e-8 * math.sqrt(abs(math.log(1e-8)))) - 1.0) <= 0.10

    def test_monotone(self, grid_x2):
        assert (
            solver.solve_psi(2.0, 1e-3, grid_x2).eps > solver.solve_psi(2.0, 1e-4, grid_x2).eps
        )

    def test_match_veps_roundtrip(self, grid_x2):
        sol = solver.match_veps(2.0, 1e-5, grid_x2)
        assert sol.eps == pytest.approx(1e-5, rel=1e-10)

    def test_match_veps_bracketing_error(self):
        # at x0 = 5 the reachable constraint level tops out near 0.33
        grid = spectral_grid_for_solver(5.0, 1e-4)
        with pytest.raises(ValueError, match="bracket"):
            solver.match_veps(5.0, 0.499, grid)
        with pytest.raises(ValueError):
            solver.match_veps(2.0, 0.7)


class TestDeltaStar:
    def test_power_law_point(self, grid_x2):
        d = solver.delta_star_at(2.0, 1e-6, grid_x2)
        assert abs(d / (special.c_star(2.0) * 1e-6 ** (1.0 / 3.0)) - 1.0) <= 0.05

    def test_log_point(self, grid_x1):
        d = solver.delta_star_at(1.0, 1e-6, grid_x1)
        assert abs(d / solver.delta_star_asymptotic(1.0, 1e-6) - 1.0) <= 0.10

    def test_bounded_by_kernel(self, grid_x1, grid_x2):
        for grid, eps in ((grid_x1, 1e-2), (grid_x2, 1e-2), (grid_x2, 1e-6)):
            d = solver.delta_star_at(grid.x0, eps, grid)
            assert d <= 1.0

    def test_monotone_in_eps(self, grid_x2):
        ds = [solver.delta_star_at(2.0, e, grid_x2) for e in (1e-6, 1e-4, 1e-2)]
        assert ds[0] < ds[1] < ds[2]

    def test_shape_in_x0(self):
        # the exponent slackens with x0, so the curve first rises with x0
        # and only decays once the prefactor ~ (2 x0)^(-1/2) takes over
        # (turning point near 4|ln eps|/pi)
        eps = 1e-3
        vals = {}
        for x0 in (1.5, 2.0, 5.0, 20.0, 60.0):
            grid = spectral_grid_for_solver(x0, 1e-8)
            vals[x0] = solver.delta_star_at(x0, eps, grid)
        assert vals[1.5] < vals[2.0] < vals[5.0]
        assert vals[20.0] > vals[60.0]

    def test_ratio_drift_shrinks(self, grid_x2):
        # convergence toward the closed-form law over the last two decades
        gaps = [
            abs(solver.delta_star_at(2.0, e, grid_x2) / solver.delta_star_asymptotic(2.0, e) - 1.0)
            for e in (1e-6, 1e-7, 1e-8)
        ]
        assert gaps[2] < gaps[1] < gaps[0]


class TestPowerlaw:
    def test_fit_exponent(self, grid_x2):
        fit = solver.powerlaw_fit(2.0, np.geomspace(1e-9, 1e-5, 9), grid_x2)
        assert abs(fit.slope - 1.0 / 3.0) <= 0.01
        assert fit.gamma_reference == pytest.approx(1.0 / 3.0)

    def test_log_point_local_slopes_drift_to_one(self, grid_x1):
        fit = solver.powerlaw_fit(1.0, np.geomspace(1e-9, 1e-5, 9), grid_x1)
        # local slope rises toward 1 as eps decreases
        assert np.all(np.diff(fit.local_slopes) < 0.0)
        assert fit.local_slopes[0] > fit.local_slopes[-1]
        assert 0.8 < fit.local_slopes[0] < 1.0

    def test_range_guard(self, grid_x2):
        with pytest.raises(ValueError, match="decades"):
            solver.powerlaw_fit(2.0, np.geomspace(1e-6, 1e-5, 5), grid_x2)


class TestExtremal:
    def test_normalization(self, grid_x2):
        sol = solver.solve_psi(2.0, 1e-4, grid_x2)
        phi = solver.phi_extremal(sol)
        assert abs(phi.norm_l2 / sol.eps - 1.0) <= 1e-6
        assert abs(phi.norm_hardy - 1.0) <= 1e-6
        assert abs(phi.at_x0 / sol.delta_star - 1.0) <= 1e-8
        assert phi(2.0) == pytest.approx(phi.at_x0, rel=1e-12)


class TestBridgeNorms:
    def test_constant_value(self):
        assert solver.hp_constant(2.0) == pytest.approx(1.2809359101, rel=1e-9)
        with pytest.raises(ValueError):
            solver.hp_constant(1.0)

    def test_forward_bound_single_exponential(self):
        f = CmfMeasure.exponential()
        l2 = math.sqrt(f.l2_norm_sq())
        assert solver.hp_norm(f, 2.0) <= solver.hp_constant(2.0) * l2

    def test_reverse_bound_random_sums(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            ts = np.sort(rng.uniform(0.0, 20.0, size=n)) + 1e-3 * np.arange(n)
            cs = rng.uniform(0.1, 2.0, size=n)
            f = CmfMeasure(ts, cs)
            l2 = math.sqrt(f.l2_norm_sq())
            for p in (1.1, 2.0, 4.0):
                assert l2 <= solver.hp_reverse_constant(p) * solver.hp_norm(f, p) * (1.0 + 1e-12)

    def test_forward_bound_fails_for_differences(self):
        # the positive-coefficient hypothesis is essential: this signed
        # difference of two completely monotone functions violates it
        atoms = [(0.0, 1.0), (0.05, -1.0)]
        ts = np.array([t for t, _ in atoms])
        cs = np.array([a for _, a in atoms])
        l2 = math.sqrt(float(cs @ gram_entry(ts[:, None] + ts[None, :]) @ cs))
        for p in (1.1, 2.0, 4.0):
            assert solver.hp_norm(atoms, p) > solver.hp_constant(p) * l2

    def test_p_one_defined(self):
        f = CmfMeasure.exponential()
        assert solver.hp_norm(f, 1.0) > 0.0
