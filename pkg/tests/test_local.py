"""Local envelope problem: exchange solver, closed form, certificates."""

import math

import numpy as np
import pytest

from cmextrap import local


@pytest.fixture(scope="module")
def f0_exp():
    return local.CmfMeasure.exponential()


class TestGramEntries:
    def test_values(self):
        assert local.gram_entry(0.0) == 1.0
        assert local.gram_entry(1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-15)
        assert local.gram_entry(1e-12) == pytest.approx(1.0, abs=1e-9)

    def test_derivative_matches_difference_quotient(self):
        for s in (1e-6, 1e-3, 0.5, 3.0, 20.0):
            h = 1e-6 * max(s, 1.0)
            fd = (local.gram_entry(s + h) - local.gram_entry(max(s - h, 0.0))) / (
                h + min(s, h)
            )
            assert local.gram_entry_deriv(s) == pytest.approx(fd, rel=1e-5)


class TestCmfMeasure:
    def test_validation(self):
        with pytest.raises(ValueError):
            local.CmfMeasure(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            local.CmfMeasure(np.array([1.0]), np.array([-1.0]))
        with pytest.raises(ValueError):
            local.CmfMeasure(np.array([-1.0]), np.array([1.0]))

    def test_star_norm_below_l2(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            ts = np.sort(rng.uniform(0.0, 40.0, size=n)) + 1e-3 * np.arange(n)
            cs = rng.uniform(0.05, 3.0, size=n)
            f = local.CmfMeasure(ts, cs)
            assert f.star_norm() <= math.sqrt(f.l2_norm_sq()) * (1.0 + 1e-12)

    def test_value_and_transform(self, f0_exp):
        assert f0_exp.value(2.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
        assert f0_exp.lambda_transform(0.0) == pytest.approx(local.gram_entry(1.0), rel=1e-15)
        assert f0_exp.l2_norm_sq() == pytest.approx(local.gram_entry(2.0), rel=1e-14)


class TestMomentGap:
    def test_zero_for_identity(self, f0_exp):
        for t in (0.0, 1.0, 7.5):
            assert local.caprini_gap(f0_exp, f0_exp, t) == 0.0

    def test_single_added_atom(self, f0_exp):
        # f_* = f0 + one unit atom at t = 1: gap at 0 is the atom's mass
        f_star = local.CmfMeasure(np.array([1.0]), np.array([2.0]))
        assert local.caprini_gap(f_star, f0_exp, 0.0) == pytest.approx(
            local.gram_entry(1.0), rel=1e-14
        )

    def test_certificate_zero_at_origin_for_positive_offset(self, f0_exp):
        # Chat(0) = 0, i.e. C(0) = m, when the origin carries an atom
        state = local.solve_local(f0_exp, 2.0, 0.01)
        assert 0.0 in state.support.ts
        c0 = float(local.caprini_C(state, 0.0))
        assert abs(c0 - state.m) <= 1e-10 * max(abs(state.m), 1.0)


class TestSolveLocal:
    def test_zero_offset_identity(self, f0_exp):
        state = local.solve_local(f0_exp, 2.0, 0.0)
        assert state.residual_l2 == 0.0
        assert state.m == 0.0
        assert np.array_equal(state.support.ts, f0_exp.ts)
        for t in (0.0, 0.5, 4.0):
            assert local.caprini_C(state, t) == 0.0

    def test_positive_offset_structure(self, f0_exp):
        state = local.solve_local(f0_exp, 2.0, 0.01)
        assert state.converged
        assert state.support.n_atoms == 2
        assert state.support.ts[0] == 0.0
        assert state.support.ts[1] > 1.0

    def test_negative_offset_structure(self, f0_exp):
        state = local.solve_local(f0_exp, 2.0, -0.01)
        assert state.converged
        assert state.support.n_atoms == 1
        assert state.support.ts[0] > 1.0

    def test_constraint_residual(self, f0_exp):
        for delta in (0.02, -0.02):
            state = local.solve_local(f0_exp, 2.0, delta)
            assert state.constraint_residual() <= 1e-10

    def test_certificate_at_convergence(self, f0_exp):
        state = local.solve_local(f0_exp, 2.0, 1e-3)
        scale = f0_exp.l2_norm_sq()
        c_min, _, atom_max = local.certificate_report(state, n_grid=10_000)
        assert c_min >= -1e-8 * scale
        assert atom_max <= 1e-8

    def test_objective_monotone(self, f0_exp):
        state = local.solve_local(f0_exp, 2.0, 0.05)
        hist = np.array(state.residual_history)
        assert np.all(np.diff(hist) <= 1e-12)

    def test_support_stays_small(self, f0_exp):
        for delta in (1e-3, 0.05, -1e-2):
            state = local.solve_local(f0_exp, 2.0, delta)
            assert state.support.n_atoms <= 10

    def test_infeasible_offset(self, f0_exp):
        with pytest.raises(ValueError, match="infeasible"):
            local.solve_local(f0_exp, 2.0, -1.0)

    def test_black_box_route(self, f0_exp):
        bb = local.BlackBoxCmf(
            value_fn=lambda x: np.exp(-np.asarray(x, dtype=float)),
            lambda_fn=lambda t: local.gram_entry(np.asarray(t, dtype=float) + 1.0),
            l2_sq=f0_exp.l2_norm_sq(),
        )
        st_bb = local.solve_local(bb, 2.0, 1e-3)
        st_at = local.solve_local(f0_exp, 2.0, 1e-3)
        assert st_bb.converged
        np.testing.assert_allclose(st_bb.support.ts, st_at.support.ts, atol=1e-8)
        np.testing.assert_allclose(st_bb.support.coeffs, st_at.support.coeffs, atol=1e-8)

    def test_two_atom_base(self):
        f0 = local.CmfMeasure(np.array([0.5, 3.0]), np.array([0.6, 0.4]))
        state = local.solve_local(f0, 1.5, 0.01)
        assert state.converged
        c_min, _, atom_max = local.certificate_report(state)
        assert c_min >= -1e-8 * f0.l2_norm_sq()
        assert atom_max <= 1e-8


class TestClosedForm:
    def test_agreement_with_exchange(self, f0_exp):
        st = local.solve_local(f0_exp, 2.0, 1e-3)
        cf = local.exp_closed_form(2.0, 1e-3)
        assert st.support.n_atoms == cf.support.n_atoms
        np.testing.assert_allclose(st.support.ts, cf.support.ts, atol=1e-6)
        np.testing.assert_allclose(st.support.coeffs, cf.support.coeffs, atol=1e-6)

    def test_negative_domain_guard(self):
        with pytest.raises(ValueError):
            local.exp_closed_form(2.0, -math.exp(-2.0))

    def test_certificate(self):
        for delta in (1e-4, 0.3, -1e-4):
            state = local.exp_closed_form(2.0, delta)
            assert state.cert_min >= -1e-8 * local.gram_entry(2.0)

    def test_tau_exceeds_one(self):
        for x0 in (1.0, 3.0, 10.0):
            for delta in (1e-5, -1e-5 if x0 < 5 else -math.exp(-x0) / 4.0):
                state = local.exp_closed_form(x0, delta)
                assert np.all(state.support.ts[state.support.ts > 0.0] > 1.0)


class TestSweep:
    def test_duality_roundtrip(self, f0_exp):
        sweep = local.sweep_epsilon(f0_exp, 2.0, 0.01)
        assert sweep.state_plus.residual_l2 == pytest.approx(0.01, rel=1e-8)
        assert sweep.state_minus.residual_l2 == pytest.approx(0.01, rel=1e-8)
        assert sweep.m_lower < math.exp(-2.0) < sweep.m_upper

    def test_unreachable_eps(self, f0_exp):
        with pytest.raises(ValueError, match="unreachable"):
            local.sweep_epsilon(f0_exp, 2.0, 10.0)


class TestSlopes:
    def test_reference_values(self):
        e = math.e
        e_plus, e_minus = local.e_slopes(1.0)
        assert abs(e_plus - 2.67788263) <= 1e-4
        exact_minus = 2.0 * math.sqrt((e**2 - 1.0) / (e**4 - 6.0 * e**2 + 1.0))
        assert abs(e_minus - exact_minus) <= 1e-3

    def test_slope_consistency_with_sweep(self, f0_exp):
        # for small eps the envelope is linear with slopes E+-
        eps = 1e-5
        sweep = local.sweep_epsilon(f0_exp, 2.0, eps)
        e_plus, e_minus = local.e_slopes(2.0)
        assert (sweep.m_upper - math.exp(-2.0)) / eps == pytest.approx(e_plus, rel=1e-3)
        assert (math.exp(-2.0) - sweep.m_lower) / eps == pytest.approx(e_minus, rel=1e-3)
