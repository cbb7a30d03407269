"""Special-function layer: branch maps, eigenvalues, eigenfunction evaluation."""

import math

import mpmath as mp
import numpy as np
import pytest

from cmextrap import special

mp.mp.dps = 30


def u_reference(z, mu):
    """Deep oracle: arbitrary-precision hypergeometric evaluation."""
    z = mp.mpmathify(z)
    a = mp.mpf("0.25") + 0.5j * mp.mpf(mu)
    b = mp.mpf("0.25") - 0.5j * mp.mpf(mu)
    return complex(mp.hyp2f1(a, b, 1, 1 - 1 / z**2) / z)


class TestAlpha:
    def test_examples(self):
        assert special.alpha(2.0) == pytest.approx(math.pi / 3.0, abs=1e-14)
        assert special.alpha(1e6) == pytest.approx(math.pi / 2.0, abs=1e-5)

    @pytest.mark.parametrize("z", [0.5, 1.0, 0.0, -2.0, -1.0 + 1.0j])
    def test_domain_errors(self, z):
        with pytest.raises(ValueError):
            special.alpha(z)

    def test_defining_relation_random(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            z = complex(rng.uniform(1e-3, 10.0), rng.uniform(-10.0, 10.0))
            if z.imag == 0.0 and z.real <= 1.0:
                continue
            a = special.alpha(z)
            assert abs(z * np.cos(a) - 1.0) <= 1e-12 * abs(z)
            assert 0.0 < np.real(a) < math.pi / 2.0

    def test_power_ray_range(self):
        # alpha((i y)^(1/p)) has real part pinned in (pi/(2p), pi/2)
        rng = np.random.default_rng(11)
        for _ in range(100):
            y = rng.uniform(1e-3, 1e3)
            p = rng.uniform(1.01, 8.0)
            z = (1j * y) ** (1.0 / p)
            ra = np.real(special.alpha(z))
            assert math.pi / (2.0 * p) < ra < math.pi / 2.0
        ra = np.real(special.alpha((1j) ** 0.5))
        assert math.pi / 4.0 < ra < math.pi / 2.0


class TestRFactor:
    def test_examples(self):
        assert special.r_factor(2.0) == pytest.approx(2.0**-0.5 * 3.0**-0.25, rel=1e-14)
        assert special.r_factor(math.sqrt(2.0)) == pytest.approx(2.0**-0.25, rel=1e-12)

    def test_divergence_toward_one(self):
        # (z^2-1)^(-1/4) blow-up; magnitude ~ (2(z-1))^(-1/4)
        assert abs(special.r_factor(1.0 + 1e-8)) > 80.0
        assert abs(special.r_factor(1.0 + 1e-13)) > 1e3
        with pytest.raises(ValueError):
            special.r_factor(1.0)

    def test_real_positive_beyond_one(self):
        for z in (1.5, 3.0, 40.0):
            r = special.r_factor(z)
            assert isinstance(r, float) and r > 0.0


class TestEigenvalue:
    def test_values(self):
        assert special.eigenvalue_nu(0.0) == pytest.approx(math.pi, rel=1e-15)
        assert special.eigenvalue_nu(1.0) == pytest.approx(math.pi / math.cosh(math.pi), rel=1e-14)
        assert special.eigenvalue_nu(10.0) < 1e-12

    def test_strictly_decreasing(self):
        mus = np.linspace(0.0, 20.0, 200)
        nu = special.eigenvalue_nu(mus)
        assert np.all(np.diff(nu) < 0.0)


class TestGammaCstar:
    def test_gamma_values(self):
        assert special.gamma_star(1.0) == pytest.approx(1.0, rel=1e-15)
        assert special.gamma_star(2.0) == pytest.approx(1.0 / 3.0, rel=1e-14)
        assert special.gamma_star(1e4) == pytest.approx(2.0 / (math.pi * 1e4), rel=1e-8)

    def test_gamma_monotone(self):
        xs = np.linspace(1.0, 50.0, 300)
        assert np.all(np.diff(special.gamma_star(xs)) < 0.0)

    def test_c_star(self):
        assert special.c_star(2.0) == pytest.approx(0.584287627481, rel=1e-10)
        assert special.c_star(1.0 + 1e-6) > 10.0
        with pytest.raises(ValueError):
            special.c_star(1.0)
        with pytest.raises(ValueError):
            special.c_star(0.5)


class TestEigenfunction:
    def test_value_at_one_exact(self):
        rng = np.random.default_rng(3)
        for mu in rng.uniform(0.0, 40.0, size=20):
            assert special.eigfun_u(1.0, float(mu)) == 1.0

    @pytest.mark.parametrize(
        "point",
        [0.03, 0.25, 0.6, 0.93, 0.97, 0.9999, 1.2, 2.0, 5.0, 13.5, 20.0, 100.0],
    )
    @pytest.mark.parametrize("mu", [0.0, 0.3, 1.0, 5.0, 12.0, 20.0])
    def test_exact_branch_vs_reference(self, point, mu):
        ref = u_reference(point, mu)
        got = special.eigfun_u(point, mu, mu_switch=np.inf)
        assert got == pytest.approx(ref.real, rel=2e-9, abs=1e-12)

    @pytest.mark.parametrize("z", [3.0 + 1.0j, 0.5 + 2.0j, 0.05 + 0.2j, 1.5 - 0.4j])
    @pytest.mark.parametrize("mu", [0.0, 1.0, 5.0, 12.0])
    def test_complex_branch_vs_reference(self, z, mu):
        ref = u_reference(z, mu)
        got = special.eigfun_u(z, mu, mu_switch=np.inf)
        assert abs(got - ref) <= 5e-7 * abs(ref)

    def test_euler_quadrature_matches_series(self):
        for point in (0.3, 0.8, 2.0):
            for mu in (0.0, 2.0, 8.0):
                ref = special.eigfun_u(point, mu, mu_switch=np.inf)
                got = special.eigfun_u_euler(point, mu)
                assert complex(got) == pytest.approx(complex(ref), rel=1e-7)

    def test_euler_convergence_check(self):
        val = special.eigfun_u_euler(2.0, 3.0, check=True)
        ref = special.eigfun_u(2.0, 3.0, mu_switch=np.inf)
        assert complex(val) == pytest.approx(complex(ref), rel=1e-9)

    def test_euler_vs_asymptotic_at_mu30(self):
        # relative error of the closed large-mu form is O(1/mu)
        euler = special.eigfun_u_euler(2.0, 30.0)
        asym = special.eigfun_u_asymptotic(2.0, 30.0)
        assert abs(complex(euler) / complex(asym) - 1.0) <= 0.05

    def test_hybrid_overlap_band(self):
        # exact and asymptotic branches agree within 2/mu_switch on the band
        switch = special.MU_SWITCH_DEFAULT
        for z in (1.5, 2.0, 5.0):
            for mu in np.linspace(switch - 5.0, switch + 5.0, 11):
                exact = special.eigfun_u(z, float(mu), mu_switch=np.inf)
                asym = special.eigfun_u_asymptotic(z, float(mu))
                assert abs(exact / asym - 1.0) <= 2.0 / switch

    def test_hybrid_switch(self):
        below = special.eigfun_sample(2.0, 19.0)
        above = special.eigfun_sample(2.0, 21.0)
        assert below.method == "series"
        assert above.method == "asymptotic"

    def test_real_output_on_unit_interval(self):
        for x in (0.1, 0.5, 0.96):
            val = special.eigfun_u(x, 3.0)
            assert isinstance(val, float)

    def test_mu_array_vectorization(self):
        mus = np.linspace(0.0, 15.0, 31)
        vec = special.eigfun_u(2.0, mus, mu_switch=np.inf)
        scl = np.array([special.eigfun_u(2.0, float(m), mu_switch=np.inf) for m in mus])
        np.testing.assert_allclose(vec, scl, rtol=1e-13)

    def test_unit_matrix_matches_scalar(self):
        xs = np.array([0.05, 0.4, 0.96, 1.0])
        mus = np.array([0.0, 0.7, 6.0])
        mat = special.eigfun_unit_matrix(xs, mus)
        for i, mu in enumerate(mus):
            for j, x in enumerate(xs):
                assert mat[i, j] == pytest.approx(
                    special.eigfun_u(float(x), float(mu)), rel=1e-10, abs=1e-12
                )

    def test_asymptotic_params(self):
        ap = special.asymptotic_params(3.0, 2.0)
        assert 0.0 < np.real(ap.beta) < 1.0
        assert ap.alpha == pytest.approx(math.acos(1.0 / 3.0), rel=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            special.eigfun_u(-0.5, 1.0)
        with pytest.raises(ValueError):
            special.eigfun_u(2.0, -1.0)
