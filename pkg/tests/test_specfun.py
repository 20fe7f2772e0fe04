import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from chaoslab.errors import DomainError, SingularityError
from chaoslab.specfun import (bessel_i0, i0_log_derivative, jacobi_G, jacobi_G_partial,
                              jacobi_G_quadrature, jacobi_theta0, log_i0, surface_constants,
                              theta0_direct, theta0_dual, wrap_torus)

# [DERIVED] mpmath besseli at 30 digits, frozen
I0_1 = 1.2660658777520083
I0_2 = 2.2795853023360673
DLOG_02 = 0.09950331057391262
# [DERIVED] 2 * sum_{n>=1} exp(-n^2), mpmath nsum
THETA_1_0 = 0.7726372048266522
# [DERIVED] Kronecker limit formula for the square lattice:
# sum_{k != 0} |k|^-2 e^{ik.x} + 2 pi log|x| -> -4 pi log eta(i), eta(i) = Gamma(1/4) / (2 pi^{3/4})
KRONECKER_C = 3.3134009554032505


def _i0_quad(x):
    return integrate.quad(lambda u: math.exp(x * math.cos(u)), 0, 2 * math.pi,
                          epsabs=0, epsrel=1e-13)[0] / (2 * math.pi)


def _g1_closed(x):
    return -2.0 * np.log(2.0 * np.abs(np.sin(np.asarray(x) / 2.0)))


class TestSurfaceConstants:
    def test_values(self):
        assert surface_constants(1).tau == pytest.approx(1.0, abs=1e-15)
        assert surface_constants(2).tau == pytest.approx(math.pi, abs=1e-15)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_s_is_twice_tau(self, d):
        c = surface_constants(d)
        assert c.s == 2 * c.tau

    def test_bad_dimension(self):
        with pytest.raises(DomainError):
            surface_constants(0)


class TestBessel:
    def test_zero(self):
        assert bessel_i0(0.0) == 1.0

    @pytest.mark.parametrize("x, ref", [(1.0, I0_1), (2.0, I0_2)])
    def test_frozen(self, x, ref):
        assert bessel_i0(x) == pytest.approx(ref, rel=1e-12)

    def test_series_oracle(self):
        # truncated power series, terms below 1e-16
        s = math.fsum((0.25) ** m / math.factorial(m) ** 2 for m in range(26))
        assert bessel_i0(1.0) == pytest.approx(s, rel=1e-14)

    def test_against_integral_definition(self, rng):
        for x in rng.uniform(-3, 3, 20):
            assert bessel_i0(x) == pytest.approx(_i0_quad(x), rel=1e-10)

    @given(st.floats(-700, 700))
    def test_even_and_at_least_one(self, x):
        assert bessel_i0(-x) == bessel_i0(x)
        assert bessel_i0(x) >= 1.0

    def test_overflow_guard(self):
        with pytest.raises(DomainError, match="700"):
            bessel_i0(701.0)

    def test_vectorized(self):
        out = bessel_i0(np.array([0.0, 1.0, 2.0]))
        np.testing.assert_allclose(out, [1.0, I0_1, I0_2], rtol=1e-12)


class TestLogI0:
    def test_trivial(self):
        assert log_i0(0.0) == 0.0
        assert i0_log_derivative(0.0) == 0.0

    def test_small_argument(self):
        assert log_i0(0.01) == pytest.approx(2.5e-5, abs=1e-9)

    def test_log_derivative_frozen(self):
        assert i0_log_derivative(0.2) == pytest.approx(DLOG_02, rel=1e-12)
        assert i0_log_derivative(0.2) == pytest.approx(0.1 - 0.008 / 16, abs=1e-5)

    def test_large_argument_no_overflow(self):
        v = log_i0(1e4)
        asym = 1e4 - 0.5 * math.log(2 * math.pi * 1e4) + math.log1p(1 / 8e4)
        assert v == pytest.approx(asym, rel=1e-12)

    @given(st.floats(0, 500))
    def test_matches_log_of_i0(self, x):
        assert log_i0(x) == pytest.approx(math.log(bessel_i0(x)), rel=1e-12, abs=1e-15)

    @given(st.floats(-1e4, 1e4))
    def test_log_derivative_odd_and_bounded(self, x):
        g = i0_log_derivative(x)
        assert i0_log_derivative(-x) == -g
        assert -1.0 < g < 1.0 or (abs(x) > 30 and abs(g) <= 1.0)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            log_i0(float("nan"))


class TestTheta:
    def test_large_u_vanishes(self):
        assert abs(jacobi_theta0(50.0, 1.234, 1)) < 1e-13

    def test_frozen_value(self):
        assert jacobi_theta0(1.0, 0.0, 1) == pytest.approx(THETA_1_0, abs=1e-14)

    def test_quarter_both_forms(self):
        assert theta0_direct(0.25, 0.0, 1) == pytest.approx(theta0_dual(0.25, 0.0, 1), abs=1e-12)

    @pytest.mark.parametrize("d", [1, 2])
    def test_duality_grid(self, d):
        rng = np.random.default_rng(d)
        for u in np.geomspace(0.1, 10, 4):
            x = rng.uniform(-np.pi, np.pi, (4, d)) if d == 2 else rng.uniform(-np.pi, np.pi, 4)
            np.testing.assert_allclose(theta0_direct(u, x, d), theta0_dual(u, x, d), atol=1e-12)

    @given(st.floats(0.05, 20), st.floats(-np.pi, np.pi))
    def test_even(self, u, x):
        assert jacobi_theta0(u, -x, 1) == pytest.approx(jacobi_theta0(u, x, 1), abs=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            jacobi_theta0(0.0, 0.0)


class TestJacobiG:
    def test_d1_pi(self):
        assert jacobi_G(math.pi, 1) == pytest.approx(-2 * math.log(2), abs=1e-8)

    def test_d1_third(self):
        assert abs(jacobi_G(math.pi / 3, 1)) < 1e-8

    def test_d1_closed_form(self, rng):
        x = rng.uniform(-np.pi, np.pi, 50)
        x = x[np.abs(x) > 1e-3]
        np.testing.assert_allclose(jacobi_G(x, 1), _g1_closed(x), atol=1e-7)

    def test_quadrature_path_agrees(self, rng):
        pts = rng.uniform(-np.pi, np.pi, (5, 2))
        np.testing.assert_allclose(jacobi_G(pts, 2), jacobi_G_quadrature(pts, 2), atol=1e-8)
        x1 = np.array([0.3, 2.0])
        np.testing.assert_allclose(jacobi_G_quadrature(x1, 1), _g1_closed(x1), atol=1e-8)

    def test_d2_log_band(self):
        vals = [jacobi_G(np.array([r, 0.0]), 2) + 2 * math.pi * math.log(r) for r in (0.1, 0.05, 0.025)]
        assert max(vals) - min(vals) < 0.5

    def test_d2_kronecker_constant(self):
        r = 1e-4
        v = jacobi_G(np.array([r, 0.0]), 2) + 2 * math.pi * math.log(r)
        assert v == pytest.approx(KRONECKER_C, abs=1e-6)

    def test_singular(self):
        with pytest.raises(SingularityError):
            jacobi_G(0.0, 1)
        with pytest.raises(SingularityError):
            jacobi_G(np.array([2 * np.pi, 0.0]), 2)

    def test_periodic_and_symmetric(self):
        x = np.array([0.4, -1.1])
        g = jacobi_G(x, 2)
        assert jacobi_G(x + 2 * np.pi, 2) == pytest.approx(g, abs=1e-12)
        assert jacobi_G(-x, 2) == pytest.approx(g, abs=1e-12)
        assert jacobi_G(x[::-1], 2) == pytest.approx(g, abs=1e-12)

    def test_partial_sums_dominated(self):
        # one fitted C across all m: the excess must not drift upward with m
        rng = np.random.default_rng(3)
        r = np.geomspace(1e-3, 3.0, 1000)
        th = rng.uniform(0, 2 * np.pi, 1000)
        pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
        bound = 2 * np.pi * np.log(1 / np.linalg.norm(pts, axis=1))
        excess = [float(np.max(jacobi_G_partial(pts, m, 2) - bound)) for m in (10, 20, 40, 80)]
        assert max(excess) - excess[0] < 0.5
        assert np.isfinite(excess).all()


def test_wrap_torus():
    np.testing.assert_allclose(wrap_torus(np.array([4.0, -4.0, np.pi])),
                               [4.0 - 2 * np.pi, 2 * np.pi - 4.0, -np.pi])
