"""Limit-law evaluators: frozen oracle values, cross-identities, bounds."""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad

from rangechain import (
    LimitLawConfig,
    SplitSpec,
    cdf,
    charfn_closed,
    charfn_product,
    conditional_t1_charfn,
    density,
    limit_moments,
)
from rangechain.limitlaw import _cdf_array

# straightforward partial sums (independent of the adaptive evaluator)
# with k = 2..500, alternating-tail bound < 1e-12:
DENSITY_AT_1 = 0.4569041629069773
CDF_AT_1 = 0.128350997377626

VAR_CLOSED = 4.0 * (math.pi**2 / 3.0 - 3.0)


class TestDensity:
    def test_dominant_term_at_x10(self):
        # alternating bound: value in [a2 - a3, a2], first terms dominate
        ev = density(10.0)
        a2 = 3.0 * math.exp(-10.0)
        a3 = 15.0 * math.exp(-30.0)
        a4 = 42.0 * math.exp(-60.0)
        assert abs(ev.value - (a2 - a3)) <= a4 + 1e-18
        assert abs(ev.value - a2) < 1.1e-8 * ev.value

    def test_frozen_value_at_1(self):
        ev = density(1.0)
        assert abs(ev.value - DENSITY_AT_1) < 1e-9
        assert ev.error_bound <= 1e-12

    def test_nonnegative_on_grid(self):
        for x in np.linspace(0.01, 20.0, 500):
            assert density(float(x)).value >= 0.0

    def test_error_bound_contract(self):
        tight = LimitLawConfig(tol=1e-15)
        loose = LimitLawConfig(tol=1e-6)
        for x in (0.05, 0.3, 1.0, 4.0):
            lo = density(x, loose)
            hi = density(x, tight)
            assert lo.error_bound <= 1e-6
            assert abs(lo.value - hi.value) <= lo.error_bound

    def test_refuses_below_x_min(self):
        with pytest.raises(ValueError):
            density(1e-4)
        cfg = LimitLawConfig(x_min=0.5)
        with pytest.raises(ValueError):
            density(0.4, cfg)


class TestCdf:
    def test_at_zero(self):
        ev = cdf(0.0)
        assert ev.value == 0.0 and ev.error_bound == 0.0

    def test_frozen_value_at_1(self):
        ev = cdf(1.0)
        assert abs(ev.value - CDF_AT_1) < 1e-9

    def test_saturates(self):
        assert abs(cdf(50.0).value - 1.0) < 1e-12

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            cdf(-0.1)

    def test_monotone_on_grid(self):
        # nondecreasing modulo the evaluators' own rigorous error bounds
        evs = [cdf(float(x)) for x in np.linspace(0.0, 20.0, 1000)]
        for a, b in zip(evs, evs[1:]):
            assert b.value >= a.value - (a.error_bound + b.error_bound)

    @pytest.mark.parametrize("x", [0.2, 0.5, 1.0, 2.0, 5.0])
    def test_derivative_matches_density(self, x):
        h = 1e-5
        diff = (cdf(x + h).value - cdf(x - h).value) / (2 * h)
        assert abs(diff - density(x).value) < 1e-6

    @pytest.mark.parametrize("x", [0.2, 0.5, 1.0, 2.0, 5.0])
    def test_quadrature_of_density(self, x):
        x_min = 1e-3
        assert cdf(x_min).value < 1e-12  # mass below x_min is negligible
        integral, err = quad(lambda u: density(u).value, x_min, x, limit=200)
        assert err < 1e-7
        assert abs(integral - cdf(x).value) < 1e-6

    def test_normalization_by_quadrature(self):
        integral, err = quad(lambda u: density(u).value, 1e-3, 50.0, limit=300)
        assert abs(integral - 1.0) < 1e-6

    def test_vectorized_matches_scalar(self):
        xs = np.array([0.0, 0.05, 0.3, 1.0, 2.5, 7.0, 30.0])
        vec = _cdf_array(xs)
        for x, v in zip(xs, vec):
            assert abs(v - cdf(float(x)).value) < 1e-12


class TestCharfn:
    def test_product_at_zero_is_exactly_one(self):
        for K in (2, 10, 10**5):
            assert charfn_product(0.0, K) == 1.0

    def test_product_modulus_bound(self):
        for t in (-7.0, -1.0, 0.3, 2.0, 40.0):
            for K in (10, 1000):
                assert abs(charfn_product(t, K)) <= 1.0 + 1e-12

    def test_product_truncation_rate(self):
        # tail estimate 2|t|/K
        a = charfn_product(5.0, 10**4)
        b = charfn_product(5.0, 10**5)
        assert abs(a - b) < 1e-3

    def test_product_domain(self):
        with pytest.raises(ValueError):
            charfn_product(1.0, 1)

    def test_closed_at_zero(self):
        assert charfn_closed(0.0) == 1.0

    def test_closed_conjugate_symmetry(self):
        for t in (0.05, 0.3, 1.7, 4.2, 9.0):
            z = charfn_closed(t)
            w = charfn_closed(-t)
            assert cmath.isclose(w, z.conjugate(), rel_tol=0, abs_tol=1e-14)

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0, 5.0, -0.1, -0.5, -1.0, -2.0, -5.0])
    def test_closed_matches_product(self, t):
        diff = abs(charfn_closed(t) - charfn_product(t, 10**5))
        assert diff <= 3e-5 * max(1.0, abs(t))

    def test_huge_t_underflows_gracefully(self):
        z = charfn_closed(1e7)
        assert abs(z) <= 1e-300


class TestMoments:
    def test_mean_and_variance(self):
        mean, var = limit_moments()
        assert abs(mean - 2.0) < 1e-10
        assert abs(var - VAR_CLOSED) < 1e-10

    def test_second_moment_by_quadrature(self):
        mean, var = limit_moments()
        m2, err = quad(lambda u: u * u * density(u).value, 1e-3, 60.0, limit=300)
        assert abs(m2 - (mean * mean + var)) < 1e-6


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            LimitLawConfig(tol=0.0)
        with pytest.raises(ValueError):
            LimitLawConfig(x_min=-1.0)
        with pytest.raises(ValueError):
            LimitLawConfig(product_K=1)


class TestFiniteNConvergence:
    def test_t1_charfn_approaches_truncated_product(self):
        # fixed xi, growing n: |phi_n(t/n) - prod_{m<=xi}| <= 10 xi^4 / n
        xi = 30
        grid = np.linspace(-5.0, 5.0, 21)
        worst = {}
        for n in (10**6, 10**7, 10**8):
            split = SplitSpec(xi)
            diffs = [
                abs(
                    conditional_t1_charfn(n, split, float(t) / n)
                    - charfn_product(float(t), xi)
                )
                for t in grid
            ]
            worst[n] = max(diffs)
            assert worst[n] <= 10.0 * xi**4 / n
        assert worst[10**8] < worst[10**7] < worst[10**6]
