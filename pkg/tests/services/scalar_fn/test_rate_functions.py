"""
Tests for the rate functions h, psi, g_k and M_{r,k}.

Run with: pytest tests/services/scalar_fn/test_rate_functions.py
"""
import math

import mpmath
import numpy as np
import pytest

from services.errors import DomainError, ParameterError
from services.scalar_fn.rate_functions import (
    G_k,
    KParams,
    concave_interval_closed_form,
    g_k,
    g_k_prime,
    h,
    m_k,
    m_rk,
    mk_endpoint_values,
    psi,
    rho_k,
    threshold_c,
)

mpmath.mp.dps = 50


def h_oracle(t: float) -> float:
    t = mpmath.mpf(t)
    return float((1 + t) * mpmath.log1p(t) - t)


def psi_oracle(t: float) -> float:
    t = mpmath.mpf(t)
    return float(2 * ((1 + t) * mpmath.log1p(t) - t) / t ** 2)


def m_oracle(b: float, r: int, k: int) -> float:
    b = mpmath.mpf(b)
    m = k - r
    a = -r * b / m
    rho = mpmath.log(k - 1) / (k - 1)

    def g(s):
        return (1 + s) * mpmath.log1p(s) - s - rho * s ** 2

    return float(r * g(b) + m * g(a))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class TestH:
    """Tests for h(t) = (1+t)log(1+t) - t"""

    def test_special_values(self):
        """h(0) = 0, h(-1) = 1 and h(1) = 2 log 2 - 1"""
        assert h(0.0) == 0.0
        assert h(-1.0) == 1.0
        assert h(1.0) == pytest.approx(2 * math.log(2) - 1, rel=1e-15)

    @pytest.mark.parametrize("t", [-0.999, -0.5, -0.125, -1e-3, 1e-10, 0.01, 0.125, 0.2, 1.0, 7.5, 1e6])
    def test_matches_high_precision(self, t):
        """h agrees with a 50-digit oracle on both branches"""
        assert h(t) == pytest.approx(h_oracle(t), rel=1e-13)

    def test_array_input_keeps_shape(self):
        """Arrays map elementwise"""
        values = h(np.array([[0.0, 1.0], [-1.0, 0.1]]))
        assert values.shape == (2, 2)
        assert values[0, 1] == pytest.approx(h(1.0))

    def test_convex_on_random_triples(self, rng):
        """h lies below its chords"""
        x, y, z = np.sort(rng.uniform(-1.0, 20.0, size=(3, 1000)), axis=0)
        keep = z - x > 1e-6
        x, y, z = x[keep], y[keep], z[keep]
        weight = (z - y) / (z - x)
        chord = weight * h(x) + (1.0 - weight) * h(z)
        assert np.all(h(y) <= chord + 1e-12 * (1.0 + np.abs(chord)))

    def test_half_t_squared_psi(self, rng):
        """h = t^2 psi / 2 on both branches"""
        t = np.concatenate([rng.uniform(-1.0, 1.0, 500), 10.0 ** rng.uniform(-6, 3, 500)])
        np.testing.assert_allclose(h(t), 0.5 * t * t * psi(t), rtol=1e-12, atol=0.0)

    def test_below_domain_raises(self):
        """t < -1 is outside the domain"""
        with pytest.raises(DomainError, match="t >= -1"):
            h(-1.5)


class TestPsi:
    """Tests for psi(t) = 2h(t)/t^2"""

    def test_origin(self):
        """psi extends continuously with psi(0) = 1"""
        assert psi(0.0) == 1.0

    def test_left_end(self):
        """psi(-1) = 2 h(-1) = 2"""
        assert psi(-1.0) == pytest.approx(2.0, rel=1e-15)

    @pytest.mark.parametrize("t", [-0.9, -0.125, 0.05, 0.125, 0.1250001, 0.5, 1.0, 10.0, 1e4])
    def test_matches_high_precision(self, t):
        """psi agrees with the oracle across the series cut-over"""
        assert psi(t) == pytest.approx(psi_oracle(t), rel=1e-12)

    def test_decreasing(self):
        """psi is decreasing on a grid"""
        grid = np.linspace(-0.99, 50.0, 2001)
        assert np.all(np.diff(psi(grid)) < 0)


    def test_slope_at_origin(self):
        """psi'(0) = -1/3 by a central difference"""
        eps = 1e-5
        assert (psi(eps) - psi(-eps)) / (2 * eps) == pytest.approx(-1.0 / 3.0, abs=1e-8)

    def test_decreasing_on_random_pairs(self, rng):
        """psi(s) > psi(t) for -1 <= s < t <= 1e6"""
        draws = np.concatenate([rng.uniform(-1.0, 1.0, (2, 1000)), 10.0 ** rng.uniform(-3, 6, (2, 1000))], axis=1)
        lo, hi = draws.min(axis=0), draws.max(axis=0)
        keep = hi - lo > 1e-9 * (1.0 + hi)
        assert np.all(psi(lo[keep]) > psi(hi[keep]))


class TestGk:
    """Tests for g_k, its derivative and the sum G_k"""

    def test_rho(self):
        """rho_3 = log(2)/2 and the threshold rate is (k-1)log(k-1)"""
        assert rho_k(3) == pytest.approx(math.log(2) / 2)
        assert threshold_c(3) == pytest.approx(2 * math.log(2))

    def test_small_k_rejected(self):
        """rho_k needs k >= 3"""
        with pytest.raises(ParameterError, match="at least 3"):
            rho_k(2)

    def test_gk_zero_at_origin(self):
        """g_k(0) = 0 and g_k'(0) = 0"""
        assert g_k(0.0, 5) == 0.0
        assert g_k_prime(0.0, 5) == 0.0

    def test_gk_prime_matches_difference_quotient(self):
        """g_k' is the derivative of g_k"""
        s, eps = 0.7, 1e-6
        numeric = (g_k(s + eps, 6) - g_k(s - eps, 6)) / (2 * eps)
        assert g_k_prime(s, 6) == pytest.approx(numeric, rel=1e-7)

    def test_G_k_sums_coordinates(self):
        """G_k(u) = sum_j g_k(u_j)"""
        u = np.array([0.5, -0.25, -0.25])
        assert G_k(u) == pytest.approx(sum(g_k(x, 3) for x in u))

    def test_G3_example(self):
        """G_3(2, -1, -1) = 3 log(3/2)"""
        assert G_k(np.array([2.0, -1.0, -1.0])) == pytest.approx(3 * math.log(1.5), rel=1e-14)

    def test_G_k_stacked(self):
        """Stacked vectors give one value per row"""
        u = np.zeros((4, 5))
        assert np.all(G_k(u) == 0.0)

    def test_kparams(self):
        """J_k = c/(k-1)^2 and R = (k-1)^2"""
        params = KParams(k=3, c=1.2)
        assert params.J == pytest.approx(0.3)
        assert params.R == 4
        assert params.below_threshold()
        assert not KParams(k=3, c=1.4).below_threshold()


class TestMk:
    """Tests for M_{r,k}(b)"""

    def test_zero_at_origin(self):
        """M_k(0) = 0 for every k"""
        for k in (3, 4, 5, 10):
            assert m_k(0.0, k).value == 0.0

    def test_right_end(self):
        """At b = k-1 the partner coordinate is -1"""
        k = 5
        value = m_k(float(k - 1), k)
        assert value.value == pytest.approx(g_k(k - 1.0, k) + (k - 1) * g_k(-1.0, k))
        assert math.isinf(value.d1)

    def test_derivative_matches_difference_quotient(self):
        """d1 is the derivative of the value"""
        b, eps = 1.3, 1e-6
        numeric = (m_rk(b + eps, 2, 7).value - m_rk(b - eps, 2, 7).value) / (2 * eps)
        assert m_rk(b, 2, 7).d1 == pytest.approx(numeric, rel=1e-6)

    @pytest.mark.parametrize("b,r,k", [(0.4, 1, 3), (1.1, 1, 3), (0.8, 1, 5), (2.5, 1, 5), (1.3, 2, 7), (0.3, 3, 8), (4.0, 1, 12)])
    def test_derivatives_by_differences(self, b, r, k):
        """d1 and d2 match central differences and the value matches the oracle"""
        eps = 1e-5
        here = m_rk(b, r, k)
        left, right = m_rk(b - eps, r, k), m_rk(b + eps, r, k)
        assert here.value == pytest.approx(m_oracle(b, r, k), rel=1e-10, abs=1e-13)
        assert here.d1 == pytest.approx((right.value - left.value) / (2 * eps), rel=1e-5, abs=1e-7)
        assert here.d2 == pytest.approx((right.d1 - left.d1) / (2 * eps), rel=1e-5, abs=1e-7)

    def test_outside_domain(self):
        """b beyond (k-r)/r is rejected"""
        with pytest.raises(DomainError):
            m_rk(3.5, 1, 4)

    def test_bad_r(self):
        """r must lie in [1, k-2]"""
        with pytest.raises(ParameterError, match="r must lie"):
            m_rk(0.1, 4, 5)

    def test_concave_interval_empty_for_small_k(self):
        """I_k is empty for k = 3, 4 and not for k = 5"""
        assert concave_interval_closed_form(3) is None
        assert concave_interval_closed_form(4) is None
        assert concave_interval_closed_form(5) is not None

    def test_concave_interval_k5(self):
        """The right end of I_5 is about 2.1922"""
        lo, hi = concave_interval_closed_form(5)
        assert hi == pytest.approx(2.1922, abs=1e-3)
        assert 0.0 < lo < hi
        assert m_k(0.5 * (lo + hi), 5).d2 < 0

    def test_endpoint_slope(self):
        """M_k'(k1-1) = 2 log(k1)/k1^2"""
        for k in (6, 9, 20):
            assert mk_endpoint_values(k).slope_at_k1_minus_1 == pytest.approx(m_k(k - 2.0, k).d1, rel=1e-10)
