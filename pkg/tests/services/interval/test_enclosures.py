"""
Tests for the range enclosures of h, psi, g_k and M_{r,k}.

Run with: pytest tests/services/interval/test_enclosures.py
"""
import numpy as np
import math

import pytest

from services.errors import DomainError, ParameterError
from services.interval.enclosures import EnclosureFactory, FunctionType, enclose_fn
from services.interval.interval import Interval
from services.scalar_fn.rate_functions import g_k, h, m_rk, psi


def _grid(domain: Interval, points: int = 41):
    return np.linspace(domain.lo, domain.hi, points)


class TestRateEnclosures:
    """Tests for h and psi"""

    @pytest.mark.parametrize("lo,hi", [(-1.0, -0.5), (-0.2, 0.05), (0.05, 0.3), (1.0, 40.0)])
    def test_h_contains_samples(self, lo, hi):
        """The h enclosure contains h on a grid"""
        domain = Interval(lo, hi)
        enclosure = enclose_fn(FunctionType.H, domain)
        for t in _grid(domain):
            assert enclosure.lo <= h(t) <= enclosure.hi

    @pytest.mark.parametrize("lo,hi", [(-0.9, -0.2), (-0.1, 0.1), (0.1, 0.2), (2.0, 3.0)])
    def test_psi_contains_samples(self, lo, hi):
        """The psi enclosure contains psi on a grid, including across the series zone"""
        domain = Interval(lo, hi)
        enclosure = enclose_fn(FunctionType.PSI, domain)
        for t in _grid(domain):
            assert enclosure.lo <= psi(t) <= enclosure.hi

    def test_psi_at_zero(self):
        """psi(0) = 1 lies in the point enclosure"""
        assert enclose_fn(FunctionType.PSI, Interval.point(0.0)).contains(1.0)

    def test_psi_margin_positive_away_from_zero(self):
        """psi(t) - 2log(1+2t)/(1+2t) is positive on a cell at t = 1"""
        assert enclose_fn(FunctionType.PSI_LOWER_MARGIN, Interval(1.0, 1.0001)).lo > 0.0

    @pytest.mark.parametrize("s_c", [1e-8, 0.05, 0.2, 0.4, 0.49])
    def test_tail_limit_below_tail_margin(self, s_c):
        """The tail limit bound stays below the tail margin across [0, s_c], with -1/(1-s_c) in it"""
        limit = enclose_fn(FunctionType.PSI_LOWER_TAIL_LIMIT, Interval(0.0, s_c))
        for s in np.linspace(s_c / 50, s_c, 50):
            assert limit.lo <= enclose_fn(FunctionType.PSI_LOWER_TAIL, Interval.point(s)).hi
        expected = -math.log(s_c) * (1 - 1 / (2 - s_c)) - 1 / (1 - s_c) - math.log(2) / (2 - s_c)
        assert limit.lo == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_domain_checked(self):
        """Leaving the domain raises"""
        with pytest.raises(DomainError, match="defined on"):
            enclose_fn(FunctionType.H, Interval(-2.0, 0.0))


class TestGkEnclosures:
    """Tests for the g_k family"""

    def test_gk_contains_samples(self):
        """The g_5 enclosure contains g_5 on a grid"""
        domain = Interval(-0.8, 3.5)
        enclosure = enclose_fn(FunctionType.G_K, domain, k=5)
        for s in _grid(domain):
            assert enclosure.lo <= g_k(s, 5) <= enclosure.hi

    def test_needs_k(self):
        """The g_k family needs k"""
        with pytest.raises(ParameterError, match="needs k"):
            EnclosureFactory.create(FunctionType.G_K)

    def test_factory_caches(self):
        """The same (type, k, r) returns the same object"""
        first = EnclosureFactory.create(FunctionType.G_K_PRIME, 6)
        assert EnclosureFactory.create(FunctionType.G_K_PRIME, 6) is first
        assert EnclosureFactory.create(FunctionType.G_K_PRIME, 7) is not first


class TestMrkEnclosures:
    """Tests for the M_{r,k} family"""

    @pytest.mark.parametrize("r,k", [(1, 5), (1, 9), (2, 7)])
    def test_contains_samples(self, r, k):
        """M_{r,k} and its derivative are enclosed on a grid"""
        domain = Interval(0.2, 1.2)
        value = enclose_fn(FunctionType.M_RK, domain, k=k, r=r)
        slope = enclose_fn(FunctionType.M_RK_PRIME, domain, k=k, r=r)
        for b in _grid(domain, 21):
            exact = m_rk(b, r, k)
            assert value.lo <= exact.value <= value.hi
            assert slope.lo <= exact.d1 <= slope.hi

    def test_domain_is_k_minus_r_over_r(self):
        """The M_rk domain ends at (k-r)/r"""
        enclosure = EnclosureFactory.create(FunctionType.M_RK, 8, 2)
        assert enclosure.domain() == Interval(0.0, 3.0)

    def test_concave_k5_middle(self):
        """M_5'' is negative on a cell inside I_5"""
        assert enclose_fn(FunctionType.M_RK_SECOND, Interval(1.4, 1.6), k=5).hi < 0.0
