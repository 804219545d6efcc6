"""
Tests for outward-rounded interval arithmetic.

Run with: pytest tests/services/interval/test_interval.py
"""
from fractions import Fraction

import mpmath
import pytest

from services.errors import DomainError
from services.interval.interval import ArithOp, ElemOp, Interval, arith, elem


class TestConstruction:
    """Tests for building intervals"""

    def test_point(self):
        """A point interval has zero width"""
        X = Interval.point(1.5)
        assert X.is_point()
        assert X.width == 0.0

    def test_empty_rejected(self):
        """lo > hi is an error"""
        with pytest.raises(DomainError, match="empty interval"):
            Interval(2.0, 1.0)

    def test_nan_rejected(self):
        """NaN endpoints are an error"""
        with pytest.raises(DomainError, match="NaN"):
            Interval(float("nan"), 1.0)

    def test_hull_and_intersect(self):
        """hull covers both, disjoint intersection is None"""
        a, b = Interval(0.0, 1.0), Interval(2.0, 3.0)
        assert Interval.hull([a, b]) == Interval(0.0, 3.0)
        assert a.intersect(b) is None
        assert a.intersect(Interval(0.5, 5.0)) == Interval(0.5, 1.0)

    def test_split(self):
        """split halves at the midpoint"""
        left, right = Interval(0.0, 2.0).split()
        assert left == Interval(0.0, 1.0)
        assert right == Interval(1.0, 2.0)


class TestArithmetic:
    """Tests for the four operations and the dependent square"""

    def test_exact_sum_is_not_widened(self):
        """[1,2] + [3,4] = [4,6] exactly"""
        assert Interval(1.0, 2.0) + Interval(3.0, 4.0) == Interval(4.0, 6.0)

    def test_inexact_sum_encloses(self):
        """0.1 + 0.2 encloses the exact rational sum"""
        total = Interval.point(0.1) + Interval.point(0.2)
        exact = Fraction(0.1) + Fraction(0.2)
        assert Fraction(total.lo) <= exact <= Fraction(total.hi)
        assert total.lo < total.hi

    def test_product(self):
        """[-1,2] * [3,4] = [-4,8]"""
        assert Interval(-1.0, 2.0) * Interval(3.0, 4.0) == Interval(-4.0, 8.0)

    def test_quotient_encloses(self):
        """1/3 encloses the exact rational"""
        third = Interval.ratio(1.0, 3.0)
        assert Fraction(third.lo) <= Fraction(1, 3) <= Fraction(third.hi)

    def test_division_by_zero_interval(self):
        """Dividing by an interval containing 0 raises"""
        with pytest.raises(DomainError, match="containing zero"):
            Interval(1.0, 2.0) / Interval(-1.0, 1.0)

    def test_dependent_square(self):
        """[-1,2]^2 = [0,4], unlike [-1,2]*[-1,2]"""
        X = Interval(-1.0, 2.0)
        assert X.sqr() == Interval(0.0, 4.0)
        assert (X * X).lo == -2.0

    def test_scalar_coercion(self):
        """Plain numbers mix with intervals"""
        assert 1 + Interval(1.0, 2.0) == Interval(2.0, 3.0)
        assert 3.0 - Interval(1.0, 2.0) == Interval(1.0, 2.0)

    def test_arith_dispatch(self):
        """arith applies the named operation"""
        a, b = Interval(1.0, 2.0), Interval(4.0, 8.0)
        assert arith(ArithOp.MUL, a, b) == Interval(4.0, 16.0)
        assert arith("sqr", Interval(-3.0, 1.0)) == Interval(0.0, 9.0)
        with pytest.raises(DomainError, match="two operands"):
            arith(ArithOp.ADD, a)


class TestElementary:
    """Tests for log, log1p and exp"""

    def test_log_of_one_is_exact(self):
        """log(1) = 0 without widening"""
        assert Interval.point(1.0).log() == Interval.point(0.0)

    def test_exp_of_zero_is_exact(self):
        """exp(0) = 1 without widening"""
        assert Interval.point(0.0).exp() == Interval.point(1.0)

    @pytest.mark.parametrize("x", [0.3, 1.7, 12.25, 1e-5])
    def test_log_encloses_high_precision(self, x):
        """log encloses the 50-digit value"""
        mpmath.mp.dps = 50
        X = Interval.point(x).log()
        exact = mpmath.log(mpmath.mpf(x))
        assert mpmath.mpf(X.lo) <= exact <= mpmath.mpf(X.hi)

    @pytest.mark.parametrize("x", [-0.9, -0.3, 0.3, 5.0])
    def test_log1p_and_exp_enclose(self, x):
        """log1p and exp enclose the 50-digit values"""
        mpmath.mp.dps = 50
        L = Interval.point(x).log1p()
        E = Interval.point(x).exp()
        assert mpmath.mpf(L.lo) <= mpmath.log1p(mpmath.mpf(x)) <= mpmath.mpf(L.hi)
        assert mpmath.mpf(E.lo) <= mpmath.exp(mpmath.mpf(x)) <= mpmath.mpf(E.hi)

    def test_log_domain(self):
        """log needs a positive interval unless zero endpoints are allowed"""
        with pytest.raises(DomainError, match="positive"):
            Interval(0.0, 1.0).log()
        assert Interval(0.0, 1.0).log(allow_zero_endpoint=True).lo == float("-inf")

    def test_recip_zero_endpoint(self):
        """[0, 2] maps to [1/2, inf] with the zero-endpoint extension"""
        R = Interval(0.0, 2.0).recip(allow_zero_endpoint=True)
        assert R.lo == 0.5
        assert R.hi == float("inf")

    def test_elem_dispatch(self):
        """elem applies the named function"""
        assert elem(ElemOp.LOG1P, Interval.point(0.0)) == Interval.point(0.0)
        with pytest.raises(DomainError):
            elem("log1p", Interval(-2.0, 0.0))
