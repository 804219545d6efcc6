"""
Tests for certified root bracketing.

Run with: pytest tests/services/interval/test_roots.py
"""
import math

import pytest

from services.errors import DomainError
from services.interval.enclosures import EnclosureFactory, FunctionType
from services.interval.interval import Interval
from services.interval.roots import bracket_root


class TestBracketRoot:
    """Tests for bracket_root"""

    def test_square_root_of_two(self):
        """x^2 - 2 on [0, 2] has one certified bracket around sqrt(2)"""
        brackets = bracket_root(lambda X: X.sqr() - 2.0, Interval(0.0, 2.0), tol=1e-9)
        assert len(brackets) == 1
        enclosure, certified = brackets[0]
        assert certified
        assert enclosure.contains(math.sqrt(2.0))
        assert enclosure.width <= 1e-9

    def test_no_root(self):
        """x^2 + 1 is certified to have no zero"""
        assert bracket_root(lambda X: X.sqr() + 1.0, Interval(-1.0, 1.0)) == []

    def test_two_roots(self):
        """(x-1)(x-3) on [0, 4] gives two ordered brackets"""
        brackets = bracket_root(lambda X: (X - 1.0) * (X - 3.0), Interval(0.0, 4.0), tol=1e-8)
        certified = [b.enclosure for b in brackets if b.certified]
        assert len(certified) == 2
        assert certified[0].contains(1.0)
        assert certified[1].contains(3.0)

    def test_root_of_mk_second_derivative(self):
        """The sign change of M_5'' near 2.1922 is certified"""
        enclosure = EnclosureFactory.create(FunctionType.M_RK_SECOND, 5)
        brackets = bracket_root(enclosure, Interval(1.8, 2.6), tol=1e-10)
        certified = [b for b in brackets if b.certified]
        assert len(certified) == 1
        assert certified[0].enclosure.mid == pytest.approx(2.192257, abs=1e-5)

    def test_bad_tolerance(self):
        """tol must be positive"""
        with pytest.raises(DomainError, match="tol"):
            bracket_root(lambda X: X, Interval(-1.0, 1.0), tol=0.0)
