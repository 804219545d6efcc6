"""
Tests for the two-value reduction of G_k.

Run with: pytest tests/services/certify/test_two_value.py
"""
import numpy as np
import pytest

from entities.certificate import Verdict
from services.certify.two_value import theta_grid, two_value_reduce
from services.errors import ParameterError
from services.scalar_fn.rate_functions import g_k_prime


@pytest.fixture(scope="module")
def table_k6():
    return two_value_reduce(6, 1)


class TestThetaGrid:
    """Tests for the theta grid"""

    def test_increasing_and_ends_at_zero(self):
        """The default grid is increasing and contains 0"""
        grid = theta_grid()
        assert np.all(np.diff(grid) > 0)
        assert grid[0] == pytest.approx(-8.0)
        assert grid[-1] == 0.0

    def test_bad_range(self):
        """lo < hi <= 0 is required"""
        with pytest.raises(ParameterError, match="theta range"):
            theta_grid((-1.0, 1.0))


class TestReduction:
    """Tests for two_value_reduce"""

    def test_k5_only_origin(self):
        """M_5 is increasing, so the only admissible point is u = 0"""
        table = two_value_reduce(5, 1)
        assert table.min_admissible_value() == 0.0
        assert all(point.g_value >= -1e-12 for point in table.admissible)

    def test_k6_interior_minimiser(self, table_k6):
        """k = 6 has an admissible b in (3, 4), with G = M_k there"""
        interior = [point for point in table_k6.admissible if 3.0 < point.b < 4.0]
        assert len(interior) == 1
        assert interior[0].g_value > 0.0
        assert interior[0].g_value == pytest.approx(interior[0].m_value, abs=1e-8)

    def test_rows_solve_the_equation(self, table_k6):
        """Bracketed a and b solve g_k'(s) = theta"""
        rows = [row for row in table_k6.bracketed_rows() if row.b_lo is not None and row.theta != 0.0]
        assert rows
        for row in rows[::50]:
            assert g_k_prime(row.a_mid, 6) == pytest.approx(row.theta, abs=1e-7)
            assert g_k_prime(row.b_mid, 6) == pytest.approx(row.theta, abs=1e-7)

    def test_concavity_certificate(self, table_k6):
        """g_k''' < 0 is certified on [-1, k-1]"""
        assert table_k6.concavity.verdict is Verdict.VERIFIED

    def test_bad_r(self):
        """r must lie in [1, k-2]"""
        with pytest.raises(ParameterError, match="r must lie"):
            two_value_reduce(5, 4)
