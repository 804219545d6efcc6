"""
Tests for counting and enumerating H_k(B).

Run with: pytest tests/services/tables/test_enumeration.py
"""
import math

import numpy as np
import pytest

from entities.margin_table import MarginTable
from services.errors import BudgetExceededError, ParameterError
from services.tables.enumeration import (
    check_budget,
    count_Hk,
    enumerate_Hk,
    iter_table_chunks,
    row_choices,
)


def count_k3(B: int) -> int:
    """|H_3(B)| = C(B+2, 2) + 3 C(B+3, 4)."""
    return math.comb(B + 2, 2) + 3 * math.comb(B + 3, 4)


class TestCount:
    """Tests for count_Hk"""

    @pytest.mark.parametrize("B,expected", [(1, 6), (2, 21), (3, 55), (4, 120), (9, 1540), (20, 26796)])
    def test_k3_known_values(self, B, expected):
        """Counts for k = 3 follow the closed form"""
        assert count_Hk(3, B) == expected == count_k3(B)

    def test_k4(self):
        """|H_4(1)| = 4! and |H_4(2)| = 282"""
        assert count_Hk(4, 1) == 24
        assert count_Hk(4, 2) == 282

    def test_empty_margin(self):
        """B = 0 has only the zero table"""
        assert count_Hk(3, 0) == 1

    def test_invalid(self):
        """k < 2 and B < 0 are rejected"""
        with pytest.raises(ParameterError):
            count_Hk(1, 3)
        with pytest.raises(ParameterError):
            count_Hk(3, -1)


class TestEnumerate:
    """Tests for the lexicographic stream"""

    @pytest.mark.parametrize("k,B", [(3, 3), (4, 2)])
    def test_each_table_once(self, k, B):
        """The stream has count_Hk distinct tables with the right margins"""
        tables = list(enumerate_Hk(k, B))
        assert len(tables) == count_Hk(k, B)
        assert len(set(tables)) == len(tables)
        assert all(table.B == B and table.k == k for table in tables)

    def test_lexicographic_order(self):
        """Rows come out in lexicographic order"""
        tables = list(enumerate_Hk(3, 2))
        assert tables[0].entries == ((0, 0, 2), (0, 2, 0), (2, 0, 0))
        assert [t.entries for t in tables] == sorted(t.entries for t in tables)

    def test_budget(self):
        """H_3(20) does not fit a budget of 1000"""
        with pytest.raises(BudgetExceededError) as excinfo:
            list(enumerate_Hk(3, 20, budget=1000))
        assert excinfo.value.estimated == 26796
        assert excinfo.value.allowed == 1000

    def test_check_budget_returns_count(self):
        """Within budget the exact count comes back"""
        assert check_budget(3, 2, budget=21) == 21

    def test_chunks(self):
        """Chunks have shape (m, k, k) and cover the set"""
        chunks = list(iter_table_chunks(3, 2, chunk_size=10))
        assert [chunk.shape[0] for chunk in chunks] == [10, 10, 1]
        stacked = np.concatenate(chunks)
        assert np.all(stacked.sum(axis=1) == 2)
        assert np.all(stacked.sum(axis=2) == 2)

    def test_row_choices(self):
        """Rows respect the caps and the total"""
        rows = list(row_choices((1, 2, 0), 2))
        assert rows == [(0, 2, 0), (1, 1, 0)]


class TestMarginTable:
    """Tests for the table entity"""

    def test_rejects_bad_margins(self):
        """Unequal margins are rejected"""
        with pytest.raises(ValueError):
            MarginTable.from_rows([[1, 0], [1, 0]])

    def test_chi_square_of_permutation(self):
        """A 3 x 3 permutation table has |X|^2 = 6"""
        table = MarginTable.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert table.chi_square() == pytest.approx(6.0)
        assert table.bracket() == pytest.approx(2.0 / 3.0)
        assert table.n == 3

    def test_hash_is_stable(self):
        """Equal tables share a digest"""
        a = MarginTable.from_rows([[2, 0], [0, 2]])
        b = MarginTable(entries=((2, 0), (0, 2)))
        assert a == b
        assert a.table_hash() == b.table_hash()
        assert len(a.table_hash()) == 16
