"""
Enumeration and counting of H_k(B), the k x k nonnegative integer tables
whose rows and columns all sum to B.

Tables are produced row by row in lexicographic order. A row prefix is
dropped as soon as the remaining column residuals cannot absorb the rest of
the row total, and the last row is forced by the residuals.
"""
import logging
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from entities.margin_table import MarginTable
from services.errors import BudgetExceededError, ParameterError

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

ENUMERATION_BUDGET = 100_000_000
CHUNK_SIZE = 65_536

Row = Tuple[int, ...]


def _check(k: int, B: int) -> None:
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    if B < 0:
        raise ParameterError(f"B must be nonnegative, got {B}")


def row_choices(caps: Sequence[int], total: int) -> Iterator[Row]:
    """
    Vectors x with 0 <= x_j <= caps_j and sum x = total, lexicographically.
    """
    width = len(caps)
    room = [0] * (width + 1)
    for j in range(width - 1, -1, -1):
        room[j] = room[j + 1] + caps[j]
    if total > room[0]:
        return
    row = [0] * width

    def fill(j: int, remaining: int) -> Iterator[Row]:
        if j == width - 1:
            row[j] = remaining
            yield tuple(row)
            return
        for value in range(max(0, remaining - room[j + 1]), min(caps[j], remaining) + 1):
            row[j] = value
            yield from fill(j + 1, remaining - value)

    yield from fill(0, total)


def count_Hk(k: int, B: int) -> int:
    """
    |H_k(B)| by dynamic programming over sorted column residuals.

    Args:
        k: Table size, >= 2
        B: Common margin, >= 0

    Returns:
        Exact number of tables
    """
    _check(k, B)

    @lru_cache(maxsize=None)
    def count(rows_left: int, residual: Row) -> int:
        if rows_left == 1:
            return 1
        total = 0
        for row in row_choices(residual, B):
            rest = tuple(sorted(r - x for r, x in zip(residual, row)))
            total += count(rows_left - 1, rest)
        return total

    return count(k, (B,) * k)


def check_budget(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> int:
    """
    Count H_k(B) and refuse enumerations beyond the budget.

    Returns:
        The exact count

    Raises:
        BudgetExceededError: If the count exceeds the budget
    """
    count = count_Hk(k, B)
    if count > budget:
        raise BudgetExceededError(
            f"H_{k}({B}) has {count} tables, budget is {budget}", estimated=count, allowed=budget,
        )
    return count


def _iter_rows(k: int, B: int) -> Iterator[List[Row]]:
    rows: List[Row] = []

    def extend(residual: Row, rows_left: int) -> Iterator[List[Row]]:
        if rows_left == 1:
            rows.append(residual)
            yield rows
            rows.pop()
            return
        for row in row_choices(residual, B):
            rows.append(row)
            yield from extend(tuple(r - x for r, x in zip(residual, row)), rows_left - 1)
            rows.pop()

    yield from extend((B,) * k, k)


def iter_table_chunks(k: int, B: int, chunk_size: int = CHUNK_SIZE,
                      budget: int = ENUMERATION_BUDGET) -> Iterator[np.ndarray]:
    """
    Stream H_k(B) as integer arrays of shape (m, k, k), m <= chunk_size.

    Raises:
        BudgetExceededError: If |H_k(B)| exceeds the budget
    """
    _check(k, B)
    total = check_budget(k, B, budget)
    logger.debug(f"Enumerating {total} tables of H_{k}({B})")
    buffer = np.empty((min(chunk_size, total), k, k), dtype=np.int64)
    filled = 0
    for rows in _iter_rows(k, B):
        buffer[filled] = rows
        filled += 1
        if filled == buffer.shape[0]:
            yield buffer.copy()
            filled = 0
    if filled:
        yield buffer[:filled].copy()


def enumerate_Hk(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> Iterator[MarginTable]:
    """
    Stream every table of H_k(B) exactly once, in lexicographic row order.

    Args:
        k: Table size, >= 2
        B: Common margin, >= 0
        budget: Largest count allowed

    Raises:
        BudgetExceededError: If |H_k(B)| exceeds the budget
    """
    _check(k, B)
    check_budget(k, B, budget)
    for rows in _iter_rows(k, B):
        yield MarginTable(entries=tuple(rows))
