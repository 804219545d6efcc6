"""
Two-value reduction of G_k.

At an interior critical point of G_k on {sum u = 0} every coordinate solves
g_k'(s) = theta. Since g_k' is concave there are at most two solutions, one
a_theta in (-1, 0] and one b_theta on the decreasing branch. With r
coordinates at b_theta the constraint reads (k-r) a + r b = 0.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from entities.certificate import Verdict
from entities.two_value import AdmissiblePoint, TwoValueRow, TwoValueTable
from services.errors import ParameterError
from services.interval.enclosures import g_prime_range
from services.interval.interval import Interval
from services.certify.prover import AdaptiveProver, ProverConfig
from services.scalar_fn.rate_functions import g_k, g_k_prime, m_rk, rho_k

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

THETA_POINTS = 512
THETA_RANGE = (-8.0, 0.0)
BRACKET_TOL = 1e-10
# Smallest |theta| on the grid, relative to the far end
_GRID_DECADES = 1e-8
_EDGE = 1e-15


def theta_grid(theta_range: Tuple[float, float] = THETA_RANGE, points: int = THETA_POINTS) -> np.ndarray:
    """Increasing grid, log-spaced in |theta|; includes 0 when the range ends there."""
    lo, hi = theta_range
    if not (lo < hi <= 0.0):
        raise ParameterError(f"theta range must satisfy lo < hi <= 0, got {theta_range}")
    if points < 2:
        raise ParameterError("theta grid needs at least two points")
    if hi == 0.0:
        grid = np.append(-np.geomspace(-lo, -lo * _GRID_DECADES, points - 1), 0.0)
    else:
        grid = -np.geomspace(-lo, -hi, points)
    return grid


def _turning_point(k: int) -> float:
    """Where g_k'' vanishes; g_k' increases before it and decreases after."""
    return 1.0 / (2.0 * rho_k(k)) - 1.0


def _solve_a(theta: float, k: int) -> float:
    if theta == 0.0:
        return 0.0
    return brentq(lambda s: g_k_prime(s, k) - theta, -1.0 + _EDGE, 0.0, xtol=1e-15)


def _solve_b(theta: float, k: int) -> Optional[float]:
    """Root on the decreasing branch, None when g_k'(k-1) > theta."""
    if theta == 0.0:
        return 0.0
    top = float(k - 1)
    if g_k_prime(top, k) > theta:
        return None
    return brentq(lambda s: g_k_prime(s, k) - theta, _turning_point(k), top, xtol=1e-13)


def _sign_at(x: float, theta: float, k: int) -> int:
    value = g_prime_range(Interval.point(x), k) - theta
    if value.lo > 0.0:
        return 1
    if value.hi < 0.0:
        return -1
    return 0


def _certify(root: float, theta: float, k: int, increasing: bool,
             lower: float, upper: float, tol: float) -> Optional[Tuple[float, float]]:
    """An interval of width <= 2 tol around root with certified end signs."""
    left = max(root - tol, lower)
    right = min(root + tol, upper)
    expected = (-1, 1) if increasing else (1, -1)
    if (_sign_at(left, theta, k), _sign_at(right, theta, k)) == expected:
        return left, right
    return None


def _row(theta: float, k: int, r: int, tol: float) -> TwoValueRow:
    if theta == 0.0:
        return TwoValueRow(theta=0.0, a_lo=0.0, a_hi=0.0, b_lo=0.0, b_hi=0.0,
                           g_value=0.0, balance=0.0, status=Verdict.VERIFIED)

    a = _solve_a(theta, k)
    a_box = _certify(a, theta, k, True, -1.0 + _EDGE, 0.0, tol)
    row = TwoValueRow(theta=theta)
    if a_box is not None:
        row.a_lo, row.a_hi = a_box

    b = _solve_b(theta, k)
    b_box = None
    if b is not None:
        b_box = _certify(b, theta, k, False, _turning_point(k), float(k - 1), tol)
        if b_box is not None:
            row.b_lo, row.b_hi = b_box
            if a_box is not None:
                row.g_value = float(r * g_k(b, k) + (k - r) * g_k(a, k))
                row.balance = float((k - r) * a + r * b)

    certified = a_box is not None and (b is None or b_box is not None)
    row.status = Verdict.VERIFIED if certified else Verdict.INCONCLUSIVE
    return row


def _balance(theta: float, k: int, r: int) -> float:
    return (k - r) * _solve_a(theta, k) + r * _solve_b(theta, k)


def _admissible(theta: float, k: int, r: int) -> AdmissiblePoint:
    a = _solve_a(theta, k)
    b = _solve_b(theta, k)
    # b is pinned to the balance so that M_{r,k} is evaluated on its own domain
    b_bal = min(max(-(k - r) * a / r, 0.0), (k - r) / r)
    return AdmissiblePoint(
        theta=theta, a=a, b=b,
        g_value=float(r * g_k(b, k) + (k - r) * g_k(a, k)),
        m_value=m_rk(b_bal, r, k).value,
    )


def _admissible_points(rows: List[TwoValueRow], k: int, r: int) -> List[AdmissiblePoint]:
    points = []
    if any(row.theta == 0.0 for row in rows):
        points.append(AdmissiblePoint(theta=0.0, a=0.0, b=0.0, g_value=0.0, m_value=0.0))
    solved = [row for row in rows if row.balance is not None and row.theta != 0.0]
    for left, right in zip(solved, solved[1:]):
        if left.balance == 0.0:
            points.append(_admissible(left.theta, k, r))
        elif left.balance * right.balance < 0.0:
            theta = brentq(_balance, left.theta, right.theta, args=(k, r), xtol=1e-14)
            points.append(_admissible(theta, k, r))
    return sorted(points, key=lambda p: p.theta)


def two_value_reduce(k: int, r: int, theta_range: Tuple[float, float] = THETA_RANGE,
                     points: int = THETA_POINTS, tol: float = BRACKET_TOL,
                     config: Optional[ProverConfig] = None) -> TwoValueTable:
    """
    Tabulate the two-value candidates over a theta grid.

    Args:
        k: Table size, >= 3
        r: Number of coordinates at b_theta, 1 <= r <= k-2
        theta_range: (lo, hi) with lo < hi <= 0
        points: Grid size
        tol: Half width of the certified root brackets

    Returns:
        TwoValueTable with one row per theta, the admissible points where
        (k-r) a + r b changes sign, and a certificate that g_k' is concave
    """
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    if r < 1 or r > k - 2:
        raise ParameterError(f"r must lie in [1, {k - 2}], got {r}")

    rows = [_row(float(theta), k, r, tol) for theta in theta_grid(theta_range, points)]
    table = TwoValueTable(k=k, r=r, rows=rows)
    table.admissible = _admissible_points(rows, k, r)
    table.concavity = AdaptiveProver(config).prove(
        'g_prime_concave', Interval(-1.0, float(k - 1)), ['gk_third_negative'], params={'k': k},
    )
    open_rows = len(rows) - len(table.bracketed_rows())
    if open_rows:
        logger.warning(f"{open_rows} theta rows left unbracketed for k={k}, r={r}")
    logger.info(f"Two-value reduction k={k}, r={r}: {len(table.admissible)} admissible points")
    return table
