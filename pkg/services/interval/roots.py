"""
Certified bracketing of sign changes by interval bisection.
"""
import logging
from typing import Callable, List, NamedTuple, Optional

from services.errors import DomainError
from services.interval.interval import Interval

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

DEFAULT_ROOT_TOL = 1e-9
MAX_ROOT_DEPTH = 60


class RootBracket(NamedTuple):
    enclosure: Interval
    certified: bool     # f has strictly opposite signs at the two ends


def _sign(f: Callable[[Interval], Interval], x: float) -> int:
    """+1 / -1 when the enclosure of f(x) is strictly signed, else 0."""
    value = f(Interval.point(x))
    if value.lo > 0.0:
        return 1
    if value.hi < 0.0:
        return -1
    return 0


def _candidate_cells(f: Callable[[Interval], Interval], domain: Interval, tol: float,
                     max_depth: int) -> List[Interval]:
    """Cells of width <= tol (or at max depth) where f is not excluded from 0."""
    candidates = []
    stack = [(domain, 0)]
    while stack:
        cell, depth = stack.pop()
        value = f(cell)
        if value.lo > 0.0 or value.hi < 0.0:
            continue
        if cell.width <= tol or depth >= max_depth:
            candidates.append(cell)
            continue
        left, right = cell.split()
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    candidates.sort(key=lambda c: c.lo)
    return candidates


def _merge(cells: List[Interval]) -> List[Interval]:
    clusters: List[Interval] = []
    for cell in cells:
        if clusters and clusters[-1].hi >= cell.lo:
            clusters[-1] = Interval(clusters[-1].lo, max(clusters[-1].hi, cell.hi))
        else:
            clusters.append(cell)
    return clusters


def _refine(f: Callable[[Interval], Interval], cluster: Interval, tol: float) -> Optional[Interval]:
    """Shrink a cluster with point sign evaluations; None if its ends are not opposite."""
    lo, hi = cluster.lo, cluster.hi
    s_lo, s_hi = _sign(f, lo), _sign(f, hi)
    if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
        return None
    while hi - lo > tol:
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        s_mid = _sign(f, mid)
        if s_mid == 0:
            break
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return Interval(lo, hi)


def bracket_root(f: Callable[[Interval], Interval], domain: Interval,
                 tol: float = DEFAULT_ROOT_TOL, max_depth: int = MAX_ROOT_DEPTH) -> List[RootBracket]:
    """
    Bracket every sign change of f on a domain.

    Cells whose enclosure excludes 0 are discarded; the rest are bisected down
    to width tol and merged into clusters. A cluster is certified when f has
    strictly opposite signs at its two ends, which implies a root inside.

    Args:
        f: Interval enclosure of the function (an Enclosure or any callable)
        domain: Search interval
        tol: Target width of each bracket
        max_depth: Bisection depth limit

    Returns:
        Disjoint brackets in increasing order; an empty list when f is
        certified to have no zero on the domain

    Raises:
        DomainError: If tol is not positive
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    logger.debug(f"Bracketing roots on {domain} with tol {tol}")
    clusters = _merge(_candidate_cells(f, domain, tol, max_depth))

    brackets = []
    for cluster in clusters:
        refined = _refine(f, cluster, tol)
        if refined is None:
            logger.warning(f"Sign change not certified on {cluster}")
            brackets.append(RootBracket(cluster, False))
        else:
            brackets.append(RootBracket(refined, True))
    return brackets
