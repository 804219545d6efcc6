"""
Exact finite-n quantities over H_k(B), n = kB.

    A_n(c)        = n^(k-1) k^(-2n) (1-1/k)^(-2nc) sum_l n!/prod l_ij! [1 - 2/k + sum (l_ij/n)^2]^(nc)
    P{Y in H_k}   with Y_ij independent Poisson(n/k^2)
    beta_n        = n^((2k-1)/2) P{Y in H_k}
    p_2(l)        = P{Y = l | Y in H_k}, proportional to 1/prod l_ij!

Every sum runs in log space over enumeration chunks.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from entities.margin_table import MarginTable
from entities.scan_result import (
    AnTerm,
    BoundChainResult,
    ScanQuantity,
    ScanResult,
    ScanRow,
    ShellCount,
    TailSumResult,
)
from services.errors import BudgetExceededError, ParameterError
from services.scalar_fn.rate_functions import h, rho_k, threshold_c
from services.tables.enumeration import ENUMERATION_BUDGET, enumerate_Hk, iter_table_chunks

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


class _LogSum:
    """Running log-sum-exp over chunks."""

    def __init__(self):
        self.value = -np.inf

    def add(self, log_terms: np.ndarray) -> None:
        if log_terms.size:
            self.value = float(np.logaddexp(self.value, logsumexp(log_terms)))


def _check(k: int, B: int) -> None:
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    if B < 1:
        raise ParameterError(f"B must be at least 1, got {B}")


def _flat_chunks(k: int, B: int, budget: int):
    for chunk in iter_table_chunks(k, B, budget=budget):
        yield chunk.reshape(chunk.shape[0], k * k).astype(float)


def _log_fact(flat: np.ndarray) -> np.ndarray:
    """log prod l_ij! per table."""
    return gammaln(flat + 1.0).sum(axis=1)


def _bracket(flat: np.ndarray, k: int, n: int) -> np.ndarray:
    return 1.0 - 2.0 / k + (flat * flat).sum(axis=1) / float(n) ** 2


def _chi_square(flat: np.ndarray, k: int, n: int) -> np.ndarray:
    return -n + (k * k / n) * (flat * flat).sum(axis=1)


def log_an(k: int, B: int, c: float, budget: int = ENUMERATION_BUDGET) -> float:
    """log A_n(c)."""
    _check(k, B)
    n = k * B
    total = _LogSum()
    log_n_fact = gammaln(n + 1.0)
    for flat in _flat_chunks(k, B, budget):
        total.add(log_n_fact - _log_fact(flat) + n * c * np.log(_bracket(flat, k, n)))
    prefactor = (k - 1) * math.log(n) - 2 * n * math.log(k) - 2 * n * c * math.log1p(-1.0 / k)
    return prefactor + total.value


def an_exact(k: int, B: int, c: float, budget: int = ENUMERATION_BUDGET) -> float:
    """
    A_n(c) at n = kB by exact enumeration.

    Args:
        k: Table size, >= 2
        B: Common margin, >= 1
        c: Rate parameter, >= 0
        budget: Largest |H_k(B)| allowed

    Returns:
        A_n(c)

    Raises:
        BudgetExceededError: If |H_k(B)| exceeds the budget
    """
    if c < 0:
        raise ParameterError(f"c must be nonnegative, got {c}")
    return math.exp(log_an(k, B, c, budget))


def log_prob_Y_in_Hk(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> float:
    _check(k, B)
    n = k * B
    total = _LogSum()
    for flat in _flat_chunks(k, B, budget):
        total.add(-_log_fact(flat))
    return -n + n * math.log(n / k ** 2) + total.value


def prob_Y_in_Hk(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> float:
    """P{Y in H_k} for independent Y_ij ~ Poisson(n/k^2)."""
    return math.exp(log_prob_Y_in_Hk(k, B, budget))


def beta_n(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> float:
    """n^((2k-1)/2) P{Y in H_k}."""
    n = k * B
    return math.exp(0.5 * (2 * k - 1) * math.log(n) + log_prob_Y_in_Hk(k, B, budget))


def _log_normaliser(k: int, B: int, budget: int) -> float:
    total = _LogSum()
    for flat in _flat_chunks(k, B, budget):
        total.add(-_log_fact(flat))
    return total.value


def cond_pmf_p2(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> Dict[MarginTable, float]:
    """
    The conditional law p_2 on H_k(B).

    Returns:
        Mapping table -> probability, in enumeration order
    """
    _check(k, B)
    log_z = _log_normaliser(k, B, budget)
    return {
        table: math.exp(-table.log_factorial_product() - log_z)
        for table in enumerate_Hk(k, B, budget)
    }


def an_terms(k: int, B: int, budget: int = ENUMERATION_BUDGET) -> List[AnTerm]:
    """Per-table log multinomial weight and bracket value."""
    _check(k, B)
    log_n_fact = float(gammaln(k * B + 1.0))
    return [
        AnTerm(table=table, log_weight=log_n_fact - table.log_factorial_product(), bracket=table.bracket())
        for table in enumerate_Hk(k, B, budget)
    ]


def bound_chain_check(k: int, B: int, c: float, budget: int = ENUMERATION_BUDGET) -> BoundChainResult:
    """
    A_n(c), the bracket bound and the exponential moment of |X|^2.

        bound1    = (1-1/k)^(-2nc) P_2 [bracket]^(nc) = P_2 (1 + |X|^2/(n(k-1)^2))^(nc)
        expmoment = P_2 exp(J_k |X|^2),  J_k = c/(k-1)^2

    The reported ratio A_n / bound1 is the empirical constant of the chain.
    """
    _check(k, B)
    if c < 0:
        raise ParameterError(f"c must be nonnegative, got {c}")
    n = k * B
    J = c / (k - 1) ** 2
    log_z = _log_normaliser(k, B, budget)
    bracket_sum = _LogSum()
    moment_sum = _LogSum()
    for flat in _flat_chunks(k, B, budget):
        log_p2 = -_log_fact(flat) - log_z
        bracket_sum.add(log_p2 + n * c * np.log(_bracket(flat, k, n)))
        moment_sum.add(log_p2 + J * _chi_square(flat, k, n))

    an = an_exact(k, B, c, budget)
    bound1 = math.exp(bracket_sum.value - 2 * n * c * math.log1p(-1.0 / k))
    expmoment = math.exp(moment_sum.value)
    result = BoundChainResult(k=k, B=B, c=c, an=an, bound1=bound1, expmoment=expmoment, ratio=an / bound1)
    if not result.chain_ordered():
        logger.warning(f"bound1 exceeds the exponential moment at k={k}, B={B}, c={c}")
    return result


def _shell_index(norm: np.ndarray, radius: float) -> np.ndarray:
    """b with 2^b radius < |u| <= 2^(b+1) radius, b >= 0."""
    b = np.ceil(np.log2(norm / radius)).astype(int) - 1
    b = np.where(np.ldexp(radius, b) >= norm, b - 1, b)
    return np.maximum(b, 0)


def _counting_order(n: int, b: int, k: int) -> float:
    """(n 2^b)^(k^2), inf when it overflows a double."""
    log_order = k * k * (math.log(n) + b * math.log(2.0))
    return math.exp(log_order) if log_order < 709.0 else math.inf


def tail_sum_check(k: int, B: int, c: float, delta: float,
                   budget: int = ENUMERATION_BUDGET) -> TailSumResult:
    """
    The exponent sum outside the ball |u| <= k delta against n^(-(2k-1)/2).

    With u_ij = l_ij k^2/n - 1 and eps0 = (rho_k - J_k)/k^2:

        lhs        = sum_{|u| > k delta} exp((n/k^2) sum_ij (J_k u_ij^2 - h(u_ij)))
        quadratic  = sum_{|u| > k delta} exp(-n eps0 |u|^2)
        shells     = sum_b #{shell b} exp(-n eps0 (2^b k delta)^2)

    lhs <= quadratic follows from the h inequality applied row by row.

    Raises:
        ParameterError: If c >= (k-1)log(k-1) or delta <= 0
    """
    _check(k, B)
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    if c >= threshold_c(k):
        raise ParameterError(f"c must be below (k-1)log(k-1) = {threshold_c(k):.6f}, got {c}")
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")

    n = k * B
    J = c / (k - 1) ** 2
    eps0 = (rho_k(k) - J) / k ** 2
    radius = k * delta
    lhs = _LogSum()
    quadratic = _LogSum()
    counts: Dict[int, int] = {}
    excluded = 0

    for flat in _flat_chunks(k, B, budget):
        u = flat * (k * k / n) - 1.0
        sq = (u * u).sum(axis=1)
        norm = np.sqrt(sq)
        outside = norm > radius
        excluded += int(np.count_nonzero(~outside))
        if not np.any(outside):
            continue
        u_out = u[outside]
        exponent = (n / k ** 2) * (J * u_out * u_out - np.asarray(h(u_out))).sum(axis=1)
        lhs.add(exponent)
        quadratic.add(-n * eps0 * sq[outside])
        shells, shell_counts = np.unique(_shell_index(norm[outside], radius), return_counts=True)
        for b, count in zip(shells, shell_counts):
            counts[int(b)] = counts.get(int(b), 0) + int(count)

    shell_rows = []
    shell_bound = 0.0
    for b in sorted(counts):
        term = counts[b] * math.exp(-n * eps0 * (math.ldexp(radius, b)) ** 2)
        shell_bound += term
        shell_rows.append(ShellCount(b=b, count=counts[b], order=_counting_order(n, b, k), bound_term=term))

    lhs_value = math.exp(lhs.value)
    tail_budget = n ** (-(2 * k - 1) / 2)
    return TailSumResult(
        k=k, B=B, c=c, delta=delta, epsilon0=eps0,
        lhs=lhs_value,
        quadratic_sum=math.exp(quadratic.value),
        shell_bound=shell_bound,
        budget=tail_budget,
        ratio=lhs_value / tail_budget,
        excluded=excluded,
        shells=shell_rows,
    )


def scan_row(quantity: ScanQuantity, k: int, B: int, c: Optional[float] = None,
             delta: Optional[float] = None, budget: int = ENUMERATION_BUDGET) -> ScanRow:
    """One row of a scan; only the columns of the quantity are filled."""
    quantity = ScanQuantity(quantity)
    row = ScanRow(n=k * B, B=B, c=c)
    if quantity is ScanQuantity.BETA:
        row.beta_n = beta_n(k, B, budget)
        return row
    if c is None:
        raise ParameterError(f"scan of {quantity.value} needs c")
    if quantity is ScanQuantity.AN:
        row.A_n = an_exact(k, B, c, budget)
    elif quantity is ScanQuantity.CHAIN:
        chain = bound_chain_check(k, B, c, budget)
        row.A_n, row.bound1, row.expmoment, row.ratio = chain.an, chain.bound1, chain.expmoment, chain.ratio
    elif quantity is ScanQuantity.TAILSUM:
        if delta is None:
            raise ParameterError("tailsum scan needs delta")
        tail = tail_sum_check(k, B, c, delta, budget)
        row.delta = delta
        row.tail_lhs = tail.lhs
        row.tail_quadratic = tail.quadratic_sum
        row.tail_shell_bound = tail.shell_bound
        row.tail_budget = tail.budget
    return row


def _summarise(result: ScanResult, tail_from_B: Optional[int]) -> None:
    values = result.values()
    if not values:
        return
    index = int(np.argmax(values))
    result.max_value = values[index]
    result.argmax_n = result.rows[index].n

    if tail_from_B is None:
        if len(values) - index >= 2:
            tail_from_B = result.rows[index].B
        else:
            tail_from_B = result.rows[len(values) // 2].B
    result.tail_from_B = tail_from_B
    tail = [(row.n, v) for row, v in zip(result.rows, values) if row.B >= tail_from_B]
    if len(tail) >= 2 and all(v > 0 for _, v in tail):
        ns, vs = zip(*tail)
        result.tail_slope = float(np.polyfit(np.array(ns, dtype=float), np.log(vs), 1)[0])


def an_scan(k: int, c: Optional[float], B_values: Sequence[int],
            quantity: ScanQuantity = ScanQuantity.AN, delta: Optional[float] = None,
            budget: int = ENUMERATION_BUDGET, tail_from_B: Optional[int] = None,
            workers: int = 1) -> ScanResult:
    """
    Scan a quantity over B with a trend summary.

    A budget overrun stops the scan; the rows computed so far are kept and the
    result is flagged partial.

    Args:
        k: Table size
        c: Rate (unused for beta)
        B_values: Margins to scan, in output order
        quantity: an, beta, tailsum or chain
        delta: Ball radius for tailsum
        tail_from_B: First B of the tail slope fit; defaults to the argmax
        workers: Threads evaluating rows; rows keep input order

    Returns:
        ScanResult with rows, max, argmax and tail slope of log(value)
    """
    quantity = ScanQuantity(quantity)
    result = ScanResult(quantity=quantity, k=k, c=c)
    logger.info(f"Attempting {quantity.value} scan for k={k}, c={c} over {len(B_values)} margins")

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = pool.map(lambda B: scan_row(quantity, k, B, c, delta, budget), B_values)
        try:
            for row in rows:
                result.rows.append(row)
        except BudgetExceededError as e:
            logger.warning(f"Scan stopped after {len(result.rows)} rows: {str(e)}")
            result.partial = True
            pool.shutdown(cancel_futures=True)

    _summarise(result, tail_from_B)
    logger.info(f"Successfully scanned {len(result.rows)} rows (partial={result.partial})")
    return result
