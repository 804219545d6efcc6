"""
Poisson point and tail bounds in log space.

For W ~ Poisson(lambda) and ell = lambda(1+u):
    log(sqrt(2 pi lambda) P{W=ell}) = -lambda h(u) - log(1+u)/2 + r,
    P{W=ell} <= exp(-lambda h(u)),
    P{|W-lambda| >= lambda w} <= 2 exp(-lambda h(w)).
"""
import logging
import math
from typing import NamedTuple, Tuple

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlogy

from services.errors import DomainError
from services.scalar_fn.rate_functions import h

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# Guards lambda(1 +- w) against landing a rounding error away from an integer
_LATTICE_SLACK = 1e-9


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0.0 or math.isinf(lam):
        raise DomainError(f"lambda must be positive and finite, got {lam}")
    return lam


def _check_ell(ell) -> int:
    if int(ell) != ell or ell < 0:
        raise DomainError(f"ell must be a nonnegative integer, got {ell}")
    return int(ell)


def poisson_log_pmf(lam: float, ell: int) -> float:
    """
    Exact log P{W = ell} via log-gamma.

    Args:
        lam: Poisson mean, > 0
        ell: Support point, a nonnegative integer

    Returns:
        -lam + ell log(lam) - log(ell!)
    """
    lam = _check_lambda(lam)
    ell = _check_ell(ell)
    return float(-lam + xlogy(ell, lam) - gammaln(ell + 1.0))


class ExpansionTerms(NamedTuple):
    rate_term: float          # -lambda h(u)
    log_term: float           # -log(1+u)/2
    remainder: float          # exact r from the identity
    stirling_bracket: Tuple[float, float]
    remainder_bound: float    # 1/(12 ell) + 1/(12 lambda)


def expansion_terms(lam: float, ell: int) -> ExpansionTerms:
    """
    Split log(sqrt(2 pi lambda) P{W=ell}) into its local-expansion terms.

    By Stirling, ell! = sqrt(2 pi ell) ell^ell e^-ell e^(r_ell) with
    1/(12 ell + 1) <= r_ell <= 1/(12 ell), so the remainder equals -r_ell.

    Args:
        lam: Poisson mean, > 0
        ell: Support point, >= 1

    Returns:
        ExpansionTerms with the exact remainder, the tight Stirling bracket
        and the widened bound 1/(12 ell) + 1/(12 lambda)

    Raises:
        DomainError: If ell = 0 (log(1+u) is infinite there)
    """
    lam = _check_lambda(lam)
    ell = _check_ell(ell)
    if ell == 0:
        raise DomainError("expansion terms need ell >= 1")
    u = ell / lam - 1.0
    rate_term = -lam * h(u)
    log_term = -0.5 * math.log1p(u)
    total = 0.5 * math.log(2.0 * math.pi * lam) + poisson_log_pmf(lam, ell)
    remainder = total - rate_term - log_term
    bracket = (-1.0 / (12.0 * ell), -1.0 / (12.0 * ell + 1.0))
    bound = 1.0 / (12.0 * ell) + 1.0 / (12.0 * lam)
    return ExpansionTerms(float(rate_term), float(log_term), float(remainder), bracket, bound)


class GaussianExpansion(NamedTuple):
    residual: float           # log(sqrt(2 pi lambda) pmf) + lambda u^2 / 2
    bound: float              # (2/3) lambda |u|^3 + |u| + 1/(12 ell)


def gaussian_expansion_terms(lam: float, ell: int) -> GaussianExpansion:
    """
    Second form of the local expansion, -lambda u^2/2 + O(|u| + lambda |u|^3).

    For |u| <= 1/2 the third derivative of h is bounded by 4, which gives
    |h(u) - u^2/2| <= (2/3)|u|^3 and |log(1+u)|/2 <= |u|.

    Raises:
        DomainError: If ell = 0 or |u| > 1/2
    """
    lam = _check_lambda(lam)
    ell = _check_ell(ell)
    u = ell / lam - 1.0
    if ell == 0 or abs(u) > 0.5:
        raise DomainError(f"Gaussian expansion needs ell >= 1 and |u| <= 1/2, got u={u}")
    total = 0.5 * math.log(2.0 * math.pi * lam) + poisson_log_pmf(lam, ell)
    residual = total + 0.5 * lam * u * u
    bound = (2.0 / 3.0) * lam * abs(u) ** 3 + abs(u) + 1.0 / (12.0 * ell)
    return GaussianExpansion(float(residual), float(bound))


def poisson_pmf_upper(lam: float, ell: int) -> float:
    """
    Upper bound exp(-lambda h(u)) on P{W = ell}, u = ell/lambda - 1.

    The bound follows from ell! >= ell^ell e^-ell and is exact at ell = 0.
    """
    lam = _check_lambda(lam)
    ell = _check_ell(ell)
    u = max(ell / lam - 1.0, -1.0)
    return float(math.exp(-lam * h(u)))


def poisson_tail_upper(lam: float, w: float) -> float:
    """
    Upper bound 2 exp(-lambda h(w)) on P{|W - lambda| >= lambda w}.

    The lower tail uses h(-w) >= h(w) on [0, 1] and is empty for w > 1.
    """
    lam = _check_lambda(lam)
    if w < 0:
        raise DomainError(f"w must be nonnegative, got {w}")
    return float(2.0 * math.exp(-lam * h(float(w))))


def poisson_tail_exact(lam: float, w: float) -> float:
    """
    Exact P{W <= lambda(1-w)} + P{W >= lambda(1+w)}.

    Args:
        lam: Poisson mean
        w: Relative deviation, >= 0

    Returns:
        The two-sided tail probability (1 when w = 0)
    """
    lam = _check_lambda(lam)
    if w < 0:
        raise DomainError(f"w must be nonnegative, got {w}")
    if w == 0:
        return 1.0
    upper_start = math.ceil(lam * (1.0 + w) - _LATTICE_SLACK)
    upper = stats.poisson.sf(upper_start - 1, lam)
    lower_end = lam * (1.0 - w)
    if lower_end < 0:
        lower = 0.0
    else:
        lower = stats.poisson.cdf(math.floor(lower_end + _LATTICE_SLACK), lam)
    return float(min(1.0, lower + upper))


def chi2_exp_moment(a: float, R: int) -> float:
    """
    E exp(a chi2_R) = (1 - 2a)^(-R/2), or +inf when a >= 1/2.

    Args:
        a: Exponent multiplier
        R: Degrees of freedom, >= 1
    """
    if R < 1:
        raise DomainError(f"R must be at least 1, got {R}")
    if a >= 0.5:
        return math.inf
    return float(np.power(1.0 - 2.0 * a, -R / 2.0))
