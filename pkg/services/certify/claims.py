"""
Certified inequalities for the rate function family.

    psi(t) >= 2 log(1+2t)/(1+2t)      for t >= 0
    g_k(b) >= 0                       for -1 <= b <= (k-2)/2
    M_k(b) >= 0                       for 0 <= b <= k-1
"""
import logging
import math
from typing import List, Optional

import numpy as np

from entities.certificate import Certificate, CombineRule, Verdict
from services.errors import ParameterError
from services.interval.enclosures import (
    SERIES_CUTOFF,
    TAIL_LIMIT_S,
    m_prime_range,
    m_second_range,
    psi_lower_margin,
)
from services.interval.interval import Interval
from services.interval.roots import RootBracket, bracket_root
from services.certify.prover import AdaptiveProver, ProverConfig, composite
from services.scalar_fn.rate_functions import concave_interval_closed_form, mk_endpoint_values

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

MIN_T_MAX = 10.0
ROOT_TOL = 1e-9


def _prover(config: Optional[ProverConfig], min_width: float = 0.0) -> AdaptiveProver:
    config = config or ProverConfig()
    if min_width > config.min_width:
        config = config.model_copy(update={'min_width': min_width})
    return AdaptiveProver(config)


def verify_psi_lower(t_max: float = 1e6, tol: float = 1e-12,
                     config: Optional[ProverConfig] = None) -> Certificate:
    """
    Certify psi(t) >= 2 log(1+2t)/(1+2t) on [0, inf).

    Zones:
        origin  [0, 1/8]      psi from its series with remainder, one cell
        body    [1/8, t_max]  adaptive bisection of the margin
        tail    [t_max, inf)  via s = 1/(1+t), bisection on [s_c, s_max] and
                              the limit bound L (1 - 1/(2-s_c)) - 1 - log 2/(2-s_c)
                              on [0, s_c]

    Args:
        t_max: Start of the tail zone, at least 10
        tol: Smallest cell width before a cell is declared open
        config: Prover limits

    Returns:
        Composite certificate with one child per zone

    Raises:
        ParameterError: If t_max < 10
    """
    if not t_max >= MIN_T_MAX or math.isinf(t_max):
        raise ParameterError(f"t_max must be finite and at least {MIN_T_MAX}, got {t_max}")
    logger.info(f"Attempting to verify the psi lower bound with t_max={t_max}")
    prover = _prover(config, tol)

    origin = prover.prove('psi_lower.origin', Interval(0.0, SERIES_CUTOFF), ['psi_lower_series'])
    body = prover.prove('psi_lower.body', Interval(SERIES_CUTOFF, t_max), ['psi_lower_margin'])

    # Upper end of the tail zone in s, rounded up so it covers t >= t_max
    s_max = (Interval.point(1.0) / (Interval.point(1.0) + Interval.point(t_max))).hi
    s_cut = min(TAIL_LIMIT_S, 0.5 * s_max)
    tail = prover.prove('psi_lower.tail', Interval(s_cut, s_max), ['psi_lower_tail'])
    tail_limit = prover.prove('psi_lower.tail_limit', Interval(0.0, s_cut), ['psi_lower_tail_limit'])

    certificate = composite(
        'psi_lower', [origin, body, tail, tail_limit],
        parameters={'t_max': float(t_max), 'tol': float(tol)},
        assumptions=[
            "t = (1-s)/s maps [t_max, inf) onto (0, 1/(1+t_max)]; the tail margin is divided by 2s > 0",
            "s = 0 corresponds to t = inf and is covered by the limit bound",
        ],
    )
    certificate.domain = (0.0, math.inf)
    certificate.values['margin_at_t1'] = psi_lower_margin(Interval.point(1.0)).to_tuple()
    logger.info(f"Successfully finished psi lower bound: {certificate.verdict.value}")
    return certificate


def verify_gk_nonneg(k: int, b_max: Optional[float] = None,
                     config: Optional[ProverConfig] = None) -> Certificate:
    """
    Certify g_k(b) >= 0 on [-1, b_max] through g_k(b) = b^2 (psi(b)/2 - rho_k).

    On [0, b_max] cells are first tried with the chain
    psi/2 >= log(1+2b)/(1+2b) >= rho_k and otherwise with the direct margin;
    the negative branch [-1, 0] (psi >= 1 there) uses the direct margin.

    Args:
        k: Table size, >= 3
        b_max: Right end, defaults to (k-2)/2

    Returns:
        Composite certificate with children for the two branches
    """
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    if b_max is None:
        b_max = (k - 2) / 2.0
    if not (0.0 < b_max <= k - 1):
        raise ParameterError(f"b_max must lie in (0, {k - 1}], got {b_max}")
    logger.info(f"Attempting to verify g_k >= 0 for k={k} on [-1, {b_max}]")
    prover = _prover(config)
    params = {'k': k}

    positive = prover.prove('gk_nonneg.positive', Interval(0.0, b_max),
                            ['half_psi_chain', 'half_psi_margin'], params)
    negative = prover.prove('gk_nonneg.negative', Interval(-1.0, 0.0), ['half_psi_margin'], params)
    certificate = composite(
        'gk_nonneg', [positive, negative], parameters={'k': k, 'b_max': float(b_max)},
        assumptions=["g_k(b) = b^2 (psi(b)/2 - rho_k); a positive factor gives g_k >= 0, equality only at b = 0"],
    )
    certificate.domain = (-1.0, float(b_max))
    return certificate


def _record_bracket(certificate: Certificate, name: str, bracket: RootBracket) -> None:
    certificate.values[name] = bracket.enclosure.to_tuple()


def _curvature_structure(k: int, brackets: List[RootBracket], prover: AdaptiveProver) -> Certificate:
    """Sign pattern of M_k'': positive, negative on (b_k, b_k'), positive."""
    k1 = float(k - 1)
    params = {'k': k, 'r': 1}
    lower, upper = brackets
    children = [
        prover.prove('mk_nonneg.convex_left', Interval(0.0, lower.enclosure.lo), ['mk_curvature'], params),
        prover.prove('mk_nonneg.concave_middle', Interval(lower.enclosure.hi, upper.enclosure.lo),
                     ['mk_curvature_negative'], params),
        prover.prove('mk_nonneg.convex_right', Interval(upper.enclosure.hi, k1), ['mk_curvature'], params),
    ]
    return composite('mk_nonneg.curvature_signs', children, parameters=params)


def _analytic_route(k: int, prover: AdaptiveProver) -> Certificate:
    k1 = float(k - 1)
    params = {'k': k, 'r': 1}
    curvature = lambda X: m_second_range(X, 1, k)
    brackets = bracket_root(curvature, Interval(0.0, k1), tol=ROOT_TOL)
    closed_form = concave_interval_closed_form(k)

    roots = Certificate(claim='mk_nonneg.concavity_roots', parameters=params)
    roots.verdict = Verdict.VERIFIED if all(b.certified for b in brackets) else Verdict.INCONCLUSIVE
    for index, bracket in enumerate(brackets):
        _record_bracket(roots, f'root_{index}', bracket)
    if closed_form is not None:
        roots.values['closed_form'] = closed_form
    roots.assumptions.append(
        "M_k''(b) = 0 is the quadratic 2(1+b)(k1-b) = k1/rho_k, so it has at most two roots"
    )
    if len(brackets) not in (0, 2):
        roots.verdict = Verdict.INCONCLUSIVE
        roots.notes.append(f"expected 0 or 2 sign changes of M_k'', found {len(brackets)}")
    children = [roots]

    if not brackets:
        convex = prover.prove('mk_nonneg.convex', Interval(0.0, k1), ['mk_curvature'], params)
        convex.assumptions.append("M_k(0) = M_k'(0) = 0, so M_k'' > 0 gives M_k >= 0")
        children.append(convex)
        route = 'convex'
    elif len(brackets) == 2 and roots.verdict is Verdict.VERIFIED:
        upper = brackets[1].enclosure
        slope_at_upper = m_prime_range(upper, 1, k)
        roots.values['b_k'] = brackets[0].enclosure.to_tuple()
        roots.values['b_k_prime'] = upper.to_tuple()
        roots.values['slope_at_b_k_prime'] = slope_at_upper.to_tuple()
        if slope_at_upper.lo > 0.0:
            monotone = prover.prove('mk_nonneg.monotone', Interval(0.0, k1), ['mk_slope'], params,
                                    boundary_rule='mk_slope_origin')
            monotone.assumptions.append("M_k(0) = 0 and M_k' >= 0 give M_k >= 0")
            children.append(monotone)
            route = 'monotone'
        else:
            children.append(_curvature_structure(k, brackets, prover))
            children.append(_interior_minimum(k, upper, prover))
            route = 'interior_minimum'
    else:
        route = 'undetermined'

    certificate = composite('mk_nonneg.analytic', children, parameters={'k': k, 'route': route})
    for child in children:
        certificate.values.update(child.values)
    return certificate


def _interior_minimum(k: int, upper: Interval, prover: AdaptiveProver) -> Certificate:
    """
    For k >= 6: M_k'(k1-2) < 0 < M_k'(k1-1) places b* in (k1-2, k1-1), and the
    tangent at k1-1 gives M_k(b*) >= M_k(k1-1) - M_k'(k1-1) > 0.
    """
    k1 = k - 1
    params = {'k': k, 'r': 1}
    signs = prover.check_points(
        'mk_nonneg.slope_signs',
        [float(k1 - 2), float(k1 - 1)],
        ['mk_slope_negative', 'mk_slope'],
        params,
    )
    linear = prover.check_points('mk_nonneg.linear_bound', [float(k1 - 1)], ['mk_linear_bound'], params)
    linear.values['closed_form'] = (mk_endpoint_values(k).linear_bound,) * 2

    search = Interval(max(float(k1 - 2), upper.hi), float(k1 - 1))
    slope = lambda X: m_prime_range(X, 1, k)
    minimiser = [b for b in bracket_root(slope, search, tol=ROOT_TOL) if b.certified]
    if len(minimiser) == 1:
        signs.values['b_star'] = minimiser[0].enclosure.to_tuple()

    certificate = composite(
        'mk_nonneg.interior_minimum', [signs, linear], parameters=params,
        assumptions=[
            "M_k' > 0 on (0, b_k], M_k' decreasing on I_k and increasing after b_k', so "
            "min M_k = min(M_k(0), M_k(b*)) with b* the zero of M_k' beyond b_k'",
            "convexity on [b_k', k1] puts M_k above its tangent at k1-1",
        ],
    )
    certificate.values.update(signs.values)
    return certificate


def verify_Mk_nonneg(k: int, config: Optional[ProverConfig] = None) -> Certificate:
    """
    Certify M_k(b) >= 0 on [0, k-1] by two independent routes.

    The analytic route follows the curvature of M_k: convex (I_k empty),
    monotone (M_k' > 0 at b_k'), or interior minimum (k >= 6). The direct
    route bisects [0, k-1] with mean-value enclosures of M_k. The parent
    combines them with ANY and records both verdicts.

    Args:
        k: Table size, >= 3

    Returns:
        Certificate with children 'mk_nonneg.analytic' and 'mk_nonneg.direct'
    """
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    logger.info(f"Attempting to verify M_k >= 0 for k={k}")
    prover = _prover(config)
    params = {'k': k, 'r': 1}

    analytic = _analytic_route(k, prover)
    direct = prover.prove('mk_nonneg.direct', Interval(0.0, float(k - 1)), ['mk_value'], params,
                          boundary_rule='mk_value_origin')
    certificate = composite('mk_nonneg', [analytic, direct], combine=CombineRule.ANY, parameters={'k': k})
    certificate.domain = (0.0, float(k - 1))
    certificate.values.update(analytic.values)
    if analytic.verdict is not direct.verdict:
        certificate.notes.append(
            f"routes disagree: analytic {analytic.verdict.value}, direct {direct.verdict.value}"
        )
    logger.info(f"Successfully finished M_k >= 0 for k={k}: {certificate.verdict.value}")
    return certificate


def interval_is_empty(k: int) -> bool:
    """Closed-form test for an empty concavity interval I_k."""
    return concave_interval_closed_form(k) is None


def linear_bound_nonneg(k: int) -> bool:
    """(k1-3) log(k1) >= 0, the sign of the linear lower bound."""
    k1 = k - 1
    return (k1 - 3) * np.log(k1) >= 0.0
