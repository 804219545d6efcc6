"""
Registry of evidence rules.

A rule maps a cell (and the certificate parameters) to an interval enclosure
together with the relation that enclosure must satisfy. Provers record the
rule name on every evidence cell, and replay looks it up here again.
"""
from typing import Callable, Dict, Mapping, NamedTuple

from entities.certificate import Relation
from services.errors import ParameterError
from services.interval.enclosures import (
    m_prime_range,
    m_range,
    m_second_range,
    g_third_range,
    half_psi_chain,
    half_psi_margin,
    psi_lower_margin,
    psi_lower_tail,
    psi_lower_tail_limit,
)
from services.interval.interval import Interval

Params = Mapping[str, object]


class Rule(NamedTuple):
    enclose: Callable[[Interval, Params], Interval]
    relation: Relation
    description: str
    origin_only: bool = False


def _k(params: Params) -> int:
    if 'k' not in params:
        raise ParameterError("rule needs parameter k")
    return int(params['k'])


def _r(params: Params) -> int:
    return int(params.get('r', 1))


def _linear_bound(X: Interval, params: Params) -> Interval:
    """M(p) - M'(p): the tangent line at p evaluated one unit to the left."""
    return m_range(X, _r(params), _k(params)) - m_prime_range(X, _r(params), _k(params))


RULES: Dict[str, Rule] = {
    'psi_lower_series': Rule(
        lambda X, p: psi_lower_margin(X), Relation.POSITIVE,
        "psi minus the log ratio bound, series enclosure of psi near 0"),
    'psi_lower_margin': Rule(
        lambda X, p: psi_lower_margin(X), Relation.POSITIVE,
        "psi minus the log ratio bound"),
    'psi_lower_tail': Rule(
        lambda X, p: psi_lower_tail(X), Relation.POSITIVE,
        "tail margin in s = 1/(1+t), divided by 2s"),
    'psi_lower_tail_limit': Rule(
        lambda X, p: psi_lower_tail_limit(X), Relation.POSITIVE,
        "lower bound of the tail margin from -log s >= -log s_c"),
    'half_psi_chain': Rule(
        lambda X, p: half_psi_chain(X, _k(p)), Relation.POSITIVE,
        "psi/2 >= log(1+2b)/(1+2b) >= rho_k, decreasing ratio checked on the cell"),
    'half_psi_margin': Rule(
        lambda X, p: half_psi_margin(X, _k(p)), Relation.POSITIVE,
        "psi/2 - rho_k > 0, so g_k = b^2 (psi/2 - rho_k) >= 0"),
    'mk_value': Rule(
        lambda X, p: m_range(X, _r(p), _k(p)), Relation.POSITIVE,
        "M_{r,k} > 0"),
    'mk_value_origin': Rule(
        lambda X, p: m_second_range(X, _r(p), _k(p)), Relation.POSITIVE,
        "M'' > 0 on a cell starting at 0 with M(0) = M'(0) = 0", origin_only=True),
    'mk_slope': Rule(
        lambda X, p: m_prime_range(X, _r(p), _k(p)), Relation.POSITIVE,
        "M' > 0"),
    'mk_slope_negative': Rule(
        lambda X, p: m_prime_range(X, _r(p), _k(p)), Relation.NEGATIVE,
        "M' < 0"),
    'mk_slope_origin': Rule(
        lambda X, p: m_second_range(X, _r(p), _k(p)), Relation.POSITIVE,
        "M'' > 0 on a cell starting at 0 with M'(0) = 0", origin_only=True),
    'mk_curvature': Rule(
        lambda X, p: m_second_range(X, _r(p), _k(p)), Relation.POSITIVE,
        "M'' > 0"),
    'mk_curvature_negative': Rule(
        lambda X, p: m_second_range(X, _r(p), _k(p)), Relation.NEGATIVE,
        "M'' < 0"),
    'mk_linear_bound': Rule(
        _linear_bound, Relation.POSITIVE,
        "M(p) - M'(p) > 0 at p = k-2"),
    'gk_third_negative': Rule(
        lambda X, p: g_third_range(X), Relation.NEGATIVE,
        "g_k''' = -1/(1+s)^2 < 0, so g_k' is concave"),
}


def get_rule(name: str) -> Rule:
    """
    Look up a rule by name.

    Raises:
        ParameterError: If the rule is not registered
    """
    if name not in RULES:
        raise ParameterError(f"Unknown evidence rule: {name}")
    return RULES[name]


def evaluate_rule(name: str, cell: Interval, params: Params) -> Interval:
    return get_rule(name).enclose(cell, params)
