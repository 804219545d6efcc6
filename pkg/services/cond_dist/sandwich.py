"""
Finite-n sandwich checks of the conditioned Poisson local limit.

    gamma(lambda) = (2 pi)^(s/2) prod_i (2 pi lambda_i / nu)^(-1/2)
    mu(lambda)    = sqrt(det(V diag(nu/lambda) V^T)),  Leb(D^-1 B_0) = nu^(-s/2) mu
    beta(lambda)  = kappa_V gamma / mu

Pointwise, every table l = lambda + D x near lambda should satisfy

    theta^-1 phi(theta x) <= nu^(q/2) P{Y = l} / gamma <= theta phi(x / theta).

For boxes the Gaussian masses are compared at fixed volume:

    theta^(-1-s) N(theta D^-1 B_w) <= nu^((q-s)/2) P{Y in lambda + B_w} / beta
                                   <= theta^(1+s) N(D^-1 B_w / theta),

which is the pointwise sandwich integrated over the box. Both bounds move
monotonically in theta, so the smallest passing theta is found by bisection.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from entities.cond_model import CondModel
from entities.reports import (
    BoxConvention,
    HyperplaneReport,
    PointwiseReport,
    SandwichReport,
    SandwichRow,
    TailsReport,
)
from services.errors import ParameterError
from services.cond_dist.boxes import (
    box_indices,
    box_prob_exact,
    box_prob_normal,
    boxes_within,
    leb_box0,
    log_pmf,
    precision_matrix,
)
from services.cond_dist.model import kappa_of_basis
from services.scalar_fn.poisson_bounds import poisson_tail_exact, poisson_tail_upper
from services.tables.enumeration import ENUMERATION_BUDGET, iter_table_chunks
from services.tables.quantities import log_prob_Y_in_Hk

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

BOX_BUDGET = 100_000
THETA_MAX = 4.0
POINTWISE_THETA_MAX = 64.0
BISECTION_STEPS = 30
DEFAULT_DELTA = 0.05
_SLACK = 1e-9


def log_gamma(model: CondModel) -> float:
    s, nu = model.s, model.nu
    return 0.5 * s * math.log(2.0 * math.pi) - 0.5 * float(np.log(2.0 * math.pi * model.lam / nu).sum())


def gamma(model: CondModel) -> float:
    """gamma(lambda) = (2 pi)^(s/2) prod_i (2 pi lambda_i / nu)^(-1/2)."""
    return math.exp(log_gamma(model))


def mu(model: CondModel) -> float:
    """mu(lambda) = nu^(s/2) Leb(D^-1 B_0)."""
    return model.nu ** (0.5 * model.s) * leb_box0(model)


def beta(model: CondModel, kappa: Optional[int] = None) -> float:
    """beta(lambda) = kappa_V gamma / mu."""
    kappa = kappa_of_basis(model) if kappa is None else kappa
    return kappa * gamma(model) / mu(model)


def _log_scale(model: CondModel) -> float:
    """log nu^((q-s)/2)."""
    return 0.5 * (model.q - model.s) * math.log(model.nu)


def _bisect(passes, upper: float, steps: int = BISECTION_STEPS) -> float:
    """Smallest theta in [1, upper] with passes(theta), for monotone passes; inf if none."""
    if passes(1.0):
        return 1.0
    if not passes(upper):
        return math.inf
    lo, hi = 1.0, upper
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _box_bounds(model: CondModel, w, theta: float, convention: BoxConvention) -> Tuple[float, float]:
    s = model.s
    lower = theta ** (-1 - s) * box_prob_normal(model, w, 1.0 / theta, convention).value
    upper = theta ** (1 + s) * box_prob_normal(model, w, theta, convention).value
    return lower, upper


def _box_theta_min(model: CondModel, w, ratio: float, mass: float, convention: BoxConvention) -> float:
    s = model.s
    theta_lower = 1.0
    if ratio < mass:
        theta_lower = _bisect(
            lambda t: t ** (-1 - s) * box_prob_normal(model, w, 1.0 / t, convention).value <= ratio * (1 + _SLACK),
            THETA_MAX,
        )
    theta_upper = 1.0
    if ratio > mass:
        theta_upper = _bisect(
            lambda t: t ** (1 + s) * box_prob_normal(model, w, t, convention).value >= ratio * (1 - _SLACK),
            THETA_MAX,
        )
    return max(theta_lower, theta_upper)


def _radius(model: CondModel, delta: float) -> int:
    return int(math.floor(delta * model.nu + 1e-12))


def hyperplane_ratio(model: CondModel, kappa: Optional[int] = None,
                     budget: int = ENUMERATION_BUDGET) -> HyperplaneReport:
    """nu^((q-s)/2) P{Y in lambda + L} / beta(lambda)."""
    b = beta(model, kappa)
    log_prob = log_prob_Y_in_Hk(model.k, model.B, budget)
    return HyperplaneReport(
        k=model.k, n=model.n, prob=math.exp(log_prob), beta=b,
        ratio=math.exp(_log_scale(model) + log_prob - math.log(b)),
    )


def sandwich_check(model: CondModel, theta: Optional[float] = None, delta: float = DEFAULT_DELTA,
                   convention: BoxConvention = BoxConvention.CENTERED,
                   box_budget: int = BOX_BUDGET, conditional: bool = True) -> SandwichReport:
    """
    Box sandwich on every w in W_delta.

    Boxes of W_delta holding no table of H_k are counted and skipped. With
    theta omitted the report uses the smallest theta passing every box.

    Args:
        model: Table model
        theta: Sandwich factor > 1, or None to search
        delta: W_delta radius factor, boxes with max |w_a| <= delta nu
        convention: corner or centred boxes
        box_budget: Largest number of boxes; W_delta is shrunk beyond it
        conditional: Also check Q(B_w) against the same bounds

    Returns:
        SandwichReport
    """
    if theta is not None and theta <= 1.0:
        raise ParameterError(f"theta must exceed 1, got {theta}")
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    convention = BoxConvention(convention)
    s = model.s

    kappa = kappa_of_basis(model)
    g, m = gamma(model), mu(model)
    b = kappa * g / m
    radius = _radius(model, delta)
    truncated = False
    while radius > 0 and (2 * radius + 1) ** s > box_budget:
        radius -= 1
        truncated = True

    report = SandwichReport(
        k=model.k, n=model.n, theta=theta or THETA_MAX, delta=delta, radius=radius,
        convention=convention, kappa=kappa, gamma=g, mu=m, beta=b, leb_box0=leb_box0(model),
        truncated=truncated,
    )
    if truncated:
        report.notes.append(f"W_delta restricted to radius {radius} by the box budget {box_budget}")
    logger.info(f"Attempting box sandwich for k={model.k}, n={model.n}: {(2 * radius + 1) ** s} boxes")

    log_prob_L = log_prob_Y_in_Hk(model.k, model.B)
    report.prob_hyperplane = math.exp(log_prob_L)
    report.hyperplane_ratio = math.exp(_log_scale(model) + log_prob_L - math.log(b))

    found = []
    for w in boxes_within(s, radius):
        prob = box_prob_exact(model, w, convention)
        if prob == 0.0:
            report.outside_support += 1
            continue
        ratio = math.exp(_log_scale(model) + math.log(prob) - math.log(b))
        mass = box_prob_normal(model, w, 1.0, convention).value
        found.append((w, prob, ratio, mass, _box_theta_min(model, w, ratio, mass, convention)))

    report.theta_min = max((row[4] for row in found), default=None)
    if theta is None:
        theta = report.theta_min if report.theta_min is not None and math.isfinite(report.theta_min) else THETA_MAX
        theta = max(theta, 1.0 + 1e-12)
    report.theta = theta

    for w, prob, ratio, mass, theta_w in found:
        lower, upper = _box_bounds(model, w, theta, convention)
        row = SandwichRow(
            w=tuple(int(v) for v in w), prob_exact=prob, ratio=ratio, normal_mass=mass,
            lower=lower, upper=upper, theta_min=theta_w,
            passed=lower <= ratio * (1 + _SLACK) and ratio * (1 - _SLACK) <= upper,
        )
        if conditional:
            q_prob = math.exp(math.log(prob) - log_prob_L)
            row.cond_exact, row.cond_lower, row.cond_upper = q_prob, lower, upper
            row.cond_passed = lower <= q_prob * (1 + _SLACK) and q_prob * (1 - _SLACK) <= upper
        report.rows.append(row)

    report.passed = bool(report.rows) and all(row.passed for row in report.rows)
    if conditional:
        report.cond_passed = bool(report.rows) and all(row.cond_passed for row in report.rows)
    if report.outside_support:
        report.notes.append(f"{report.outside_support} boxes of W_delta hold no table and were skipped")
    logger.info(f"Successfully checked {len(report.rows)} boxes, minimal theta {report.theta_min}")
    return report


def _pointwise_arrays(model: CondModel, budget: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Relative deviation, chi-square, log nu^(q/2) P{Y = l}/gamma and tables."""
    devs, chis, logs, tables = [], [], [], []
    shift = 0.5 * model.q * math.log(model.nu) - log_gamma(model)
    for chunk in iter_table_chunks(model.k, model.B, budget=budget):
        flat = chunk.reshape(chunk.shape[0], -1)
        diff = flat - model.lam
        devs.append(np.max(np.abs(diff) / model.lam, axis=1))
        chis.append((diff * diff / model.lam).sum(axis=1))
        logs.append(log_pmf(model, flat) + shift)
        tables.append(flat)
    return np.concatenate(devs), np.concatenate(chis), np.concatenate(logs), np.concatenate(tables)


def _pointwise_passes(theta, chi: np.ndarray, log_v: np.ndarray, s: int) -> np.ndarray:
    log_norm = -0.5 * s * math.log(2.0 * math.pi)
    log_theta = np.log(theta)
    upper = log_theta + log_norm - chi / (2.0 * theta * theta)
    lower = -log_theta + log_norm - 0.5 * theta * theta * chi
    return (lower <= log_v + _SLACK) & (log_v - _SLACK <= upper)


def _pointwise_theta_min(chi: np.ndarray, log_v: np.ndarray, s: int) -> np.ndarray:
    """Vectorised bisection of the smallest passing theta per table."""
    lo = np.ones_like(chi)
    hi = np.full_like(chi, POINTWISE_THETA_MAX)
    done = _pointwise_passes(lo, chi, log_v, s)
    hopeless = ~_pointwise_passes(hi, chi, log_v, s)
    for _ in range(2 * BISECTION_STEPS):
        mid = np.sqrt(lo * hi)
        ok = _pointwise_passes(mid, chi, log_v, s)
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    result = np.where(done, 1.0, hi)
    return np.where(hopeless, np.inf, result)


def pointwise_check(model: CondModel, theta: float, delta: float,
                    budget: int = ENUMERATION_BUDGET) -> PointwiseReport:
    """
    The pointwise sandwich on every table with max_i |l_i - lambda_i| / lambda_i <= delta.
    """
    if theta <= 1.0:
        raise ParameterError(f"theta must exceed 1, got {theta}")
    dev, chi, log_v, tables = _pointwise_arrays(model, budget)
    near = dev <= delta + 1e-12
    report = PointwiseReport(k=model.k, n=model.n, theta=theta, delta=delta, gamma=gamma(model),
                             checked=int(near.sum()))
    if not report.checked:
        return report
    passes = _pointwise_passes(theta, chi[near], log_v[near], model.s)
    report.passed = bool(passes.all())
    theta_min = _pointwise_theta_min(chi[near], log_v[near], model.s)
    worst = int(np.argmax(theta_min))
    report.theta_min = float(theta_min[worst])
    report.worst_table = tuple(int(v) for v in tables[near][worst])
    return report


def largest_pointwise_delta(model: CondModel, theta: float,
                            budget: int = ENUMERATION_BUDGET) -> Optional[float]:
    """
    Largest achievable delta for which the pointwise sandwich holds at theta.

    Returns:
        The delta, or None if the table closest to lambda already fails
    """
    if theta <= 1.0:
        raise ParameterError(f"theta must exceed 1, got {theta}")
    dev, chi, log_v, _ = _pointwise_arrays(model, budget)
    passes = _pointwise_passes(theta, chi, log_v, model.s)
    levels = np.unique(dev)
    if passes.all():
        return float(levels[-1])
    first_fail = dev[~passes].min()
    below = levels[levels < first_fail]
    return float(below[-1]) if below.size else None


def tails_bound_check(model: CondModel, delta: float,
                      convention: BoxConvention = BoxConvention.CENTERED,
                      budget: int = ENUMERATION_BUDGET, box_budget: int = BOX_BUDGET) -> TailsReport:
    """
    P{Y in lambda + L, Y outside lambda + L_delta} against the union of
    coordinate tails at delta0 = C1 delta / (2 sqrt(q)).

    The Gaussian side compares the N_lambda mass outside the boxes of W_delta
    with the union of univariate normal tails of the box coordinates.
    """
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    convention = BoxConvention(convention)
    radius = _radius(model, delta)
    q, nu = model.q, model.nu

    log_tail = -np.inf
    for chunk in iter_table_chunks(model.k, model.B, budget=budget):
        flat = chunk.reshape(chunk.shape[0], -1)
        w = box_indices(model, flat, convention)
        outside = np.abs(w).max(axis=1) > radius
        if np.any(outside):
            log_tail = np.logaddexp(log_tail, np.logaddexp.reduce(log_pmf(model, flat[outside])))
    exact_tail = float(np.exp(log_tail))

    delta0 = model.c1 * delta / (2.0 * math.sqrt(q))
    # |Y_i - lambda_i| > delta0 nu is the relative deviation delta0 nu / lambda_i
    bound = sum(poisson_tail_upper(lam, delta0 * nu / lam) for lam in model.lam)
    bound_exact = sum(poisson_tail_exact(lam, delta0 * nu / lam) for lam in model.lam)
    implication = (model.c1 * delta * nu - model.c2) / math.sqrt(q) > delta0 * nu

    sigma = np.sqrt(np.diag(np.linalg.inv(precision_matrix(model))))
    if convention is BoxConvention.CENTERED:
        gaussian_bound = float((2.0 * stats.norm.sf((radius + 0.5) / sigma)).sum())
    else:
        gaussian_bound = float((stats.norm.sf(radius / sigma) + stats.norm.sf((radius + 1) / sigma)).sum())

    gaussian_outside = None
    count = (2 * radius + 1) ** model.s
    if model.s <= 4 and count <= box_budget:
        inside = sum(box_prob_normal(model, w, 1.0, convention).value for w in boxes_within(model.s, radius))
        gaussian_outside = max(0.0, 1.0 - inside)

    return TailsReport(
        k=model.k, n=model.n, delta=delta, delta0=delta0, radius=radius,
        exact_tail=exact_tail, bound=bound, bound_exact_tails=bound_exact,
        implication_holds=bool(implication),
        gaussian_outside=gaussian_outside, gaussian_bound=gaussian_bound,
        exact_rate=(-math.log(exact_tail) / nu) if exact_tail > 0 else None,
        bound_rate=(-math.log(bound) / nu) if 0 < bound else None,
    )
