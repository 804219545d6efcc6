"""
Goodness of fit of |X|^2 = -n + (k^2/n) sum l_ij^2 under the conditional law
and its exponential moment Q exp(J_k |X|^2), J_k = c/(k-1)^2.

The truncated moment Q exp(J_k |X|^2) 1{|X| <= delta sqrt(nu)} is compared
with the Gaussian-side value theta E exp(theta^2 J_k chi2_R) =
theta (1 - 2 theta^2 J_k)^(-R/2), R = (k-1)^2.
"""
import logging
import math
from enum import Enum
from typing import Tuple

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp

from entities.cond_model import CondModel
from entities.reports import GofReport
from services.errors import ParameterError
from services.cond_dist.samplers import BURN_IN, THIN, run_chains
from services.scalar_fn.poisson_bounds import chi2_exp_moment
from services.scalar_fn.rate_functions import rho_k
from services.tables.enumeration import ENUMERATION_BUDGET, iter_table_chunks

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

DEFAULT_THETA = 1.05
DEFAULT_DELTA = 1.0
DEFAULT_STEPS = 1_000_000


class GofMode(str, Enum):
    EXACT = 'exact'     # enumeration of H_k(B)
    MCMC = 'mcmc'


def _chi_square(flat: np.ndarray, k: int, n: int) -> np.ndarray:
    return -n + (k * k / n) * (flat.astype(float) ** 2).sum(axis=1)


def _exact_law(model: CondModel, budget: int) -> Tuple[np.ndarray, np.ndarray]:
    """|X|^2 of every table of H_k(B) and its Q-probability."""
    k, n = model.k, model.n
    chis, logs = [], []
    for chunk in iter_table_chunks(k, model.B, budget=budget):
        flat = chunk.reshape(chunk.shape[0], -1)
        chis.append(_chi_square(flat, k, n))
        logs.append(-gammaln(flat + 1.0).sum(axis=1))
    log_w = np.concatenate(logs)
    return np.concatenate(chis), np.exp(log_w - logsumexp(log_w))


def discrete_ks(values: np.ndarray, probs: np.ndarray, R: int) -> float:
    """
    sup |F - chi2_R cdf| for the discrete law (values, probs), checking both
    sides of every jump.
    """
    order = np.argsort(values)
    values, probs = values[order], probs[order]
    support, start = np.unique(values, return_index=True)
    mass = np.add.reduceat(probs, start)
    after = np.cumsum(mass)
    before = after - mass
    cdf = stats.chi2.cdf(support, R)
    return float(max(np.max(np.abs(after - cdf)), np.max(np.abs(before - cdf))))


def gof_and_moment(model: CondModel, c: float, mode: GofMode = GofMode.EXACT,
                   theta: float = DEFAULT_THETA, delta: float = DEFAULT_DELTA,
                   steps: int = DEFAULT_STEPS, seed: int = 0, chains: int = 1, workers: int = 1,
                   burn_in: int = BURN_IN, thin: int = THIN,
                   budget: int = ENUMERATION_BUDGET) -> GofReport:
    """
    |X|^2 summary, Q exp(J_k |X|^2) and the chi-square comparison.

    Args:
        model: Table model, n = kB
        c: Rate, J_k = c/(k-1)^2 must stay below rho_k
        mode: exact (enumeration) or mcmc
        theta: Sandwich factor of the Gaussian-side bound, > 1
        delta: Truncation |X| <= delta sqrt(nu)
        steps, seed, chains, workers, burn_in, thin: MCMC options

    Returns:
        GofReport; divergent is set when 2 theta^2 J_k >= 1

    Raises:
        ParameterError: If J_k >= rho_k or the options are invalid
    """
    k, n = model.k, model.n
    mode = GofMode(mode)
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    if c < 0:
        raise ParameterError(f"c must be nonnegative, got {c}")
    if theta < 1.0 or delta <= 0:
        raise ParameterError(f"theta must be at least 1 and delta positive, got {theta}, {delta}")
    R = (k - 1) ** 2
    J = c / R
    if J >= rho_k(k):
        raise ParameterError(f"J_k = {J:.6g} is not below rho_k = {rho_k(k):.6g}")
    cutoff = delta * delta * model.nu

    logger.info(f"Attempting {mode.value} goodness of fit for k={k}, B={model.B}, c={c}")
    if mode is GofMode.EXACT:
        chi, probs = _exact_law(model, budget)
        weights = np.exp(J * chi)
        moment = float(np.dot(probs, weights))
        truncated = float(np.dot(probs, weights * (chi <= cutoff)))
        mean = float(np.dot(probs, chi))
        var = float(np.dot(probs, (chi - mean) ** 2))
        ks = discrete_ks(chi, probs, R)
        samples, moment_se, used_seed = int(chi.size), None, None
    else:
        per_chain = run_chains(model, steps, seed, chains=chains, workers=workers, burn_in=burn_in, thin=thin)
        chi_chains = [_chi_square(flat, k, n) for flat in per_chain]
        chi = np.concatenate(chi_chains)
        if not chi.size:
            raise ParameterError("the chains kept no samples; raise steps")
        weights = np.exp(J * chi)
        moment = float(weights.mean())
        truncated = float((weights * (chi <= cutoff)).mean())
        mean = float(chi.mean())
        var = float(chi.var())
        if chains > 1:
            chain_means = np.array([np.exp(J * x).mean() for x in chi_chains])
            moment_se = float(chain_means.std(ddof=1) / math.sqrt(chains))
        else:
            moment_se = float(weights.std(ddof=1) / math.sqrt(chi.size)) if chi.size > 1 else None
        ks = float(stats.kstest(chi, 'chi2', args=(R,)).statistic)
        samples, used_seed = int(chi.size), seed

    a = theta * theta * J
    divergent = 2.0 * a >= 1.0
    normal_bound = None if divergent else theta * chi2_exp_moment(a, R)
    report = GofReport(
        k=k, B=model.B, c=c, J=J, R=R, mode=mode.value, samples=samples, seed=used_seed,
        chi2_mean=mean, chi2_var=var, moment=moment, moment_se=moment_se,
        truncated_moment=truncated, theta=theta, delta=delta,
        normal_bound=normal_bound, divergent=divergent,
        bound_holds=None if divergent else truncated <= normal_bound,
        ks_distance=ks,
    )
    logger.info(f"Successfully computed moment {moment:.6g}, KS distance {ks:.4f}")
    return report
