"""
Boxes B_w = {sum t_a V_a : t in w + [0, 1)^s} of the constraint subspace
and their exact Poisson and Gaussian masses.

Box coordinates of a table y are t = V_free^-T (y_free - lambda_free); the
box index is floor(t) for corner boxes and floor(t + 1/2) for centred ones.
Under the Gaussian limit N_lambda, t has density

    (2 pi)^(-s/2) sqrt(det G) exp(-t^T G t / 2),   G = V D^-2 V^T,

so N_lambda(D^-1 B_w / scale) is the mass of that density on the box
(w + [0, 1)^s) / scale.
"""
import itertools
import logging
import math
from typing import Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats

from entities.cond_model import Box, CondModel
from entities.margin_table import MarginTable
from entities.reports import BoxConvention
from services.errors import DomainError, QuadratureError

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

QUADRATURE_TOL = 1e-10
QUADRATURE_ORDERS = (8, 12, 16, 24, 32)
QUADRATURE_MAX_DIM = 4
MC_SAMPLES = 1_000_000
_SNAP = 1e-9

Index = Tuple[int, ...]


class NormalMass(NamedTuple):
    value: float
    error: float            # quadrature difference estimate, or MC standard error
    method: str             # 'gauss_legendre' or 'monte_carlo'
    leb_box0: float         # Leb(D^-1 B_0) = nu^(-s/2) mu(lambda)


def _offset(convention: BoxConvention) -> float:
    return 0.5 if BoxConvention(convention) is BoxConvention.CENTERED else 0.0


def box_bounds(w: Sequence[int], convention: BoxConvention = BoxConvention.CORNER) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper corners of the coordinate box of w."""
    lo = np.asarray(w, dtype=float) - _offset(convention)
    return lo, lo + 1.0


def precision_matrix(model: CondModel) -> np.ndarray:
    """G = V D^-2 V^T."""
    V = model.basis.astype(float)
    return (V / model.lam) @ V.T


def leb_box0(model: CondModel) -> float:
    return float(math.sqrt(np.linalg.det(precision_matrix(model))))


def box_coordinates(model: CondModel, tables: np.ndarray) -> np.ndarray:
    """
    Coordinates t of tables given as flat rows (m, q).
    """
    tables = np.atleast_2d(np.asarray(tables, dtype=float))
    free = model.free_index()
    shift = tables[:, free] - model.lam[free]
    t = np.linalg.solve(model.free_basis().astype(float).T, shift.T).T
    snapped = np.round(t)
    return np.where(np.abs(t - snapped) < _SNAP, snapped, t)


def box_indices(model: CondModel, tables: np.ndarray,
                convention: BoxConvention = BoxConvention.CORNER) -> np.ndarray:
    """Box index of every flat table, shape (m, s)."""
    return np.floor(box_coordinates(model, tables) + _offset(convention)).astype(np.int64)


def box_index_of_table(model: CondModel, table: Union[MarginTable, Sequence[int]],
                       convention: BoxConvention = BoxConvention.CORNER) -> Index:
    flat = table.flat() if isinstance(table, MarginTable) else list(table)
    return tuple(int(v) for v in box_indices(model, np.array([flat]), convention)[0])


def complete_table(model: CondModel, free_values: Sequence[int]) -> np.ndarray:
    """The flat table with the given free entries and margins B."""
    k, B = model.k, model.B
    table = np.zeros((k, k), dtype=np.int64)
    table[:k - 1, :k - 1] = np.asarray(free_values, dtype=np.int64).reshape(k - 1, k - 1)
    table[:k - 1, k - 1] = B - table[:k - 1, :k - 1].sum(axis=1)
    table[k - 1, :k - 1] = B - table[:k - 1, :k - 1].sum(axis=0)
    table[k - 1, k - 1] = B - table[k - 1, :k - 1].sum()
    return table.ravel()


def _free_candidates(model: CondModel, lo: np.ndarray, hi: np.ndarray) -> Iterable[Tuple[int, ...]]:
    V = model.free_basis().astype(float)
    base = model.lam[model.free_index()]
    low = base + np.minimum(V * lo[:, None], V * hi[:, None]).sum(axis=0)
    high = base + np.maximum(V * lo[:, None], V * hi[:, None]).sum(axis=0)
    ranges = [range(math.ceil(a - _SNAP), math.floor(b + _SNAP) + 1) for a, b in zip(low, high)]
    return itertools.product(*ranges)


def box_members(model: CondModel, w: Sequence[int],
                convention: BoxConvention = BoxConvention.CORNER) -> List[Index]:
    """
    Lattice points of lambda + B_w as flat tables, entries possibly negative.
    """
    lo, hi = box_bounds(w, convention)
    members = []
    for free_values in _free_candidates(model, lo, hi):
        table = complete_table(model, free_values)
        t = box_coordinates(model, table[None, :])[0]
        if np.all(t >= lo) and np.all(t < hi):
            members.append(tuple(int(v) for v in table))
    return members


def make_box(model: CondModel, w: Sequence[int], convention: BoxConvention = BoxConvention.CORNER) -> Box:
    members = box_members(model, w, convention)
    return Box(w=tuple(int(v) for v in w), kappa=len(members), members=members)


def log_pmf(model: CondModel, tables: np.ndarray) -> np.ndarray:
    """log P{Y = y} for flat tables; -inf outside the support."""
    tables = np.atleast_2d(np.asarray(tables))
    return stats.poisson.logpmf(tables, model.lam).sum(axis=1)


def box_prob_exact(model: CondModel, w: Sequence[int],
                   convention: BoxConvention = BoxConvention.CORNER) -> float:
    """
    P{Y in lambda + B_w}, summing exact pmfs over the lattice points of the box.

    Raises:
        DomainError: If the box holds no lattice point
    """
    members = box_members(model, w, convention)
    if not members:
        raise DomainError(f"box {tuple(w)} holds no lattice point of the coset")
    return float(np.exp(log_pmf(model, np.array(members))).sum())


def _gauss_legendre(G: np.ndarray, lo: np.ndarray, hi: np.ndarray, order: int) -> float:
    nodes, weights = leggauss(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    axes = [mid[a] + half[a] * nodes for a in range(len(lo))]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(lo))
    weight = np.ones(1)
    for a in range(len(lo)):
        weight = np.outer(weight, weights * half[a]).ravel()
    exponent = -0.5 * np.einsum('ni,ij,nj->n', grid, G, grid)
    return float(np.dot(weight, np.exp(exponent)))


def _monte_carlo(G: np.ndarray, lo: np.ndarray, hi: np.ndarray, samples: int, seed: int) -> Tuple[float, float]:
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(np.linalg.inv(G))
    draws = rng.standard_normal((samples, G.shape[0])) @ chol.T
    inside = np.all((draws >= lo) & (draws < hi), axis=1)
    p = float(inside.mean())
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / samples)


def box_prob_normal(model: CondModel, w: Sequence[int], scale: float = 1.0,
                    convention: BoxConvention = BoxConvention.CORNER,
                    tol: float = QUADRATURE_TOL, mc_samples: int = MC_SAMPLES,
                    seed: int = 0) -> NormalMass:
    """
    N_lambda(D^-1 B_w / scale).

    Tensor Gauss-Legendre quadrature of increasing order up to s = 4, stopping
    when two successive orders agree to tol (relative); Monte Carlo with a
    standard error beyond that.

    Raises:
        QuadratureError: If the quadrature orders never agree to tol
    """
    if scale <= 0:
        raise DomainError(f"scale must be positive, got {scale}")
    G = precision_matrix(model)
    s = G.shape[0]
    norm = math.sqrt(np.linalg.det(G)) * (2.0 * math.pi) ** (-s / 2.0)
    lo, hi = box_bounds(w, convention)
    lo, hi = lo / scale, hi / scale
    leb = math.sqrt(np.linalg.det(G))

    if s > QUADRATURE_MAX_DIM:
        value, error = _monte_carlo(G, lo, hi, mc_samples, seed)
        return NormalMass(value, error, 'monte_carlo', leb)

    previous = None
    error = math.inf
    for order in QUADRATURE_ORDERS:
        value = norm * _gauss_legendre(G, lo, hi, order)
        if previous is not None:
            error = abs(value - previous)
            if error <= tol * max(abs(value), 1e-300):
                return NormalMass(value, error, 'gauss_legendre', leb)
        previous = value
    relative = error / max(abs(previous), 1e-300)
    raise QuadratureError(
        f"box {tuple(w)} at scale {scale}: relative error {relative:.3e} above {tol:.1e}",
        achieved=relative, requested=tol,
    )


def boxes_within(s: int, radius: int) -> Iterable[Index]:
    """W_delta = {w : max |w_a| <= radius}, lexicographically."""
    return itertools.product(range(-radius, radius + 1), repeat=s)
