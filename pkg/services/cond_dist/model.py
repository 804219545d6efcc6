"""
The conditioned Poisson model for k x k tables with fixed margins.

Y_ij are independent Poisson(n/k^2) and the conditioning event is
Y in lambda + L, where L is the subspace of tables with zero margins. The
lattice Z^q n L is spanned by the minor moves

    V^(ij) = e_ij - e_(i,k-1) - e_(k-1,j) + e_(k-1,k-1),   i, j < k-1

(0-based), so q = k^2 and s = (k-1)^2.
"""
import itertools
import logging
import math
from typing import Optional, Tuple

import numpy as np

from entities.cond_model import CondModel
from services.errors import ParameterError

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


def minor_basis(k: int) -> np.ndarray:
    """The (k-1)^2 x k^2 matrix of minor moves, row (i, j) in row-major order."""
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    last = k - 1
    rows = []
    for i in range(last):
        for j in range(last):
            move = np.zeros((k, k), dtype=np.int64)
            move[i, j] += 1
            move[i, last] -= 1
            move[last, j] -= 1
            move[last, last] += 1
            rows.append(move.ravel())
    return np.array(rows, dtype=np.int64)


def basis_constants(basis: np.ndarray) -> Tuple[float, float]:
    """
    C1, C2 with C1 max|t| <= |sum t_a V_a| <= C2 max|t|.

    C1 is the smallest singular value and C2 is sqrt(s) times the largest.
    """
    singular = np.linalg.svd(basis.astype(float), compute_uv=False)
    return float(singular.min()), float(math.sqrt(basis.shape[0]) * singular.max())


def build_table_model(k: int, n: int, basis: Optional[np.ndarray] = None) -> CondModel:
    """
    Build the table model with lambda_ij = n/k^2.

    Args:
        k: Table size, >= 2
        n: Total count, a positive multiple of k
        basis: Alternative integer basis of L (s x q); defaults to the minor moves

    Returns:
        CondModel with the basis constants; lambda_integral is False when
        k^2 does not divide n

    Raises:
        ParameterError: If k or n are invalid, or the basis is not a basis of L
    """
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    if n <= 0 or n % k:
        raise ParameterError(f"n must be a positive multiple of k={k}, got {n}")

    standard = minor_basis(k)
    if basis is None:
        basis = standard
    else:
        basis = np.asarray(basis, dtype=np.int64)
        if basis.shape != standard.shape:
            raise ParameterError(f"basis must have shape {standard.shape}, got {basis.shape}")
        margins = basis.reshape(-1, k, k)
        if np.any(margins.sum(axis=1)) or np.any(margins.sum(axis=2)):
            raise ParameterError("basis vectors must have zero row and column sums")
        if np.linalg.matrix_rank(basis.astype(float)) < standard.shape[0]:
            raise ParameterError("basis vectors must be linearly independent")

    lam = np.full(k * k, n / k ** 2)
    c1, c2 = basis_constants(basis)
    model = CondModel(
        k=k, n=n, lam=lam, basis=basis, c1=c1, c2=c2,
        lambda_integral=(n % (k * k) == 0),
        standard_basis=bool(np.array_equal(basis, standard)),
    )
    logger.debug(f"Built table model {model.get_summary()}")
    return model


def _unit_box_candidates(free_basis: np.ndarray):
    """Integer points of the bounding box of {V_free^T t : t in [0, 1]^s}."""
    lower = np.minimum(free_basis, 0).sum(axis=0)
    upper = np.maximum(free_basis, 0).sum(axis=0)
    ranges = [range(int(lo), int(hi) + 1) for lo, hi in zip(lower, upper)]
    return itertools.product(*ranges)


def kappa_of_basis(model: CondModel) -> int:
    """
    Number of points of Z^q n L in the half-open box B_0.

    A point of L is fixed by its free entries, and it is a lattice point
    exactly when those are integers, so the search runs over integer free
    vectors f with t = V_free^-T f in [0, 1)^s.
    """
    free = model.free_basis().astype(float)
    count = 0
    for f in _unit_box_candidates(model.free_basis()):
        t = np.linalg.solve(free.T, np.array(f, dtype=float))
        t = np.where(np.abs(t - np.round(t)) < 1e-9, np.round(t), t)
        if np.all(t >= 0.0) and np.all(t < 1.0):
            count += 1
    return count
