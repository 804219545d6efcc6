# Conditioned Poisson model: independent Poissons restricted to a lattice coset
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class CondModel(BaseModel):
    """
    Y_1..Y_q independent Poisson(lambda_i), conditioned on Y in lambda + L.

    L is spanned by the integer basis rows of `basis` (s x q). For the table
    application q = k^2, s = (k-1)^2 and lambda_ij = n/k^2.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    k: int
    n: int
    lam: np.ndarray                 # length q
    basis: np.ndarray               # s x q integer matrix
    c1: float                       # C1 max|t| <= |sum t_a V_a|, smallest singular value
    c2: float                       # |sum t_a V_a| <= C2 max|t|, sqrt(s) times the largest
    lambda_integral: bool = True    # False when k^2 does not divide n
    standard_basis: bool = True     # rows are the minor moves V^(ij)

    @property
    def q(self) -> int:
        return int(self.lam.shape[0])

    @property
    def s(self) -> int:
        return int(self.basis.shape[0])

    @property
    def nu(self) -> float:
        return float(self.lam.sum())

    @property
    def tau(self) -> float:
        return float(self.lam.min() / self.nu)

    @property
    def D(self) -> np.ndarray:
        return np.diag(np.sqrt(self.lam))

    @property
    def B(self) -> int:
        """Common margin n/k."""
        return self.n // self.k

    def free_index(self) -> np.ndarray:
        """Flat positions (i, j) with i, j < k-1; a point of L is fixed by these entries."""
        return np.array([i * self.k + j for i in range(self.k - 1) for j in range(self.k - 1)])

    def free_basis(self) -> np.ndarray:
        """The basis restricted to the free entries, an invertible s x s matrix."""
        return self.basis[:, self.free_index()]

    def gram(self) -> np.ndarray:
        """V V^T."""
        return self.basis @ self.basis.T

    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.basis))

    def get_summary(self) -> dict:
        return {
            'k': self.k,
            'n': self.n,
            'q': self.q,
            's': self.s,
            'nu': self.nu,
            'tau': self.tau,
            'c1': self.c1,
            'c2': self.c2,
            'lambda_integral': self.lambda_integral,
        }


class Box(BaseModel):
    """
    B_w = {sum t_a V_a : floor(t_a) = w_a}, translated by lambda.
    """
    w: Tuple[int, ...]
    kappa: int = 1
    members: List[Tuple[int, ...]] = Field(default_factory=list)    # lattice points y in lambda + B_w
