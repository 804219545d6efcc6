# Results of the exact finite-n computations over H_k
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field

from entities.margin_table import MarginTable


class ScanQuantity(str, Enum):
    """Quantities that can be scanned over B."""
    AN = 'an'             # A_n(c)
    BETA = 'beta'         # beta_n = n^((2k-1)/2) P{Y in H_k}
    TAILSUM = 'tailsum'   # exponent sum outside the delta ball
    CHAIN = 'chain'       # A_n <= C0 bound1 <= C0 exp-moment


class AnTerm(BaseModel):
    """
    Contribution of one table to A_n(c).
    """
    table: MarginTable
    log_weight: float   # log n! - sum log l_ij!
    bracket: float      # 1 - 2/k + sum (l_ij/n)^2


class BoundChainResult(BaseModel):
    """
    The three quantities of the bound chain at one (k, B, c).

    ratio = A_n / bound1 is the empirical C0; bound1 <= expmoment holds on
    every table because 1 + x <= e^x.
    """
    k: int
    B: int
    c: float
    an: float
    bound1: float
    expmoment: float
    ratio: float

    @property
    def n(self) -> int:
        return self.k * self.B

    def chain_ordered(self, rel_tol: float = 1e-12) -> bool:
        return self.bound1 <= self.expmoment * (1.0 + rel_tol)


class ShellCount(BaseModel):
    """Tables with 2^b k delta < |u| <= 2^(b+1) k delta."""
    b: int
    count: int
    order: float        # (n 2^b)^(k^2), the counting order it is compared to
    bound_term: float   # count * exp(-n eps0 (2^b k delta)^2)


class TailSumResult(BaseModel):
    """
    Exact tail exponent sum and its successive upper bounds.

    lhs <= quadratic_sum <= shell_bound; budget is n^(-(2k-1)/2).
    """
    k: int
    B: int
    c: float
    delta: float
    epsilon0: float
    lhs: float
    quadratic_sum: float
    shell_bound: float
    budget: float
    ratio: float
    excluded: int                   # tables inside the delta ball
    shells: List[ShellCount] = Field(default_factory=list)

    @property
    def n(self) -> int:
        return self.k * self.B


class ScanRow(BaseModel):
    """
    One n of a scan; unused columns stay None.
    """
    n: int
    B: int
    c: Optional[float] = None
    A_n: Optional[float] = None
    beta_n: Optional[float] = None
    bound1: Optional[float] = None
    expmoment: Optional[float] = None
    ratio: Optional[float] = None
    delta: Optional[float] = None
    tail_lhs: Optional[float] = None
    tail_quadratic: Optional[float] = None
    tail_shell_bound: Optional[float] = None
    tail_budget: Optional[float] = None


class ScanResult(BaseModel):
    """
    A scan over B with its trend summary.

    tail_slope is the least-squares slope of log(value) against n over the
    rows with B >= tail_from_B.
    """
    quantity: ScanQuantity
    k: int
    c: Optional[float] = None
    rows: List[ScanRow] = Field(default_factory=list)
    max_value: Optional[float] = None
    argmax_n: Optional[int] = None
    tail_from_B: Optional[int] = None
    tail_slope: Optional[float] = None
    partial: bool = False   # budget exceeded before the range was finished

    def values(self) -> List[float]:
        column = {
            ScanQuantity.AN: 'A_n',
            ScanQuantity.BETA: 'beta_n',
            ScanQuantity.TAILSUM: 'tail_lhs',
            ScanQuantity.CHAIN: 'ratio',
        }[self.quantity]
        return [getattr(row, column) for row in self.rows]
