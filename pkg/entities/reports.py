# Finite-n reports of the conditioned Poisson local limit checks
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from entities.certificate import Verdict


class BoxConvention(str, Enum):
    """Which integer part defines the box index of a point."""
    CORNER = 'corner'       # floor(t) = w, lattice points at the box corners
    CENTERED = 'centered'   # floor(t + 1/2) = w, lattice points at the box centres


class SandwichRow(BaseModel):
    """
    One box of W_delta.

    ratio = nu^((q-s)/2) P{Y in lambda + B_w} / beta(lambda); lower and upper
    are the Gaussian bounds at the report's theta.
    """
    w: Tuple[int, ...]
    prob_exact: float
    ratio: float
    normal_mass: float              # N(D^-1 B_w)
    lower: float
    upper: float
    passed: bool
    theta_min: float                # smallest theta >= 1 passing this box
    cond_exact: Optional[float] = None      # Q(B_w)
    cond_lower: Optional[float] = None
    cond_upper: Optional[float] = None
    cond_passed: Optional[bool] = None


class SandwichReport(BaseModel):
    """
    Box sandwich over W_delta = {max |w_a| <= delta nu} for one model.
    """
    k: int
    n: int
    theta: float
    delta: float
    radius: int                     # floor(delta nu)
    convention: BoxConvention = BoxConvention.CORNER
    kappa: int
    gamma: float
    mu: float
    beta: float
    leb_box0: float                 # Leb(D^-1 B_0) = nu^(-s/2) mu
    prob_hyperplane: Optional[float] = None
    hyperplane_ratio: Optional[float] = None
    rows: List[SandwichRow] = Field(default_factory=list)
    outside_support: int = 0        # boxes of W_delta with no table of H_k
    theta_min: Optional[float] = None
    passed: bool = False
    cond_passed: Optional[bool] = None
    truncated: bool = False
    notes: List[str] = Field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        if self.truncated or not self.rows:
            return Verdict.INCONCLUSIVE
        return Verdict.VERIFIED if self.passed else Verdict.FAILED

    def failing_rows(self) -> List[SandwichRow]:
        return [row for row in self.rows if not row.passed]


class PointwiseReport(BaseModel):
    """
    theta^-1 phi(theta x) <= nu^(q/2) P{Y = l} / gamma <= theta phi(x / theta)
    on every table with max_i |l_i - lambda_i| / lambda_i <= delta.
    """
    k: int
    n: int
    theta: float
    delta: float
    gamma: float
    checked: int = 0
    passed: bool = False
    theta_min: Optional[float] = None
    worst_table: Optional[Tuple[int, ...]] = None
    largest_delta: Optional[float] = None


class TailsReport(BaseModel):
    """
    Mass of the lattice outside L_delta against the coordinate-wise bound.
    """
    k: int
    n: int
    delta: float
    delta0: float                   # C1 delta / (2 sqrt(q))
    radius: int
    exact_tail: float               # P{Y in lambda + L, Y not in lambda + L_delta}
    bound: float                    # sum_i of the Poisson tail bound at delta0
    bound_exact_tails: float        # same sum with exact Poisson tails
    implication_holds: bool         # Y outside L_delta forces |Y_i - lambda_i| > delta0 nu for some i
    gaussian_outside: Optional[float] = None
    gaussian_bound: float = 0.0
    exact_rate: Optional[float] = None      # -log(exact_tail) / nu
    bound_rate: Optional[float] = None


class HyperplaneReport(BaseModel):
    k: int
    n: int
    prob: float
    beta: float
    ratio: float

    @property
    def theta_min(self) -> float:
        """Smallest theta with ratio in [1/theta, theta]."""
        return max(self.ratio, 1.0 / self.ratio)


class GofReport(BaseModel):
    """
    Chi-square statistic |X|^2 under the conditional law, its exponential
    moment and the distance to chi^2 with R = (k-1)^2 degrees of freedom.
    """
    k: int
    B: int
    c: float
    J: float
    R: int
    mode: str
    samples: int                    # tables (exact) or draws (mcmc)
    seed: Optional[int] = None
    chi2_mean: float
    chi2_var: float
    moment: float                   # Q exp(J |X|^2)
    moment_se: Optional[float] = None
    truncated_moment: float         # Q exp(J |X|^2) 1{|X| <= delta sqrt(nu)}
    theta: float
    delta: float
    normal_bound: Optional[float] = None    # theta (1 - 2 theta^2 J)^(-R/2)
    divergent: bool = False
    bound_holds: Optional[bool] = None
    ks_distance: float

    @property
    def n(self) -> int:
        return self.k * self.B
