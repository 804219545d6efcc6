# Two-value reduction tables: candidate minimisers g_k'(a) = theta = g_k'(b)
from typing import List, Optional

from pydantic import BaseModel, Field

from entities.certificate import Certificate, Verdict


class TwoValueRow(BaseModel):
    """
    One theta of the reduction grid.

    a_theta and b_theta are the two solutions of g_k'(s) = theta, one in
    (-1, 0] and one in [0, k-1); G is r g_k(b) + (k-r) g_k(a).
    """
    theta: float
    a_lo: Optional[float] = None
    a_hi: Optional[float] = None
    b_lo: Optional[float] = None
    b_hi: Optional[float] = None
    g_value: Optional[float] = None
    balance: Optional[float] = None     # (k-r) a + r b, zero at admissible theta
    status: Verdict = Verdict.INCONCLUSIVE

    @property
    def a_mid(self) -> Optional[float]:
        return None if self.a_lo is None else 0.5 * (self.a_lo + self.a_hi)

    @property
    def b_mid(self) -> Optional[float]:
        return None if self.b_lo is None else 0.5 * (self.b_lo + self.b_hi)


class AdmissiblePoint(BaseModel):
    """A theta where the two values also satisfy (k-r) a + r b = 0."""
    theta: float
    a: float
    b: float
    g_value: float
    m_value: float      # M_{r,k}(b), equal to g_value up to rounding


class TwoValueTable(BaseModel):
    """
    Output of the two-value reduction for one (k, r).
    """
    k: int
    r: int
    rows: List[TwoValueRow] = Field(default_factory=list)
    admissible: List[AdmissiblePoint] = Field(default_factory=list)
    concavity: Optional[Certificate] = None

    def bracketed_rows(self) -> List[TwoValueRow]:
        return [row for row in self.rows if row.status is Verdict.VERIFIED]

    def min_admissible_value(self) -> Optional[float]:
        """Smallest G over the admissible points, or None if there are none."""
        if not self.admissible:
            return None
        return min(point.g_value for point in self.admissible)
