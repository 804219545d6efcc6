# Certificate entity recording interval evidence for an inequality
# Pure data plus coverage logic; the provers live in services/certify
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field


class Verdict(str, Enum):
    """Outcome of a verification."""
    VERIFIED = 'verified'           # Every cell of the domain satisfies the claim
    FAILED = 'failed'               # A point violating the claim was found
    INCONCLUSIVE = 'inconclusive'   # Cells left undecided at max depth or budget


class Relation(str, Enum):
    """What an evidence cell's enclosure must satisfy."""
    POSITIVE = 'positive'   # enclosure strictly above 0
    NEGATIVE = 'negative'   # enclosure strictly below 0


class CombineRule(str, Enum):
    """How child verdicts combine into the parent verdict."""
    ALL = 'all'     # every child VERIFIED
    ANY = 'any'     # at least one child VERIFIED (independent routes)


ParameterValue = Union[int, float, str]


class EvidenceCell(BaseModel):
    """
    One subinterval of a claim's domain with the enclosure that settles it.
    """
    lo: float
    hi: float
    rule: str
    relation: Relation = Relation.POSITIVE
    enclosure_lo: float
    enclosure_hi: float

    def holds(self) -> bool:
        """
        Check the recorded enclosure against the relation.

        Returns:
            True if the enclosure is strictly signed as required
        """
        if self.relation is Relation.POSITIVE:
            return self.enclosure_lo > 0.0
        return self.enclosure_hi < 0.0


class CertificateStats(BaseModel):
    """
    Work counters of a prover run.

    wall_time is kept in memory only so that artifacts stay byte-identical.
    """
    cells_examined: int = 0
    max_depth: int = 0
    wall_time: float = Field(default=0.0, exclude=True)

    def merge(self, other: "CertificateStats") -> None:
        self.cells_examined += other.cells_examined
        self.max_depth = max(self.max_depth, other.max_depth)
        self.wall_time += other.wall_time


class Certificate(BaseModel):
    """
    Replayable record establishing (or failing to establish) a claim.

    Leaf certificates carry evidence cells covering `domain`; composite
    certificates combine their children with `combine`.
    """
    claim: str
    domain: Optional[Tuple[float, float]] = None
    parameters: Dict[str, ParameterValue] = Field(default_factory=dict)
    verdict: Verdict = Verdict.INCONCLUSIVE
    evidence: List[EvidenceCell] = Field(default_factory=list)
    stats: CertificateStats = Field(default_factory=CertificateStats)
    children: List["Certificate"] = Field(default_factory=list)
    combine: CombineRule = CombineRule.ALL
    assumptions: List[str] = Field(default_factory=list)
    values: Dict[str, Tuple[float, float]] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    # Business logic methods

    def is_verified(self) -> bool:
        return self.verdict is Verdict.VERIFIED

    def sort_evidence(self) -> None:
        """Order evidence by subinterval lower bound for deterministic output."""
        self.evidence.sort(key=lambda cell: (cell.lo, cell.hi, cell.rule))

    def covers_domain(self) -> bool:
        """
        Check that the evidence cells tile the claimed domain without gaps.

        Returns:
            True if the sorted cells start at domain[0], end at domain[1] and
            each cell starts where the previous one ended (or earlier)
        """
        if self.domain is None:
            return True
        if not self.evidence:
            return False
        cells = sorted(self.evidence, key=lambda cell: cell.lo)
        lo, hi = self.domain
        if cells[0].lo > lo:
            return False
        reach = cells[0].hi
        for cell in cells[1:]:
            if cell.lo > reach:
                return False
            reach = max(reach, cell.hi)
        return reach >= hi

    def combined_verdict(self) -> Verdict:
        """Verdict implied by the children alone."""
        verdicts = [child.verdict for child in self.children]
        if not verdicts:
            return self.verdict
        if self.combine is CombineRule.ANY:
            if Verdict.VERIFIED in verdicts:
                return Verdict.VERIFIED
        else:
            if all(v is Verdict.VERIFIED for v in verdicts):
                return Verdict.VERIFIED
        if Verdict.FAILED in verdicts:
            return Verdict.FAILED
        return Verdict.INCONCLUSIVE

    def add_child(self, child: "Certificate") -> None:
        self.children.append(child)
        self.stats.merge(child.stats)

    def find(self, claim: str) -> Optional["Certificate"]:
        """Depth-first search for a certificate by claim name."""
        if self.claim == claim:
            return self
        for child in self.children:
            found = child.find(claim)
            if found is not None:
                return found
        return None

    def get_summary(self) -> dict:
        return {
            'claim': self.claim,
            'verdict': self.verdict.value,
            'cells': self.stats.cells_examined,
            'max_depth': self.stats.max_depth,
            'children': len(self.children),
        }
