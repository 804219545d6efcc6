"""
Adaptive bisection prover and certificate replay.

A claim is "rule R holds on every point of [lo, hi]". The prover keeps a
stack of cells, settles each cell with the first rule whose enclosure has the
required strict sign and bisects the rest. Cells still open at the depth
limit make the certificate INCONCLUSIVE; a point where the enclosure has the
opposite strict sign makes it FAILED.
"""
import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from entities.certificate import (
    Certificate,
    CertificateStats,
    CombineRule,
    EvidenceCell,
    Relation,
    Verdict,
)
from services.errors import DomainError, ParameterError
from services.interval.interval import Interval
from services.certify.rules import get_rule

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

MAX_DEPTH = 60
CELL_BUDGET = 10_000_000


class ProverConfig(BaseModel):
    """
    Limits of one prover run.
    """
    max_depth: int = Field(default=MAX_DEPTH, ge=1)
    cell_budget: int = Field(default=CELL_BUDGET, ge=1)
    min_width: float = Field(default=0.0, ge=0.0)


def _satisfies(enclosure: Interval, relation: Relation) -> bool:
    if relation is Relation.POSITIVE:
        return enclosure.lo > 0.0
    return enclosure.hi < 0.0


def _violates(enclosure: Interval, relation: Relation) -> bool:
    if relation is Relation.POSITIVE:
        return enclosure.hi < 0.0
    return enclosure.lo > 0.0


class AdaptiveProver:
    """
    Bisection prover over a rule list.
    """

    def __init__(self, config: Optional[ProverConfig] = None):
        self.config = config or ProverConfig()

    def _try_cell(self, cell: Interval, rules: Sequence[str], params: Dict) -> Optional[EvidenceCell]:
        for name in rules:
            rule = get_rule(name)
            try:
                enclosure = rule.enclose(cell, params)
            except DomainError:
                continue
            if _satisfies(enclosure, rule.relation):
                return EvidenceCell(
                    lo=cell.lo, hi=cell.hi, rule=name, relation=rule.relation,
                    enclosure_lo=enclosure.lo, enclosure_hi=enclosure.hi,
                )
        return None

    def _counterexample(self, cell: Interval, rule_name: str, params: Dict) -> Optional[float]:
        """A point of the cell where the primary rule is strictly violated."""
        rule = get_rule(rule_name)
        for x in (cell.lo, cell.mid, cell.hi):
            try:
                value = rule.enclose(Interval.point(x), params)
            except DomainError:
                continue
            if _violates(value, rule.relation):
                return x
        return None

    def prove(self, claim: str, domain: Interval, rules: Sequence[str],
              params: Optional[Dict] = None, boundary_rule: Optional[str] = None) -> Certificate:
        """
        Certify a claim on a domain.

        Args:
            claim: Identifier stored on the certificate
            domain: Closed interval to cover
            rules: Rule names tried in order on every cell; the first one is
                the primary rule used to look for counterexamples
            params: Parameters passed to the rules (k, r, ...)
            boundary_rule: Extra rule allowed only on cells starting at domain.lo

        Returns:
            Certificate with sorted evidence and the verdict
        """
        if not rules:
            raise ParameterError("prove needs at least one rule")
        if boundary_rule is not None and get_rule(boundary_rule).origin_only and domain.lo != 0.0:
            raise ParameterError(f"Rule {boundary_rule} only applies to domains starting at 0")
        params = dict(params or {})
        start = time.perf_counter()
        logger.debug(f"Attempting to prove {claim} on {domain}")

        evidence: List[EvidenceCell] = []
        open_cells: List[Interval] = []
        counterexample: Optional[float] = None
        stats = CertificateStats()
        stack = [(domain, 0)]

        while stack:
            cell, depth = stack.pop()
            stats.cells_examined += 1
            stats.max_depth = max(stats.max_depth, depth)
            if stats.cells_examined > self.config.cell_budget:
                logger.warning(f"Cell budget exhausted while proving {claim}")
                open_cells.append(cell)
                open_cells.extend(c for c, _ in stack)
                break

            found = self._try_cell(cell, rules, params)
            if found is None and boundary_rule is not None and cell.lo == domain.lo:
                found = self._try_cell(cell, [boundary_rule], params)
            if found is not None:
                evidence.append(found)
                continue

            if depth >= self.config.max_depth or cell.width <= self.config.min_width:
                counterexample = self._counterexample(cell, rules[0], params)
                open_cells.append(cell)
                if counterexample is not None:
                    break
                continue

            try:
                left, right = cell.split()
            except DomainError:
                open_cells.append(cell)
                continue
            if left.width == cell.width or right.width == cell.width:
                open_cells.append(cell)
                continue
            stack.append((right, depth + 1))
            stack.append((left, depth + 1))

        if counterexample is not None:
            verdict = Verdict.FAILED
        elif open_cells:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.VERIFIED

        stats.wall_time = time.perf_counter() - start
        certificate = Certificate(
            claim=claim,
            domain=domain.to_tuple(),
            parameters=params,
            verdict=verdict,
            evidence=evidence,
            stats=stats,
        )
        certificate.sort_evidence()
        if counterexample is not None:
            certificate.values['counterexample'] = (counterexample, counterexample)
        if open_cells:
            certificate.notes.append(f"{len(open_cells)} cells left open, first at {open_cells[0]}")
        if verdict is Verdict.VERIFIED and not certificate.covers_domain():
            certificate.verdict = Verdict.INCONCLUSIVE
            certificate.notes.append("evidence does not cover the domain")

        logger.info(f"{claim}: {certificate.verdict.value} after {stats.cells_examined} cells")
        return certificate

    def check_points(self, claim: str, points: Sequence[float], rule_names: Sequence[str],
                     params: Optional[Dict] = None) -> Certificate:
        """
        Certify pointwise facts, one rule per point.

        The certificate has no domain; each evidence cell is degenerate.
        """
        params = dict(params or {})
        evidence = []
        verdict = Verdict.VERIFIED
        for x, name in zip(points, rule_names):
            rule = get_rule(name)
            value = rule.enclose(Interval.point(x), params)
            evidence.append(EvidenceCell(
                lo=x, hi=x, rule=name, relation=rule.relation,
                enclosure_lo=value.lo, enclosure_hi=value.hi,
            ))
            if _violates(value, rule.relation):
                verdict = Verdict.FAILED
            elif not _satisfies(value, rule.relation) and verdict is Verdict.VERIFIED:
                verdict = Verdict.INCONCLUSIVE
        certificate = Certificate(
            claim=claim, parameters=params, verdict=verdict, evidence=evidence,
            stats=CertificateStats(cells_examined=len(evidence)),
        )
        certificate.sort_evidence()
        return certificate


def composite(claim: str, children: List[Certificate], combine: CombineRule = CombineRule.ALL,
              parameters: Optional[Dict] = None, assumptions: Optional[List[str]] = None) -> Certificate:
    """Combine child certificates into one parent certificate."""
    parent = Certificate(
        claim=claim,
        parameters=dict(parameters or {}),
        combine=combine,
        assumptions=list(assumptions or []),
    )
    for child in children:
        parent.add_child(child)
    parent.verdict = parent.combined_verdict()
    return parent


def _replay_cell(cell: EvidenceCell, params: Dict, domain: Optional[Tuple[float, float]]) -> bool:
    rule = get_rule(cell.rule)
    # origin rules lean on M(0) = M'(0) = 0 and say nothing elsewhere
    if rule.origin_only and (domain is None or not cell.lo == domain[0] == 0.0):
        return False
    try:
        enclosure = rule.enclose(Interval(cell.lo, cell.hi), params)
    except DomainError:
        return False
    return rule.relation is cell.relation and _satisfies(enclosure, rule.relation)


def replay(certificate: Certificate) -> Verdict:
    """
    Recompute a certificate's verdict from its evidence.

    Every evidence cell is re-enclosed through the rule registry; leaves must
    cover their domain, composites recombine their children. Certificates
    produced by sampling carry no evidence and keep their recorded verdict.

    Returns:
        The reproduced verdict
    """
    if certificate.children:
        verdicts = [replay(child) for child in certificate.children]
        recombined = certificate.model_copy(deep=False)
        recombined.children = [
            child.model_copy(update={'verdict': v}) for child, v in zip(certificate.children, verdicts)
        ]
        return recombined.combined_verdict()

    if 'counterexample' in certificate.values:
        return Verdict.FAILED
    if not certificate.evidence:
        return certificate.verdict
    params = dict(certificate.parameters)
    if not all(_replay_cell(cell, params, certificate.domain) for cell in certificate.evidence):
        return Verdict.INCONCLUSIVE
    if not certificate.covers_domain():
        return Verdict.INCONCLUSIVE
    return certificate.verdict if certificate.verdict is not Verdict.FAILED else Verdict.INCONCLUSIVE
