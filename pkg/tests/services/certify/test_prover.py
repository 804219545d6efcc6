"""
Tests for the adaptive prover, certificate composition and replay.

Run with: pytest tests/services/certify/test_prover.py
"""
import pytest

from entities.certificate import Certificate, CombineRule, EvidenceCell, Verdict
from services.certify.prover import AdaptiveProver, ProverConfig, composite, replay
from services.certify.rules import evaluate_rule, get_rule
from services.errors import ParameterError
from services.interval.interval import Interval


@pytest.fixture
def prover():
    return AdaptiveProver()


def test_prove_positive_slope(prover):
    # M_5' > 0 on [0.5, 1] needs only a few cells
    certificate = prover.prove('slope', Interval(0.5, 1.0), ['mk_slope'], {'k': 5})

    assert certificate.verdict is Verdict.VERIFIED
    assert certificate.covers_domain()
    assert certificate.stats.cells_examined >= len(certificate.evidence)
    assert [cell.lo for cell in certificate.evidence] == sorted(cell.lo for cell in certificate.evidence)


def test_prove_reports_counterexample():
    # M_5' < 0 is false on [0.5, 1]; the depth limit forces a counterexample search
    shallow = AdaptiveProver(ProverConfig(max_depth=3))
    certificate = shallow.prove('wrong_sign', Interval(0.5, 1.0), ['mk_slope_negative'], {'k': 5})

    assert certificate.verdict is Verdict.FAILED
    assert 'counterexample' in certificate.values
    assert replay(certificate) is Verdict.FAILED


def test_boundary_rule_only_at_domain_start(prover):
    # M_5 vanishes at 0, so the origin cell needs the curvature rule
    certificate = prover.prove('value', Interval(0.0, 1.0), ['mk_value'], {'k': 5},
                               boundary_rule='mk_value_origin')

    assert certificate.verdict is Verdict.VERIFIED
    origin_rules = {cell.rule for cell in certificate.evidence if cell.lo == 0.0}
    assert origin_rules == {'mk_value_origin'}


def test_origin_rule_needs_zero_start(prover):
    with pytest.raises(ParameterError, match="domains starting at 0"):
        prover.prove('value', Interval(0.3, 1.0), ['mk_value'], {'k': 5},
                     boundary_rule='mk_value_origin')


def test_prove_needs_rules(prover):
    with pytest.raises(ParameterError, match="at least one rule"):
        prover.prove('nothing', Interval(0.0, 1.0), [])


def test_unknown_rule():
    with pytest.raises(ParameterError, match="Unknown evidence rule"):
        get_rule('no_such_rule')


def test_rule_needs_k():
    with pytest.raises(ParameterError, match="parameter k"):
        evaluate_rule('mk_value', Interval(0.1, 0.2), {})


def test_check_points(prover):
    # Both endpoint slopes of the k = 6 interior-minimum argument
    certificate = prover.check_points('signs', [3.0, 4.0], ['mk_slope_negative', 'mk_slope'], {'k': 6})

    assert certificate.verdict is Verdict.VERIFIED
    assert certificate.domain is None
    assert len(certificate.evidence) == 2


class TestCertificate:
    """Tests for coverage, composition and replay of certificates"""

    def test_covers_domain_detects_gap(self):
        """A gap between cells breaks coverage"""
        cells = [
            EvidenceCell(lo=0.0, hi=0.4, rule='mk_value', enclosure_lo=1.0, enclosure_hi=2.0),
            EvidenceCell(lo=0.5, hi=1.0, rule='mk_value', enclosure_lo=1.0, enclosure_hi=2.0),
        ]
        certificate = Certificate(claim='gap', domain=(0.0, 1.0), evidence=cells)
        assert not certificate.covers_domain()

    def test_replay_rejects_partial_cover(self):
        """Evidence that misses part of the domain replays as inconclusive"""
        cell = EvidenceCell(lo=0.5, hi=1.0, rule='mk_slope', enclosure_lo=0.1, enclosure_hi=0.5)
        certificate = Certificate(claim='partial', domain=(0.0, 1.0), parameters={'k': 5},
                                  verdict=Verdict.VERIFIED, evidence=[cell])
        assert replay(certificate) is Verdict.INCONCLUSIVE

    def test_replay_rejects_origin_rule_off_zero(self):
        """M'' > 0 away from 0 says nothing about M, so the cell does not replay"""
        lo, hi = 0.3, 0.6
        enclosure = get_rule('mk_value_origin').enclose(Interval(lo, hi), {'k': 5, 'r': 1})
        cell = EvidenceCell(lo=lo, hi=hi, rule='mk_value_origin',
                            enclosure_lo=enclosure.lo, enclosure_hi=enclosure.hi)
        certificate = Certificate(claim='mk_nonneg.direct', domain=(lo, hi), parameters={'k': 5, 'r': 1},
                                  verdict=Verdict.VERIFIED, evidence=[cell])
        assert cell.holds()
        assert certificate.covers_domain()
        assert replay(certificate) is Verdict.INCONCLUSIVE

    def test_replay_accepts_origin_rule_at_zero(self, prover):
        """The same rule on a cell starting at 0 still replays"""
        certificate = prover.prove('value', Interval(0.0, 1.0), ['mk_value'], {'k': 5},
                                   boundary_rule='mk_value_origin')
        assert replay(certificate) is Verdict.VERIFIED

    def test_combine_any(self):
        """ANY accepts one verified route"""
        verified = Certificate(claim='a', verdict=Verdict.VERIFIED)
        open_route = Certificate(claim='b', verdict=Verdict.INCONCLUSIVE)
        assert composite('p', [verified, open_route], combine=CombineRule.ANY).verdict is Verdict.VERIFIED
        assert composite('p', [verified, open_route]).verdict is Verdict.INCONCLUSIVE

    def test_failed_child_dominates(self):
        """A failed child fails an ALL parent"""
        children = [Certificate(claim='a', verdict=Verdict.FAILED),
                    Certificate(claim='b', verdict=Verdict.INCONCLUSIVE)]
        assert composite('p', children).verdict is Verdict.FAILED

    def test_find_and_summary(self):
        """find walks the tree and the summary counts children"""
        parent = composite('p', [Certificate(claim='child', verdict=Verdict.VERIFIED)])
        assert parent.find('child').claim == 'child'
        assert parent.find('missing') is None
        assert parent.get_summary()['children'] == 1

    def test_wall_time_not_serialised(self):
        """Timing stays out of the artifact"""
        certificate = Certificate(claim='t')
        certificate.stats.wall_time = 1.5
        assert 'wall_time' not in certificate.model_dump()['stats']
