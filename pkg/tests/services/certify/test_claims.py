"""
Tests for the certified inequalities psi >= lower bound, g_k >= 0 and M_k >= 0.

Run with: pytest tests/services/certify/test_claims.py
"""
import pytest

from entities.certificate import Verdict
from services.certify.claims import (
    interval_is_empty,
    linear_bound_nonneg,
    verify_gk_nonneg,
    verify_Mk_nonneg,
    verify_psi_lower,
)
from services.certify.prover import replay
from services.errors import ParameterError


def _mid(pair):
    return 0.5 * (pair[0] + pair[1])


@pytest.fixture(scope="module")
def psi_certificate():
    return verify_psi_lower(t_max=1e3)


@pytest.fixture(scope="module")
def mk_certificates():
    return {k: verify_Mk_nonneg(k) for k in (3, 4, 5, 6)}


class TestPsiLower:
    """Tests for psi(t) >= 2 log(1+2t)/(1+2t)"""

    def test_verified(self, psi_certificate):
        """All four zones are verified"""
        assert psi_certificate.verdict is Verdict.VERIFIED
        claims = [child.claim for child in psi_certificate.children]
        assert claims == ['psi_lower.origin', 'psi_lower.body', 'psi_lower.tail', 'psi_lower.tail_limit']

    def test_margin_at_one(self, psi_certificate):
        """The margin at t = 1 is about 0.04018"""
        assert _mid(psi_certificate.values['margin_at_t1']) == pytest.approx(0.040181, abs=1e-5)

    def test_replay(self, psi_certificate):
        """Replaying the evidence reproduces the verdict"""
        assert replay(psi_certificate) is Verdict.VERIFIED

    def test_small_tmax_rejected(self):
        """t_max must be at least 10"""
        with pytest.raises(ParameterError, match="t_max"):
            verify_psi_lower(t_max=5.0)


class TestGkNonneg:
    """Tests for g_k >= 0 on [-1, (k-2)/2]"""

    @pytest.mark.parametrize("k", [4, 5, 8])
    def test_verified(self, k):
        """Both branches are verified and cover the domain"""
        certificate = verify_gk_nonneg(k)
        assert certificate.verdict is Verdict.VERIFIED
        assert certificate.domain == (-1.0, (k - 2) / 2.0)
        for child in certificate.children:
            assert child.covers_domain()

    def test_bad_bmax(self):
        """b_max beyond k-1 is rejected"""
        with pytest.raises(ParameterError, match="b_max"):
            verify_gk_nonneg(4, b_max=10.0)


class TestMkNonneg:
    """Tests for M_k >= 0 and the analytic route it takes"""

    @pytest.mark.parametrize("k,route", [(3, 'convex'), (4, 'convex'), (5, 'monotone'), (6, 'interior_minimum')])
    def test_route(self, mk_certificates, k, route):
        """The curvature of M_k selects the proof route"""
        certificate = mk_certificates[k]
        assert certificate.verdict is Verdict.VERIFIED
        analytic = certificate.find('mk_nonneg.analytic')
        assert analytic.parameters['route'] == route

    def test_concavity_interval_k5(self, mk_certificates):
        """b_5' is about 2.1922 and M_5' is still positive there"""
        values = mk_certificates[5].values
        assert _mid(values['b_k_prime']) == pytest.approx(2.19226, abs=1e-4)
        assert _mid(values['slope_at_b_k_prime']) == pytest.approx(0.0555, abs=5e-3)
        assert values['slope_at_b_k_prime'][0] > 0.0

    def test_interior_minimiser_k6(self, mk_certificates):
        """For k = 6 the minimiser b* lies in (k1-2, k1-1)"""
        b_star = mk_certificates[6].values['b_star']
        assert 3.0 < b_star[0] <= b_star[1] < 4.0

    def test_replay(self, mk_certificates):
        """Replay agrees for every route"""
        for certificate in mk_certificates.values():
            assert replay(certificate) is Verdict.VERIFIED

    def test_small_k(self):
        """k = 2 is rejected"""
        with pytest.raises(ParameterError):
            verify_Mk_nonneg(2)


class TestClosedForms:
    """Tests for the closed-form side checks"""

    def test_interval_is_empty(self):
        """I_k is empty exactly for k = 3, 4 among small k"""
        assert [k for k in range(3, 12) if interval_is_empty(k)] == [3, 4]

    def test_linear_bound_sign(self):
        """(k1-3) log k1 >= 0 once k >= 4"""
        assert linear_bound_nonneg(6)
        assert not linear_bound_nonneg(3)
