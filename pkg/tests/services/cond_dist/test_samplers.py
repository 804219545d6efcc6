"""
Tests for the MCMC and rejection samplers of the conditional law.

Run with: pytest tests/services/cond_dist/test_samplers.py
"""
import math
from itertools import islice

import numpy as np
import pytest

from entities.margin_table import MarginTable
from services.cond_dist.model import build_table_model
from services.cond_dist.samplers import (
    MCMCSampler,
    RejectionSampler,
    SamplerFactory,
    SamplerType,
    empirical_tv,
    initial_table,
    mcmc_sampler,
    metropolis_ratio,
    rejection_sampler,
    rejection_rate,
    run_chains,
    sample_records,
)
from services.errors import ParameterError
from services.tables.quantities import cond_pmf_p2, prob_Y_in_Hk

IDENTITY_2 = MarginTable.from_rows([[1, 0], [0, 1]])
SWAP_2 = MarginTable.from_rows([[0, 1], [1, 0]])


@pytest.fixture(scope="module")
def model_k3_n6():
    return build_table_model(3, 6)


class TestMetropolisRatio:
    """Tests for the acceptance ratio of a minor move"""

    def test_detailed_balance(self):
        """A move and its reverse have reciprocal ratios equal to the pmf ratio"""
        table = np.array([[2, 1, 0], [0, 1, 2], [1, 1, 1]])
        forward = metropolis_ratio(table, 0, 1, 0, 2, -1)
        assert forward == pytest.approx(4.0)
        moved = np.ones((3, 3), dtype=np.int64)
        backward = metropolis_ratio(moved, 0, 1, 0, 2, 1)
        assert backward == pytest.approx(0.25)

    def test_leaving_the_orthant(self):
        """A move through a zero entry is never accepted"""
        table = np.array([[2, 1, 0], [0, 1, 2], [1, 1, 1]])
        assert metropolis_ratio(table, 0, 1, 0, 2, 1) == 0.0

    def test_initial_table(self):
        """The start has every margin equal to B"""
        table = initial_table(4, 3)
        assert np.all(table.sum(axis=0) == 3)
        assert np.all(table.sum(axis=1) == 3)


class TestMCMCSampler:
    """Tests for the Metropolis chain"""

    def test_counts(self, model_k3_n9):
        """steps // thin tables after burn_in proposals"""
        sampler = MCMCSampler(3, steps=1000, burn_in=50, thin=10)
        tables = list(sampler.stream(model_k3_n9))
        assert len(tables) == 100
        assert all(table.B == 3 for table in tables)
        assert sampler.stats.proposals == 1050
        assert sampler.stats.accepted + sampler.stats.rejected_negative <= sampler.stats.proposals

    def test_bad_options(self):
        """thin must be positive"""
        with pytest.raises(ParameterError, match="thin"):
            MCMCSampler(0, thin=0)

    @pytest.mark.slow
    def test_matches_exact_law(self, model_k3_n6):
        """On H_3(2) a million proposals bring the chain within 0.02 of p_2 in total variation"""
        samples = run_chains(model_k3_n6, steps=1_000_000, seed=7)[0]
        assert samples.shape == (100_000, 9)
        assert empirical_tv(samples, cond_pmf_p2(3, 2)) <= 0.02

    def test_chains_are_reproducible(self, model_k3_n9):
        """Same seed, same chains; spawned chains differ"""
        first = run_chains(model_k3_n9, steps=2000, seed=11, chains=2, burn_in=100)
        second = run_chains(model_k3_n9, steps=2000, seed=11, chains=2, burn_in=100, workers=2)
        assert len(first) == 2
        for a, b in zip(first, second):
            assert np.array_equal(a, b)
        assert first[0].shape == (200, 9)
        assert not np.array_equal(first[0], first[1])

    def test_margins_preserved(self, model_k3_n9):
        """Every kept state lies in H_3(3)"""
        tables = run_chains(model_k3_n9, steps=5000, seed=2, burn_in=0, thin=1)[0].reshape(-1, 3, 3)
        assert np.all(tables >= 0)
        assert np.all(tables.sum(axis=1) == 3)
        assert np.all(tables.sum(axis=2) == 3)

    def test_bad_chain_count(self, model_k3_n9):
        """At least one chain"""
        with pytest.raises(ParameterError, match="chains"):
            run_chains(model_k3_n9, steps=10, seed=0, chains=0)


class TestRejectionSampler:
    """Tests for the rejection sampler"""

    def test_acceptance_rate(self, model_k3_n9):
        """The acceptance rate estimates P{Y in H_3(3)}"""
        stats = rejection_rate(model_k3_n9, draws=200_000, seed=4)
        p = prob_Y_in_Hk(3, 3)
        se = np.sqrt(p * (1 - p) / 200_000)
        assert stats.draws == 200_000
        assert abs(stats.acceptance_rate - p) <= 4 * se

    @pytest.mark.slow
    def test_acceptance_rate_permutations(self):
        """At n = 3 the rate is within 3 SE of P{Y in H_3(1)} = 6 e^-3 / 27"""
        draws = 1_000_000
        stats = rejection_rate(build_table_model(3, 3), draws=draws, seed=4)
        p = prob_Y_in_Hk(3, 1)
        assert p == pytest.approx(6 * math.exp(-3) / 27, rel=1e-12)
        assert abs(stats.acceptance_rate - p) <= 3 * np.sqrt(p * (1 - p) / draws)

    def test_draws_lie_in_hk(self, model_k3_n9):
        """Accepted tables have margins B"""
        tables = RejectionSampler(1, batch=10_000).sample(model_k3_n9, 20)
        assert len(tables) == 20
        assert all(table.B == 3 for table in tables)


class TestSamplerStreams:
    """Tests for the mcmc_sampler and rejection_sampler streams"""

    @pytest.mark.parametrize("steps,thin", [(1000, 10), (1000, 7), (30, 1)])
    def test_mcmc_length(self, model_k3_n9, steps, thin):
        """One table every thin proposals"""
        tables = list(mcmc_sampler(model_k3_n9, steps, seed=5, burn_in=20, thin=thin))
        assert len(tables) == steps // thin
        assert all(table.B == 3 for table in tables)

    def test_mcmc_same_seed(self, model_k3_n9):
        """Same seed, same stream"""
        first = [t.flat() for t in mcmc_sampler(model_k3_n9, 2000, seed=9, burn_in=100)]
        second = [t.flat() for t in mcmc_sampler(model_k3_n9, 2000, seed=9, burn_in=100)]
        other = [t.flat() for t in mcmc_sampler(model_k3_n9, 2000, seed=10, burn_in=100)]
        assert first == second
        assert first != other

    def test_rejection_same_seed(self, model_k3_n9):
        """Same seed, same draws"""
        first = [t.flat() for t in islice(rejection_sampler(model_k3_n9, seed=3), 25)]
        second = [t.flat() for t in islice(rejection_sampler(model_k3_n9, seed=3), 25)]
        assert len(first) == 25
        assert first == second

    def test_rejection_draw_limit(self, model_k3_n9):
        """max_draws bounds the Poisson tables drawn, not the tables kept"""
        kept = list(rejection_sampler(model_k3_n9, seed=3, max_draws=50_000))
        p = prob_Y_in_Hk(3, 3)
        assert 0 < len(kept) < 50_000
        assert abs(len(kept) / 50_000 - p) <= 5 * np.sqrt(p * (1 - p) / 50_000)

    def test_records_from_stream(self, model_k3_n9):
        """sample_records numbers an mcmc stream by proposals"""
        records = list(sample_records(mcmc_sampler(model_k3_n9, 100, seed=1, burn_in=0, thin=20), thin=20))
        assert [record['step'] for record in records] == [20, 40, 60, 80, 100]
        assert all(record['chi_square'] >= 0.0 for record in records)


class TestFactory:
    """Tests for SamplerFactory"""

    def test_create(self):
        """Types map to their samplers"""
        assert isinstance(SamplerFactory.create(SamplerType.MCMC, 0, steps=10), MCMCSampler)
        assert isinstance(SamplerFactory.create('rejection', 0), RejectionSampler)

    def test_unknown(self):
        """An unknown type is rejected"""
        with pytest.raises(ValueError):
            SamplerFactory.create('gibbs', 0)


class TestHelpers:
    """Tests for the TV distance and sample records"""

    def test_tv(self):
        """TV of a matching and a degenerate sample"""
        exact = {IDENTITY_2: 0.5, SWAP_2: 0.5}
        assert empirical_tv(np.array([IDENTITY_2.flat(), SWAP_2.flat()]), exact) == pytest.approx(0.0)
        assert empirical_tv(np.array([IDENTITY_2.flat(), IDENTITY_2.flat()]), exact) == pytest.approx(0.5)

    def test_tv_needs_samples(self):
        """An empty sample is rejected"""
        with pytest.raises(ParameterError, match="no samples"):
            empirical_tv(np.array([]), {IDENTITY_2: 1.0})

    def test_sample_records(self):
        """Steps count proposals after burn-in"""
        records = list(sample_records(iter([IDENTITY_2, SWAP_2]), thin=5))
        assert [record['step'] for record in records] == [5, 10]
        assert records[0]['table_hash'] == IDENTITY_2.table_hash()
        assert records[0]['chi_square'] == pytest.approx(IDENTITY_2.chi_square())
