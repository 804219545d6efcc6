"""
Samplers of the conditional law Q = P{Y in . | Y in lambda + L} on H_k(B).

MCMC proposes a 2 x 2 minor move: rows i1 < i2, columns j1 < j2 and a sign,
adding +-1 at (i1, j1), (i2, j2) and -+1 at (i1, j2), (i2, j1). Margins are
preserved and the moves connect H_k(B). The Metropolis ratio for the target
proportional to 1/prod l_ij! is prod old!/new!.

Rejection draws the k^2 Poissons and keeps draws landing in H_k(B); its
acceptance rate is P{Y in H_k}.
"""
import logging
import math
from abc import ABC, abstractmethod
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from itertools import islice
from typing import Dict, Iterator, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from entities.cond_model import CondModel
from entities.margin_table import MarginTable
from services.errors import ParameterError

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

BURN_IN = 10_000
THIN = 10
REJECTION_BATCH = 100_000
_PROPOSAL_BATCH = 4_096

Seed = Union[int, np.random.SeedSequence]


class SamplerType(str, Enum):
    MCMC = 'mcmc'
    REJECTION = 'rejection'


class SamplerStats(BaseModel):
    proposals: int = 0
    accepted: int = 0
    rejected_negative: int = 0      # proposals leaving the nonnegative orthant
    draws: int = 0                  # rejection: Poisson draws made

    @property
    def acceptance_rate(self) -> float:
        total = self.draws or self.proposals
        return self.accepted / total if total else 0.0


class SamplerInterface(ABC):
    """
    Interface for samplers of the conditional law on H_k(B).
    """

    def __init__(self):
        self.stats = SamplerStats()

    @abstractmethod
    def stream(self, model: CondModel) -> Iterator[MarginTable]:
        """
        Yield tables of H_k(B) distributed by Q.

        Args:
            model: Table model with n = kB
        """
        pass

    def sample(self, model: CondModel, count: int) -> List[MarginTable]:
        return list(islice(self.stream(model), count))


def initial_table(k: int, B: int) -> np.ndarray:
    """Round-robin start: row i puts its B units in columns i, i+1, ... mod k."""
    table = np.zeros((k, k), dtype=np.int64)
    for i in range(k):
        for t in range(B):
            table[i, (i + t) % k] += 1
    return table


def metropolis_ratio(table: np.ndarray, i1: int, i2: int, j1: int, j2: int, sign: int) -> float:
    """
    prod old!/new! for the move; 0 if it leaves the orthant.

    An entry going up by one contributes 1/(l+1), one going down contributes l.
    """
    plus = ((i1, j1), (i2, j2)) if sign > 0 else ((i1, j2), (i2, j1))
    minus = ((i1, j2), (i2, j1)) if sign > 0 else ((i1, j1), (i2, j2))
    ratio = 1.0
    for cell in minus:
        if table[cell] == 0:
            return 0.0
        ratio *= table[cell]
    for cell in plus:
        ratio /= table[cell] + 1
    return ratio


class MCMCSampler(SamplerInterface):
    """
    Metropolis chain over minor moves.

    After burn_in proposals, every thin-th state is yielded; `steps` bounds
    the proposals made after burn-in (None runs forever).
    """

    def __init__(self, seed: Seed, steps: Optional[int] = None, burn_in: int = BURN_IN, thin: int = THIN):
        super().__init__()
        if thin < 1 or burn_in < 0:
            raise ParameterError("thin must be positive and burn_in nonnegative")
        if steps is not None and steps < 0:
            raise ParameterError(f"steps must be nonnegative, got {steps}")
        self.seed = seed
        self.steps = steps
        self.burn_in = burn_in
        self.thin = thin

    def _proposals(self, rng: np.random.Generator, k: int) -> Iterator[tuple]:
        while True:
            rows = np.sort(np.argsort(rng.random((_PROPOSAL_BATCH, k)), axis=1)[:, :2], axis=1)
            cols = np.sort(np.argsort(rng.random((_PROPOSAL_BATCH, k)), axis=1)[:, :2], axis=1)
            signs = rng.integers(0, 2, _PROPOSAL_BATCH) * 2 - 1
            uniforms = rng.random(_PROPOSAL_BATCH)
            for a in range(_PROPOSAL_BATCH):
                yield rows[a, 0], rows[a, 1], cols[a, 0], cols[a, 1], signs[a], uniforms[a]

    def states(self, model: CondModel) -> Iterator[np.ndarray]:
        """Raw chain states as (k, k) arrays, one per kept step."""
        k, B = model.k, model.B
        if k < 2:
            raise ParameterError(f"k must be at least 2, got {k}")
        rng = np.random.default_rng(self.seed)
        table = initial_table(k, B)
        total = None if self.steps is None else self.burn_in + self.steps
        for step, (i1, i2, j1, j2, sign, u) in enumerate(self._proposals(rng, k)):
            if total is not None and step >= total:
                return
            self.stats.proposals += 1
            ratio = metropolis_ratio(table, i1, i2, j1, j2, sign)
            if ratio == 0.0:
                self.stats.rejected_negative += 1
            elif u < ratio:
                self.stats.accepted += 1
                table[i1, j1] += sign
                table[i2, j2] += sign
                table[i1, j2] -= sign
                table[i2, j1] -= sign
            done = step + 1 - self.burn_in
            if done > 0 and done % self.thin == 0:
                yield table

    def stream(self, model: CondModel) -> Iterator[MarginTable]:
        for table in self.states(model):
            yield MarginTable.from_rows(table)


class RejectionSampler(SamplerInterface):
    """Independent Poisson(n/k^2) tables kept when every margin equals B."""

    def __init__(self, seed: Seed, batch: int = REJECTION_BATCH, max_draws: Optional[int] = None):
        super().__init__()
        if batch < 1:
            raise ParameterError(f"batch must be positive, got {batch}")
        self.seed = seed
        self.batch = batch
        self.max_draws = max_draws

    def stream(self, model: CondModel) -> Iterator[MarginTable]:
        k, B = model.k, model.B
        rng = np.random.default_rng(self.seed)
        lam = model.lam.reshape(k, k)
        while self.max_draws is None or self.stats.draws < self.max_draws:
            size = self.batch if self.max_draws is None else min(self.batch, self.max_draws - self.stats.draws)
            draws = rng.poisson(lam, size=(size, k, k))
            self.stats.draws += size
            keep = np.all(draws.sum(axis=1) == B, axis=1) & np.all(draws.sum(axis=2) == B, axis=1)
            self.stats.accepted += int(keep.sum())
            for table in draws[keep]:
                yield MarginTable.from_rows(table)


class SamplerFactory:
    """
    Factory for conditional-law samplers, keyed by SamplerType.
    """

    @staticmethod
    def create(sampler_type: SamplerType, seed: Seed, **kwargs) -> SamplerInterface:
        """
        Args:
            sampler_type: mcmc or rejection
            seed: Mandatory seed
            **kwargs: Sampler options (steps, burn_in, thin or batch, max_draws)

        Raises:
            ValueError: If the type is unknown
        """
        sampler_type = SamplerType(sampler_type)
        if sampler_type is SamplerType.MCMC:
            return MCMCSampler(seed, **kwargs)
        elif sampler_type is SamplerType.REJECTION:
            return RejectionSampler(seed, **kwargs)
        raise ValueError(f"Unknown sampler type: {sampler_type}")


def mcmc_sampler(model: CondModel, steps: int, seed: Seed,
                 burn_in: int = BURN_IN, thin: int = THIN) -> Iterator[MarginTable]:
    """steps // thin tables from one chain after burn_in proposals."""
    return SamplerFactory.create(SamplerType.MCMC, seed, steps=steps, burn_in=burn_in, thin=thin).stream(model)


def rejection_sampler(model: CondModel, seed: Seed, max_draws: Optional[int] = None) -> Iterator[MarginTable]:
    """Exact draws from Q; endless unless max_draws Poisson tables is given."""
    return SamplerFactory.create(SamplerType.REJECTION, seed, max_draws=max_draws).stream(model)


def rejection_rate(model: CondModel, draws: int, seed: Seed) -> SamplerStats:
    """Acceptance counts of `draws` Poisson tables."""
    sampler = RejectionSampler(seed, max_draws=draws)
    for _ in sampler.stream(model):
        pass
    return sampler.stats


def run_chains(model: CondModel, steps: int, seed: int, chains: int = 1, workers: int = 1,
               burn_in: int = BURN_IN, thin: int = THIN) -> List[np.ndarray]:
    """
    Independent chains seeded by SeedSequence(seed).spawn(chains).

    Returns:
        Flat tables (m, k^2) per chain, in seed order
    """
    if chains < 1:
        raise ParameterError(f"chains must be positive, got {chains}")
    children = np.random.SeedSequence(seed).spawn(chains)

    def run(child: np.random.SeedSequence) -> np.ndarray:
        sampler = MCMCSampler(child, steps=steps, burn_in=burn_in, thin=thin)
        kept = [table.ravel().copy() for table in sampler.states(model)]
        logger.debug(f"Chain finished: {sampler.stats.accepted}/{sampler.stats.proposals} accepted")
        return np.array(kept, dtype=np.int64).reshape(-1, model.k * model.k)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, children))


def empirical_tv(samples: np.ndarray, exact: Dict[MarginTable, float]) -> float:
    """
    Total variation between the empirical law of flat samples and an exact pmf.
    """
    samples = np.atleast_2d(np.asarray(samples))
    if not samples.size:
        raise ParameterError("no samples")
    counts = Counter(tuple(int(v) for v in row) for row in samples)
    total = samples.shape[0]
    exact_flat = {tuple(table.flat()): p for table, p in exact.items()}
    keys = set(counts) | set(exact_flat)
    return 0.5 * math.fsum(abs(counts.get(key, 0) / total - exact_flat.get(key, 0.0)) for key in keys)


def sample_records(tables: Iterator[MarginTable], thin: int = THIN) -> Iterator[Dict]:
    """CSV rows (step, table hash, |X|^2) for a sampler stream."""
    for index, table in enumerate(tables, start=1):
        yield {'step': index * thin, 'table_hash': table.table_hash(), 'chi_square': table.chi_square()}
