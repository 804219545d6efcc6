"""
The quadratic comparison sum_j h(u_j) >= rho_k sum_j u_j^2 on
{sum u_j = 0, -1 <= u_j <= k-1}.
"""
import logging
import time
from abc import ABC, abstractmethod
from enum import Enum
from typing import Dict, Optional

import numpy as np
from scipy.optimize import minimize

from entities.certificate import Certificate, CertificateStats, Verdict
from services.errors import ParameterError
from services.certify.claims import verify_gk_nonneg, verify_Mk_nonneg
from services.certify.prover import ProverConfig, composite
from services.scalar_fn.rate_functions import G_k, rho_k

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

DEFAULT_SAMPLES = 100_000
DEFAULT_STARTS = 1_000
VIOLATION_TOL = -1e-12
_BATCH = 10_000
_DESCENT_STEPS = 200
_DESCENT_RATE = 0.05
_POLISHED = 5
# Keeps log(1+u) finite in gradients at the u = -1 face
_FACE_GAP = 1e-12

TRUSTED_REDUCTION = [
    "a minimiser has no coordinate at -1: near the face the objective changes like eps log eps",
    "at an interior minimiser g_k'(u_j) equals a common multiplier theta, and g_k' is concave, "
    "so the coordinates take at most two values a <= 0 <= b; with r coordinates equal to b the "
    "objective is M_{r,k}(b)",
    "for r >= 2, M_{r,k}(b) = r g_k(b) + (k-r) g_k(a) with b <= (k-2)/2 and a in [-1, 0], a sum "
    "of nonnegative terms once g_k >= 0 on [-1, (k-2)/2]",
]


class ProofMode(str, Enum):
    """How the inequality is established."""
    CERTIFIED = 'certified'   # interval certificates plus the trusted reduction
    SAMPLED = 'sampled'       # random points and local minimisation


class HIneqProverInterface(ABC):
    """
    Interface for provers of the quadratic comparison.
    """

    @abstractmethod
    def prove(self, k: int) -> Certificate:
        """
        Establish the inequality for one k.

        Args:
            k: Table size, >= 3

        Returns:
            Certificate for claim 'h_ineq'
        """
        pass


class CertifiedHIneqProver(HIneqProverInterface):
    """g_k >= 0 covers every r >= 2; M_k >= 0 covers r = 1."""

    def __init__(self, config: Optional[ProverConfig] = None):
        self.config = config

    def prove(self, k: int) -> Certificate:
        if k < 3:
            raise ParameterError(f"k must be at least 3, got {k}")
        children = [verify_Mk_nonneg(k, self.config)]
        if k >= 4:
            children.insert(0, verify_gk_nonneg(k, config=self.config))
        certificate = composite(
            'h_ineq', children,
            parameters={'k': k, 'mode': ProofMode.CERTIFIED.value},
            assumptions=list(TRUSTED_REDUCTION),
        )
        for child in children:
            certificate.values.update(child.values)
        return certificate


def _project(p: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of each row onto {p >= 0, sum p = total}."""
    k = p.shape[1]
    ordered = -np.sort(-p, axis=1)
    excess = np.cumsum(ordered, axis=1) - total
    index = np.arange(1, k + 1)
    positive = ordered - excess / index > 0
    last = k - 1 - np.argmax(positive[:, ::-1], axis=1)
    shift = excess[np.arange(p.shape[0]), last] / (last + 1)
    return np.maximum(p - shift[:, None], 0.0)


def to_constraint_set(u: np.ndarray, k: int) -> np.ndarray:
    """Nearest point of {sum u = 0, u >= -1} to u; the upper bound k-1 then holds too."""
    return _project(np.asarray(u, dtype=float).reshape(1, -1) + 1.0, float(k))[0] - 1.0


def _gradient(u: np.ndarray, rho: float) -> np.ndarray:
    return np.log1p(np.maximum(u, -1.0 + _FACE_GAP)) - 2.0 * rho * u


class SampledHIneqProver(HIneqProverInterface):
    """
    Dirichlet samples of the constraint set, projected gradient descent from
    many starts and an SLSQP polish of the best local minima.
    """

    def __init__(self, samples: int = DEFAULT_SAMPLES, starts: int = DEFAULT_STARTS, seed: int = 0):
        if samples < 1 or starts < 1:
            raise ParameterError("samples and starts must be positive")
        self.samples = samples
        self.starts = starts
        self.seed = seed

    def _rng(self, k: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(k,)))

    def _descend(self, u: np.ndarray, k: int) -> np.ndarray:
        rho = rho_k(k)
        for _ in range(_DESCENT_STEPS):
            step = u - _DESCENT_RATE * _gradient(u, rho)
            u = _project(step + 1.0, float(k)) - 1.0
        return u

    def _polish(self, u0: np.ndarray, k: int) -> np.ndarray:
        rho = rho_k(k)
        result = minimize(
            lambda u: G_k(u, k),
            u0,
            jac=lambda u: _gradient(u, rho),
            method='SLSQP',
            bounds=[(-1.0, k - 1.0)] * k,
            constraints=[{'type': 'eq', 'fun': lambda u: np.sum(u), 'jac': lambda u: np.ones_like(u)}],
        )
        return to_constraint_set(result.x, k)

    def prove(self, k: int) -> Certificate:
        if k < 3:
            raise ParameterError(f"k must be at least 3, got {k}")
        start = time.perf_counter()
        rng = self._rng(k)

        best_value = np.inf
        best_point: Optional[np.ndarray] = None
        remaining = self.samples
        while remaining > 0:
            size = min(_BATCH, remaining)
            u = k * rng.dirichlet(np.ones(k), size=size) - 1.0
            values = G_k(u, k)
            index = int(np.argmin(values))
            if values[index] < best_value:
                best_value = float(values[index])
                best_point = u[index]
            remaining -= size

        starts = k * rng.dirichlet(np.ones(k), size=self.starts) - 1.0
        local = self._descend(starts, k)
        local_values = G_k(local, k)
        order = np.argsort(local_values)[:_POLISHED]
        polished = [self._polish(local[i], k) for i in order]
        polished_values = [float(G_k(u, k)) for u in polished]
        local_min = min(float(local_values[order[0]]), min(polished_values))

        overall = min(best_value, local_min)
        verdict = Verdict.FAILED if overall < VIOLATION_TOL else Verdict.VERIFIED
        certificate = Certificate(
            claim='h_ineq',
            parameters={
                'k': k, 'mode': ProofMode.SAMPLED.value,
                'samples': self.samples, 'starts': self.starts, 'seed': self.seed,
            },
            verdict=verdict,
            stats=CertificateStats(cells_examined=self.samples + self.starts,
                                   wall_time=time.perf_counter() - start),
            assumptions=["sampled evidence: random points and local minima, not an enclosure"],
        )
        certificate.values['min_sampled'] = (best_value, best_value)
        certificate.values['min_local'] = (local_min, local_min)
        if best_point is not None:
            certificate.notes.append(f"best sampled point: {np.array2string(best_point, precision=6)}")
        logger.info(f"Sampled h inequality for k={k}: min {overall:.3e}, {verdict.value}")
        return certificate


class HIneqProverFactory:
    """
    Factory for h-inequality provers, keyed by ProofMode.
    """

    _instances: Dict[ProofMode, HIneqProverInterface] = {}

    @staticmethod
    def create(mode: ProofMode, **kwargs) -> HIneqProverInterface:
        """
        Create a prover for the mode.

        Args:
            mode: certified or sampled
            **kwargs: Passed to the prover constructor (config, or samples/starts/seed)

        Raises:
            ValueError: If the mode is unknown
        """
        mode = ProofMode(mode)
        if not kwargs and mode in HIneqProverFactory._instances:
            return HIneqProverFactory._instances[mode]
        if mode is ProofMode.CERTIFIED:
            prover: HIneqProverInterface = CertifiedHIneqProver(**kwargs)
        elif mode is ProofMode.SAMPLED:
            prover = SampledHIneqProver(**kwargs)
        else:
            raise ValueError(f"Unknown proof mode: {mode}")
        if not kwargs:
            HIneqProverFactory._instances[mode] = prover
        return prover


def verify_h_ineq(k: int, mode: ProofMode = ProofMode.CERTIFIED, **kwargs) -> Certificate:
    """
    Establish sum_j h(u_j) >= rho_k sum_j u_j^2 for one k.

    Args:
        k: Table size, >= 3
        mode: certified (interval certificates) or sampled
        **kwargs: Prover options

    Returns:
        Certificate for claim 'h_ineq'
    """
    logger.info(f"Attempting to verify the h inequality for k={k} ({ProofMode(mode).value})")
    return HIneqProverFactory.create(mode, **kwargs).prove(k)
