"""
Range enclosures for the rate functions and the M_{r,k} family.

Every enclosure is assembled from Interval operations, so the result always
contains the exact range of the function over the given domain. Near t = 0
h and psi are evaluated from their alternating series with an explicit
tail bound instead of the cancelling closed form.
"""
import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

from services.errors import DomainError, ParameterError
from services.interval.interval import INF, Interval
from services.scalar_fn.rate_functions import SERIES_CUTOFF, SERIES_TERMS

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# Left end of the tail zone in s = 1/(1+t); [0, TAIL_LIMIT_S] uses the limit bound
TAIL_LIMIT_S = 1e-8

# Last index m of the truncated series sum_{m>=2} (-1)^m t^(m-2) / (m(m-1))
_LAST_M = SERIES_TERMS + 1
_SERIES_COEFFS = tuple(
    Interval.ratio((-1.0) ** m, float(m * (m - 1))) for m in range(2, _LAST_M + 1)
)
_ONE = Interval.point(1.0)
_TWO = Interval.point(2.0)


class FunctionType(str, Enum):
    """Functions with a registered enclosure."""
    H = 'h'
    PSI = 'psi'
    PSI_LOWER_RHS = 'psi_lower_rhs'         # 2 log(1+2t)/(1+2t)
    PSI_LOWER_MARGIN = 'psi_lower_margin'   # psi(t) - rhs
    PSI_LOWER_TAIL = 'psi_lower_tail'       # margin in s = 1/(1+t), divided by 2s
    PSI_LOWER_TAIL_LIMIT = 'psi_lower_tail_limit'  # lower bound of the above on [0, s_c]
    G_K = 'g_k'
    G_K_PRIME = 'g_k_prime'
    G_K_SECOND = 'g_k_second'
    G_K_THIRD = 'g_k_third'
    HALF_PSI_MARGIN = 'half_psi_margin'     # psi(b)/2 - rho_k, g_k = b^2 times this
    HALF_PSI_CHAIN = 'half_psi_chain'       # chained lower bound of the same quantity
    M_RK = 'm_rk'
    M_RK_PRIME = 'm_rk_prime'
    M_RK_SECOND = 'm_rk_second'


# Point and range enclosures of the scalar functions

def _series_remainder(mag: float) -> float:
    """Bound on the dropped tail of the h series for |t| <= mag < 1."""
    if mag == 0.0:
        return 0.0
    bound = mag ** (_LAST_M - 1) / ((_LAST_M + 1) * _LAST_M * (1.0 - mag))
    return 2.0 * bound


def _series_range(T: Interval) -> Interval:
    """Enclosure of sum_{m>=2} (-1)^m t^(m-2)/(m(m-1)) over T within [-1/8, 1/8]."""
    acc = Interval.point(0.0)
    for coeff in reversed(_SERIES_COEFFS):
        acc = acc * T + coeff
    rem = _series_remainder(T.mag)
    return acc + Interval(-rem, rem)


def _in_series_zone(T: Interval) -> bool:
    return -SERIES_CUTOFF <= T.lo and T.hi <= SERIES_CUTOFF


def h_point(x: float) -> Interval:
    """
    Enclosure of h at a single float.

    Raises:
        DomainError: If x < -1
    """
    if math.isnan(x) or x < -1.0:
        raise DomainError(f"h is defined for t >= -1, got {x}")
    if x == -1.0:
        return Interval.point(1.0)
    if x == 0.0:
        return Interval.point(0.0)
    if math.isinf(x):
        return Interval.point(INF)
    X = Interval.point(x)
    if abs(x) <= SERIES_CUTOFF:
        return X.sqr() * _series_range(X)
    return (_ONE + X) * X.log1p() - X


def h_range(T: Interval) -> Interval:
    """h is decreasing on [-1, 0] and increasing on [0, inf)."""
    if T.lo < -1.0:
        raise DomainError(f"h is defined for t >= -1, got {T}")
    if T.lo >= 0.0:
        return Interval(h_point(T.lo).lo, h_point(T.hi).hi)
    if T.hi <= 0.0:
        return Interval(h_point(T.hi).lo, h_point(T.lo).hi)
    return Interval(0.0, max(h_point(T.lo).hi, h_point(T.hi).hi))


def psi_range(T: Interval) -> Interval:
    """
    Enclosure of psi(t) = 2h(t)/t^2 over a bounded T within [-1, inf).

    The domain is split at +-1/8; the middle piece uses the series, the outer
    pieces the quotient of the h range by the square.
    """
    if T.lo < -1.0 or not T.is_finite():
        raise DomainError(f"psi needs a bounded interval within [-1, inf), got {T}")
    pieces = []
    if T.lo < -SERIES_CUTOFF:
        left = Interval(T.lo, min(T.hi, -SERIES_CUTOFF))
        pieces.append(_TWO * h_range(left) / left.sqr())
    middle = T.intersect(Interval(-SERIES_CUTOFF, SERIES_CUTOFF))
    if middle is not None:
        pieces.append(_TWO * _series_range(middle))
    if T.hi > SERIES_CUTOFF:
        right = Interval(max(T.lo, SERIES_CUTOFF), T.hi)
        pieces.append(_TWO * h_range(right) / right.sqr())
    return Interval.hull(pieces)


def _log_ratio(X: Interval) -> Interval:
    """log(1+2t)/(1+2t)."""
    Y = _ONE + _TWO * X
    return Y.log() / Y


def psi_lower_rhs(T: Interval) -> Interval:
    if T.lo < 0.0:
        raise DomainError(f"the psi lower bound is taken over t >= 0, got {T}")
    return _TWO * _log_ratio(T)


def psi_lower_margin(T: Interval) -> Interval:
    return psi_range(T) - psi_lower_rhs(T)


def psi_lower_tail(S: Interval) -> Interval:
    """
    Tail margin after t = (1-s)/s, divided by the positive factor 2s.

    With L = -log s:
        L (1+s-s^2)/((1-s)^2 (2-s)) - 1/(1-s) - log(2-s)/(2-s)
    """
    if not (0.0 < S.lo and S.hi < 1.0):
        raise DomainError(f"the tail substitution needs s in (0, 1), got {S}")
    L = -S.log()
    one_minus = _ONE - S
    two_minus = _TWO - S
    coeff = (_ONE + S - S.sqr()) / (one_minus.sqr() * two_minus)
    return L * coeff - one_minus.recip() - two_minus.log() / two_minus


def psi_lower_tail_limit(S: Interval) -> Interval:
    """
    Lower bound of the tail margin on [0, s_c] from L >= -log(s_c):
        L (1 - 1/(2-s_c)) - 1/(1-s_c) - log 2/(2-s_c)
    """
    if S.lo < 0.0 or not (0.0 < S.hi < 0.5):
        raise DomainError(f"the tail limit bound needs s in [0, 1/2), got {S}")
    s_c = Interval.point(S.hi)
    L_min = -s_c.log()
    two_minus = _TWO - s_c
    lower = L_min * (_ONE - two_minus.recip()) - (_ONE - s_c).recip() - _TWO.log() / two_minus
    return Interval(lower.lo, INF)


@lru_cache(maxsize=None)
def rho_interval(k: int) -> Interval:
    """Enclosure of rho_k = log(k-1)/(k-1)."""
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    K1 = Interval.point(float(k - 1))
    return K1.log() / K1


def g_range(T: Interval, k: int) -> Interval:
    return h_range(T) - rho_interval(k) * T.sqr()


def g_prime_range(T: Interval, k: int) -> Interval:
    return T.log1p(allow_zero_endpoint=True) - _TWO * rho_interval(k) * T


def g_second_range(T: Interval, k: int) -> Interval:
    return (_ONE + T).recip(allow_zero_endpoint=True) - _TWO * rho_interval(k)


def g_third_range(T: Interval) -> Interval:
    return -((_ONE + T).sqr().recip(allow_zero_endpoint=True))


def half_psi_margin(T: Interval, k: int) -> Interval:
    return psi_range(T) / _TWO - rho_interval(k)


def half_psi_chain(T: Interval, k: int) -> Interval:
    """
    psi(b)/2 - L1(b) + L1(b_hi) - rho_k with L1(b) = log(1+2b)/(1+2b).

    L1 is decreasing once 1+2b >= e, which is checked on the cell; elsewhere
    the bound is reported as (-inf, inf) so the cell falls through.
    """
    if (_ONE + _TWO * Interval.point(T.lo)).log().lo <= 1.0:
        return Interval(-INF, INF)
    first = psi_range(T) / _TWO - _log_ratio(T)
    second = _log_ratio(Interval.point(T.hi)) - rho_interval(k)
    return first + second


def _m_params(r: int, k: int) -> Tuple[int, Interval]:
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    if r < 1 or r > k - 2:
        raise ParameterError(f"r must lie in [1, {k - 2}], got {r}")
    m = k - r
    return m, Interval.ratio(float(r), float(m))


def _partner(T: Interval, ratio: Interval) -> Interval:
    """a = -r b / m, clipped to [-1, 0] where the exact value lies."""
    A = -(ratio * T)
    return Interval(max(A.lo, -1.0), min(max(A.hi, -1.0), 0.0))


def m_natural(T: Interval, r: int, k: int) -> Interval:
    m, ratio = _m_params(r, k)
    A = _partner(T, ratio)
    return float(r) * g_range(T, k) + float(m) * g_range(A, k)


def m_second_range(T: Interval, r: int, k: int) -> Interval:
    """M'' = r (g''(b) + (r/m) g''(a))."""
    _, ratio = _m_params(r, k)
    A = _partner(T, ratio)
    return float(r) * (g_second_range(T, k) + ratio * g_second_range(A, k))


def m_prime_natural(T: Interval, r: int, k: int) -> Interval:
    """M' = r (log(1+b) - log(1+a) - 2 rho_k k b/m)."""
    m, ratio = _m_params(r, k)
    A = _partner(T, ratio)
    slope = _TWO * rho_interval(k) * Interval.ratio(float(k), float(m))
    return float(r) * (T.log1p() - A.log1p(allow_zero_endpoint=True) - slope * T)


def _mean_value(point_value: Interval, derivative: Interval, T: Interval, c: float) -> Interval:
    return point_value + derivative * (T - Interval.point(c))


def _tighter(mvf: Interval, natural: Interval) -> Interval:
    both = mvf.intersect(natural)
    return natural if both is None else both


def m_prime_range(T: Interval, r: int, k: int) -> Interval:
    natural = m_prime_natural(T, r, k)
    if T.is_point():
        return natural
    c = T.mid
    mvf = _mean_value(m_prime_natural(Interval.point(c), r, k), m_second_range(T, r, k), T, c)
    return _tighter(mvf, natural)


def m_range(T: Interval, r: int, k: int) -> Interval:
    """Mean-value form M(c) + M'(T)(T - c), intersected with the natural extension."""
    natural = m_natural(T, r, k)
    if T.is_point():
        return natural
    c = T.mid
    mvf = _mean_value(m_natural(Interval.point(c), r, k), m_prime_range(T, r, k), T, c)
    return _tighter(mvf, natural)


# Enclosure objects

class Enclosure(ABC):
    """
    Interface for a function with a sound range enclosure.
    """

    function_type: FunctionType

    @abstractmethod
    def domain(self) -> Interval:
        """The interval on which the function is defined."""
        pass

    @abstractmethod
    def _enclose(self, X: Interval) -> Interval:
        pass

    def enclose(self, X: Interval) -> Interval:
        """
        Enclose the range of the function over X.

        Raises:
            DomainError: If X is not contained in the function's domain
        """
        if not self.domain().contains(X):
            raise DomainError(
                f"{self.function_type.value} is defined on {self.domain()}, got {X}"
            )
        return self._enclose(X)

    def point(self, x: float) -> Interval:
        return self.enclose(Interval.point(x))

    def __call__(self, X: Interval) -> Interval:
        return self.enclose(X)


class RateEnclosure(Enclosure):
    """h, psi and the pieces of the psi lower bound."""

    _FUNCTIONS: Dict[FunctionType, Tuple[Callable[[Interval], Interval], Tuple[float, float]]] = {
        FunctionType.H: (h_range, (-1.0, INF)),
        FunctionType.PSI: (psi_range, (-1.0, INF)),
        FunctionType.PSI_LOWER_RHS: (psi_lower_rhs, (0.0, INF)),
        FunctionType.PSI_LOWER_MARGIN: (psi_lower_margin, (0.0, INF)),
        FunctionType.PSI_LOWER_TAIL: (psi_lower_tail, (0.0, 1.0)),
        FunctionType.PSI_LOWER_TAIL_LIMIT: (psi_lower_tail_limit, (0.0, 0.5)),
    }

    def __init__(self, function_type: FunctionType):
        if function_type not in self._FUNCTIONS:
            raise ParameterError(f"{function_type.value} is not a rate function")
        self.function_type = function_type
        self._fn, bounds = self._FUNCTIONS[function_type]
        self._domain = Interval(*bounds)

    def domain(self) -> Interval:
        return self._domain

    def _enclose(self, X: Interval) -> Interval:
        return self._fn(X)


class GkEnclosure(Enclosure):
    """g_k, its derivatives and the psi/2 - rho_k margin, on [-1, k-1]."""

    def __init__(self, function_type: FunctionType, k: int):
        if k < 3:
            raise ParameterError(f"k must be at least 3, got {k}")
        self.function_type = function_type
        self.k = k
        self._fn = {
            FunctionType.G_K: lambda X: g_range(X, k),
            FunctionType.G_K_PRIME: lambda X: g_prime_range(X, k),
            FunctionType.G_K_SECOND: lambda X: g_second_range(X, k),
            FunctionType.G_K_THIRD: g_third_range,
            FunctionType.HALF_PSI_MARGIN: lambda X: half_psi_margin(X, k),
            FunctionType.HALF_PSI_CHAIN: lambda X: half_psi_chain(X, k),
        }.get(function_type)
        if self._fn is None:
            raise ParameterError(f"{function_type.value} is not in the g_k family")

    def domain(self) -> Interval:
        return Interval(-1.0, float(self.k - 1))

    def _enclose(self, X: Interval) -> Interval:
        return self._fn(X)


class MrkEnclosure(Enclosure):
    """M_{r,k} and its first two derivatives on [0, (k-r)/r]."""

    def __init__(self, function_type: FunctionType, k: int, r: int = 1):
        _m_params(r, k)
        self.function_type = function_type
        self.k = k
        self.r = r
        self._fn = {
            FunctionType.M_RK: m_range,
            FunctionType.M_RK_PRIME: m_prime_range,
            FunctionType.M_RK_SECOND: m_second_range,
        }.get(function_type)
        if self._fn is None:
            raise ParameterError(f"{function_type.value} is not in the M_rk family")

    def domain(self) -> Interval:
        return Interval(0.0, (self.k - self.r) / self.r)

    def _enclose(self, X: Interval) -> Interval:
        return self._fn(X, self.r, self.k)


class EnclosureFactory:
    """
    Factory for enclosure objects; instances are cached per (type, k, r).
    """

    _instances: Dict[Tuple[FunctionType, Optional[int], int], Enclosure] = {}

    _G_FAMILY = {
        FunctionType.G_K, FunctionType.G_K_PRIME, FunctionType.G_K_SECOND,
        FunctionType.G_K_THIRD, FunctionType.HALF_PSI_MARGIN, FunctionType.HALF_PSI_CHAIN,
    }
    _M_FAMILY = {FunctionType.M_RK, FunctionType.M_RK_PRIME, FunctionType.M_RK_SECOND}

    @staticmethod
    def create(function_type: FunctionType, k: Optional[int] = None, r: int = 1) -> Enclosure:
        """
        Create (or reuse) the enclosure for a function.

        Args:
            function_type: The function to enclose
            k: Table size, required for the g_k and M_rk families
            r: Number of large coordinates for the M_rk family

        Raises:
            ParameterError: If k is missing where required, or the type is unknown
        """
        function_type = FunctionType(function_type)
        needs_k = function_type in EnclosureFactory._G_FAMILY or function_type in EnclosureFactory._M_FAMILY
        if needs_k and k is None:
            raise ParameterError(f"{function_type.value} needs k")
        key = (function_type, k if needs_k else None, r if function_type in EnclosureFactory._M_FAMILY else 1)
        if key in EnclosureFactory._instances:
            return EnclosureFactory._instances[key]

        if function_type in EnclosureFactory._G_FAMILY:
            instance: Enclosure = GkEnclosure(function_type, k)
        elif function_type in EnclosureFactory._M_FAMILY:
            instance = MrkEnclosure(function_type, k, r)
        else:
            instance = RateEnclosure(function_type)

        EnclosureFactory._instances[key] = instance
        return instance


def enclose_fn(function_type: FunctionType, domain: Interval, k: Optional[int] = None, r: int = 1) -> Interval:
    """
    Sound enclosure of the range of a registered function over a domain.

    Args:
        function_type: One of the FunctionType members
        domain: Interval inside the function's domain
        k: Table size for the g_k and M_rk families
        r: Number of large coordinates for the M_rk family

    Returns:
        Interval containing f(domain)

    Raises:
        DomainError: If the domain leaves the function's domain
    """
    return EnclosureFactory.create(function_type, k, r).enclose(domain)
