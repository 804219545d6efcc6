"""
Rate functions of Poisson deviations and the two-value reduction family.

    h(t)   = (1+t)log(1+t) - t          for t >= -1
    psi(t) = 2h(t)/t^2,  psi(0) = 1
    g_k(s) = h(s) - rho_k s^2,  rho_k = log(k-1)/(k-1)
    M_{r,k}(b) = r g_k(b) + (k-r) g_k(-rb/(k-r))

All functions accept scalars or numpy arrays and return the same shape.
"""
import logging
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from services.errors import DomainError, ParameterError

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Below this |t| the closed form loses all precision to cancellation
SERIES_CUTOFF = 0.125
SERIES_TERMS = 20

# h(t) = t^2 * sum_{m>=2} (-1)^m t^(m-2) / (m(m-1))
H_SERIES_COEFFS = np.array(
    [(-1.0) ** m / (m * (m - 1)) for m in range(2, 2 + SERIES_TERMS)]
)


class KParams(BaseModel):
    """
    Parameters attached to a table size k and an optional rate c.
    """
    k: int = Field(ge=3)
    c: Optional[float] = None

    @property
    def k1(self) -> int:
        return self.k - 1

    @property
    def rho(self) -> float:
        return rho_k(self.k)

    @property
    def R(self) -> int:
        """Degrees of freedom of the limiting chi-square law."""
        return (self.k - 1) ** 2

    @property
    def J(self) -> float:
        if self.c is None:
            raise ParameterError("J_k needs a rate c")
        return self.c / (self.k - 1) ** 2

    def below_threshold(self) -> bool:
        """True when J_k < rho_k, i.e. c < (k-1)log(k-1)."""
        return self.J < self.rho


def rho_k(k: int) -> float:
    """rho_k = log(k-1)/(k-1)."""
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    return float(np.log(k - 1) / (k - 1))


def threshold_c(k: int) -> float:
    """The rate (k-1)log(k-1) at which J_k reaches rho_k."""
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    return float((k - 1) * np.log(k - 1))


def _as_array(t: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _unwrap(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


def _check_domain(t: np.ndarray, name: str) -> None:
    if np.any(np.isnan(t)) or np.any(t < -1.0):
        bad = t[np.isnan(t) | (t < -1.0)][0]
        raise DomainError(f"{name} is defined for t >= -1, got {bad}")


def _series_sum(t: np.ndarray) -> np.ndarray:
    """Horner evaluation of sum_{m>=2} c_m t^(m-2)."""
    acc = np.zeros_like(t)
    for coeff in H_SERIES_COEFFS[::-1]:
        acc = acc * t + coeff
    return acc


def h(t: ArrayLike):
    """
    Evaluate h(t) = (1+t)log(1+t) - t.

    Args:
        t: Argument(s), each >= -1

    Returns:
        h(t), with h(-1) = 1 and a series branch for |t| <= 1/8

    Raises:
        DomainError: If any t < -1
    """
    arr, scalar = _as_array(t)
    _check_domain(arr, "h")
    out = np.empty_like(arr)

    small = np.abs(arr) <= SERIES_CUTOFF
    ts = arr[small]
    out[small] = ts * ts * _series_sum(ts)

    tl = arr[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = (1.0 + tl) * np.log1p(tl) - tl
    out[~small] = np.where(tl == -1.0, 1.0, closed)
    return _unwrap(out, scalar)


def psi(t: ArrayLike):
    """
    Evaluate psi(t) = 2h(t)/t^2, extended by psi(0) = 1.

    Args:
        t: Argument(s), each >= -1

    Returns:
        psi(t)

    Raises:
        DomainError: If any t < -1
    """
    arr, scalar = _as_array(t)
    _check_domain(arr, "psi")
    out = np.empty_like(arr)

    small = np.abs(arr) <= SERIES_CUTOFF
    out[small] = 2.0 * _series_sum(arr[small])

    tl = arr[~small]
    out[~small] = 2.0 * np.asarray(h(tl)) / (tl * tl)
    return _unwrap(out, scalar)


def g_k(s: ArrayLike, k: int):
    """g_k(s) = h(s) - rho_k s^2."""
    arr, scalar = _as_array(s)
    values = np.asarray(h(arr)) - rho_k(k) * arr * arr
    return _unwrap(values, scalar)


def g_k_prime(s: ArrayLike, k: int):
    """g_k'(s) = log(1+s) - 2 rho_k s."""
    arr, scalar = _as_array(s)
    _check_domain(arr, "g_k'")
    with np.errstate(divide="ignore"):
        values = np.log1p(arr) - 2.0 * rho_k(k) * arr
    return _unwrap(values, scalar)


def G_k(u: ArrayLike, k: Optional[int] = None):
    """
    Sum of g_k over the last axis of u.

    Args:
        u: Vector of length k, or an array of such vectors along the last axis
        k: Table size; defaults to the length of u

    Returns:
        G_k(u) as a float, or an array for stacked input

    Raises:
        DomainError: If any coordinate is below -1
    """
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        raise DomainError("G_k expects a vector")
    size = arr.shape[-1]
    k = size if k is None else k
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    _check_domain(arr.ravel(), "G_k")
    values = np.asarray(h(arr.ravel())).reshape(arr.shape) - rho_k(k) * arr * arr
    total = values.sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


class MValue(NamedTuple):
    value: float
    d1: float
    d2: float


def m_rk(b: float, r: int, k: int) -> MValue:
    """
    Evaluate M_{r,k}(b) and its first two derivatives in b.

    With m = k-r and a = -rb/m:
        M'  = r (g'(b) - g'(a))
        M'' = r (g''(b) + (r/m) g''(a)),   g''(s) = 1/(1+s) - 2 rho_k

    Args:
        b: Point in [0, (k-r)/r]
        r: Number of large coordinates, 1 <= r <= k-2
        k: Table size

    Returns:
        MValue(value, d1, d2); the derivatives are +inf at b = (k-r)/r

    Raises:
        DomainError: If b is outside [0, (k-r)/r]
        ParameterError: If r or k are out of range
    """
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    if r < 1 or r > k - 2:
        raise ParameterError(f"r must lie in [1, {k - 2}], got {r}")
    m = k - r
    b = float(b)
    b_max = m / r
    if not (0.0 <= b <= b_max):
        raise DomainError(f"M_{{{r},{k}}} is defined on [0, {b_max}], got b={b}")

    rho = rho_k(k)
    a = -r * b / m
    if b == b_max:
        a = -1.0
    value = r * g_k(b, k) + m * g_k(a, k)

    if a == -1.0:
        return MValue(float(value), float("inf"), float("inf"))

    if r == 1:
        k1 = k - 1
        d1 = np.log((1.0 + b) / (1.0 - b / k1)) - 2.0 * k * rho * b / k1
        d2 = k / ((1.0 + b) * (k1 - b)) - 2.0 * k * rho / k1
    else:
        d1 = r * (np.log1p(b) - np.log1p(a) - 2.0 * rho * (b - a))
        d2 = r * ((1.0 / (1.0 + b) - 2.0 * rho) + (r / m) * (1.0 / (1.0 + a) - 2.0 * rho))
    return MValue(float(value), float(d1), float(d2))


def m_k(b: float, k: int) -> MValue:
    """Shorthand for M_{1,k}."""
    return m_rk(b, 1, k)


class EndpointValues(NamedTuple):
    slope_at_k1_minus_1: float
    slope_at_k1_minus_2: float
    linear_bound: float


def mk_endpoint_values(k: int) -> EndpointValues:
    """
    Closed forms used to bracket the interior minimiser of M_k for k >= 6.

    Returns:
        M_k'(k1-1) = 2 log(k1)/k1^2,
        M_k'(k1-2) = 2(k1+2)log(k1)/k1^2 + log((k1-1)/(2 k1)),
        and the linear lower bound (k1-1)log(k1)/k1^2 - 2 log(k1)/k1^2
    """
    if k < 4:
        raise ParameterError(f"endpoint values need k >= 4, got {k}")
    k1 = k - 1
    log_k1 = np.log(k1)
    slope_hi = 2.0 * log_k1 / k1 ** 2
    slope_lo = 2.0 * (k1 + 2) * log_k1 / k1 ** 2 + np.log((k1 - 1) / (2.0 * k1))
    bound = (k1 - 1) * log_k1 / k1 ** 2 - 2.0 * log_k1 / k1 ** 2
    return EndpointValues(float(slope_hi), float(slope_lo), float(bound))


def concave_interval_closed_form(k: int) -> Optional[Tuple[float, float]]:
    """
    Endpoints (b_k, b_k') of the interval where M_k'' < 0.

    M_k''(b) < 0 exactly when 2(1+b)(k1-b) > k1/rho_k, a quadratic condition.

    Returns:
        The two roots, or None when the interval is empty
    """
    if k < 3:
        raise ParameterError(f"k must be at least 3, got {k}")
    k1 = k - 1
    rho = rho_k(k)
    # -b^2 + (k1-1) b + k1 - k1/(2 rho) = 0
    disc = (k1 - 1) ** 2 + 4.0 * (k1 - k1 / (2.0 * rho))
    if disc <= 0.0:
        return None
    root = np.sqrt(disc)
    return (float((k1 - 1 - root) / 2.0), float((k1 - 1 + root) / 2.0))
