"""
Closed real intervals with outward rounding.

No rounding-mode switching is used. Sums, products and quotients detect
whether the float result is exact with error-free transformations and move
one ulp outward only when it is not; transcendental results always move one
ulp outward unless the value is an exact special case. Intervals are
immutable, so they can be shared freely between threads.
"""
import math
from enum import Enum
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from services.errors import DomainError

Number = Union[int, float]

INF = float("inf")

# 2^27 + 1, splits a double into two 26-bit halves
_SPLITTER = 134217729.0
# Beyond these magnitudes the error-free product is not reliable
_SPLIT_MAX = 1e290
_SPLIT_MIN = 1e-280


def _next_down(x: float) -> float:
    return float(np.nextafter(x, -INF))


def _next_up(x: float) -> float:
    return float(np.nextafter(x, INF))


def _two_add(a: float, b: float) -> Tuple[float, float]:
    """s = fl(a+b) and err with a + b = s + err exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> Tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_product(a: float, b: float) -> Tuple[float, float]:
    """p = fl(ab) and err with ab = p + err, NaN err when not representable."""
    p = a * b
    if not math.isfinite(p) or p == 0.0:
        return p, (0.0 if p == 0.0 and (a == 0.0 or b == 0.0) else math.nan)
    if abs(a) > _SPLIT_MAX or abs(b) > _SPLIT_MAX or abs(p) < _SPLIT_MIN:
        return p, math.nan
    ah, al = _split(a)
    bh, bl = _split(b)
    err = al * bl - (((p - ah * bh) - al * bh) - ah * bl)
    return p, err


def _down(value: float, err: float) -> float:
    if math.isnan(err) or err < 0.0:
        return _next_down(value)
    return value


def _up(value: float, err: float) -> float:
    if math.isnan(err) or err > 0.0:
        return _next_up(value)
    return value


def _add_down(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        return a + b
    return _down(*_two_add(a, b))


def _add_up(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        return a + b
    return _up(*_two_add(a, b))


def _mul_down(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return a * b
    return _down(*_two_product(a, b))


def _mul_up(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return a * b
    return _up(*_two_product(a, b))


def _quotient_error(a: float, b: float, q: float) -> float:
    """Sign-carrying residual: a/b = q + err/b with err = a - q*b."""
    p, e = _two_product(q, b)
    if math.isnan(e):
        return math.nan
    return ((a - p) - e) / b


def _div_down(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    q = a / b
    if math.isinf(a) or math.isinf(b):
        return q if math.isinf(q) else _next_down(q)
    return _down(q, _quotient_error(a, b, q))


def _div_up(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    q = a / b
    if math.isinf(a) or math.isinf(b):
        return q if math.isinf(q) else _next_up(q)
    return _up(q, _quotient_error(a, b, q))


class ArithOp(str, Enum):
    """Binary interval operations."""
    ADD = 'add'
    SUB = 'sub'
    MUL = 'mul'
    DIV = 'div'
    SQR = 'sqr'     # dependent square, ignores the second operand


class ElemOp(str, Enum):
    """Monotone elementary functions."""
    LOG1P = 'log1p'
    LOG = 'log'
    EXP = 'exp'


class Interval:
    """
    Closed interval [lo, hi].

    Endpoints may be infinite only for half-infinite enclosures produced by
    the explicit zero-endpoint extensions (recip, log, log1p).
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Number, hi: Optional[Number] = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("interval endpoints must not be NaN")
        if lo > hi:
            raise DomainError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    # Construction helpers

    @classmethod
    def point(cls, x: Number) -> "Interval":
        return cls(x, x)

    @classmethod
    def ratio(cls, num: Number, den: Number) -> "Interval":
        """Tight enclosure of num/den for exact float num, den."""
        return cls.point(num) / cls.point(den)

    @classmethod
    def hull(cls, items: Iterable["Interval"]) -> "Interval":
        items = list(items)
        if not items:
            raise DomainError("hull of no intervals")
        return cls(min(i.lo for i in items), max(i.hi for i in items))

    @staticmethod
    def coerce(value: Union["Interval", Number]) -> "Interval":
        if isinstance(value, Interval):
            return value
        return Interval.point(value)

    # Queries

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            raise DomainError("midpoint of an unbounded interval")
        return self.lo + 0.5 * (self.hi - self.lo)

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, other: Union["Interval", Number]) -> bool:
        other = Interval.coerce(other)
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_positive(self) -> bool:
        return self.lo > 0.0

    def strictly_negative(self) -> bool:
        return self.hi < 0.0

    def split(self) -> Tuple["Interval", "Interval"]:
        m = self.mid
        return Interval(self.lo, m), Interval(m, self.hi)

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def to_tuple(self) -> Tuple[float, float]:
        return (self.lo, self.hi)

    # Arithmetic

    def __add__(self, other):
        other = Interval.coerce(other)
        return Interval(_add_down(self.lo, other.lo), _add_up(self.hi, other.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        other = Interval.coerce(other)
        return Interval(_add_down(self.lo, -other.hi), _add_up(self.hi, -other.lo))

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        pairs = [(self.lo, other.lo), (self.lo, other.hi), (self.hi, other.lo), (self.hi, other.hi)]
        return Interval(min(_mul_down(a, b) for a, b in pairs),
                        max(_mul_up(a, b) for a, b in pairs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if other.lo <= 0.0 <= other.hi:
            raise DomainError(f"division by an interval containing zero: {other}")
        pairs = [(self.lo, other.lo), (self.lo, other.hi), (self.hi, other.lo), (self.hi, other.hi)]
        return Interval(min(_div_down(a, b) for a, b in pairs),
                        max(_div_up(a, b) for a, b in pairs))

    def __rtruediv__(self, other):
        return Interval.coerce(other) / self

    def sqr(self) -> "Interval":
        """Dependent square: [-1, 2] -> [0, 4]."""
        if self.lo >= 0.0:
            return Interval(_mul_down(self.lo, self.lo), _mul_up(self.hi, self.hi))
        if self.hi <= 0.0:
            return Interval(_mul_down(self.hi, self.hi), _mul_up(self.lo, self.lo))
        return Interval(0.0, _mul_up(self.mag, self.mag))

    def recip(self, allow_zero_endpoint: bool = False) -> "Interval":
        """
        1/x; with allow_zero_endpoint a nonnegative interval [0, hi] maps to
        [1/hi, +inf].
        """
        if allow_zero_endpoint and self.lo == 0.0 and self.hi > 0.0:
            return Interval(_div_down(1.0, self.hi), INF)
        return Interval.point(1.0) / self

    # Elementary functions

    def log(self, allow_zero_endpoint: bool = False) -> "Interval":
        if self.lo < 0.0 or (self.lo == 0.0 and not allow_zero_endpoint):
            raise DomainError(f"log needs a positive interval, got {self}")
        lo = -INF if self.lo == 0.0 else _elem_down(np.log, self.lo, exact_at=1.0, exact_value=0.0)
        hi = _elem_up(np.log, self.hi, exact_at=1.0, exact_value=0.0)
        return Interval(lo, hi)

    def log1p(self, allow_zero_endpoint: bool = False) -> "Interval":
        if self.lo < -1.0 or (self.lo == -1.0 and not allow_zero_endpoint):
            raise DomainError(f"log1p needs an interval above -1, got {self}")
        lo = -INF if self.lo == -1.0 else _elem_down(np.log1p, self.lo, exact_at=0.0, exact_value=0.0)
        hi = _elem_up(np.log1p, self.hi, exact_at=0.0, exact_value=0.0)
        return Interval(lo, hi)

    def exp(self) -> "Interval":
        lo = _elem_down(np.exp, self.lo, exact_at=0.0, exact_value=1.0)
        hi = _elem_up(np.exp, self.hi, exact_at=0.0, exact_value=1.0)
        return Interval(max(lo, 0.0), hi)

    # Dunder helpers

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _elem_down(fn, x: float, exact_at: float, exact_value: float) -> float:
    if x == exact_at:
        return exact_value
    if math.isinf(x):
        return float(fn(x))
    return _next_down(float(fn(x)))


def _elem_up(fn, x: float, exact_at: float, exact_value: float) -> float:
    if x == exact_at:
        return exact_value
    if math.isinf(x):
        return float(fn(x))
    return _next_up(float(fn(x)))


def arith(op: Union[ArithOp, str], a: Interval, b: Optional[Interval] = None) -> Interval:
    """
    Apply a binary interval operation.

    Args:
        op: One of add, sub, mul, div, sqr
        a: Left operand
        b: Right operand (ignored by sqr)

    Returns:
        Outward-rounded enclosure of the exact result

    Raises:
        DomainError: For division by an interval containing zero
    """
    op = ArithOp(op)
    if op is ArithOp.SQR:
        return a.sqr()
    if b is None:
        raise DomainError(f"{op.value} needs two operands")
    if op is ArithOp.ADD:
        return a + b
    if op is ArithOp.SUB:
        return a - b
    if op is ArithOp.MUL:
        return a * b
    return a / b


def elem(op: Union[ElemOp, str], a: Interval) -> Interval:
    """
    Apply a monotone elementary function.

    Raises:
        DomainError: For log on a non-positive interval or log1p at or below -1
    """
    op = ElemOp(op)
    if op is ElemOp.LOG:
        return a.log()
    if op is ElemOp.LOG1P:
        return a.log1p()
    return a.exp()
