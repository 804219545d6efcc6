# Margin table entity: a k x k nonnegative integer table with common margin B
import hashlib
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import gammaln


class MarginTable(BaseModel):
    """
    A member of H_k: every row and column sums to B.

    Frozen so tables can key dictionaries (the conditional pmf, empirical
    sampler counts).
    """
    model_config = ConfigDict(frozen=True)

    entries: Tuple[Tuple[int, ...], ...]

    @model_validator(mode='after')
    def _check_margins(self):
        k = len(self.entries)
        if k < 2 or any(len(row) != k for row in self.entries):
            raise ValueError(f"entries must form a k x k table with k >= 2, got {self.entries}")
        if any(value < 0 for row in self.entries for value in row):
            raise ValueError("entries must be nonnegative")
        B = sum(self.entries[0])
        rows_ok = all(sum(row) == B for row in self.entries)
        cols_ok = all(sum(row[j] for row in self.entries) == B for j in range(k))
        if not (rows_ok and cols_ok):
            raise ValueError(f"every row and column must sum to {B}")
        return self

    @classmethod
    def from_rows(cls, rows) -> "MarginTable":
        return cls(entries=tuple(tuple(int(v) for v in row) for row in rows))

    # Business logic methods

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def B(self) -> int:
        return sum(self.entries[0])

    @property
    def n(self) -> int:
        return self.k * self.B

    def flat(self) -> List[int]:
        return [value for row in self.entries for value in row]

    def sum_of_squares(self) -> int:
        return sum(value * value for value in self.flat())

    def chi_square(self) -> float:
        """|X|^2 = sum (l - n/k^2)^2 / (n/k^2) = -n + (k^2/n) sum l^2."""
        if self.n == 0:
            return 0.0
        return -self.n + (self.k ** 2 / self.n) * self.sum_of_squares()

    def bracket(self) -> float:
        """1 - 2/k + sum (l/n)^2."""
        if self.n == 0:
            return (1.0 - 1.0 / self.k) ** 2
        return 1.0 - 2.0 / self.k + self.sum_of_squares() / self.n ** 2

    def log_factorial_product(self) -> float:
        """log prod l_ij!."""
        return float(sum(gammaln(value + 1.0) for value in self.flat()))

    def table_hash(self) -> str:
        """Short stable digest of the entries, used in sampler streams."""
        text = ";".join(",".join(str(v) for v in row) for row in self.entries)
        return hashlib.sha256(text.encode("ascii")).hexdigest()[:16]
