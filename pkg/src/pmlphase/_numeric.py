"""Shared numeric plumbing: log-space magnitudes, budgets and backend labels."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Integral, Rational

import numpy as np

#: Environment variable that overrides the default enumeration budget.
BUDGET_ENV = "PMLPHASE_BUDGET"
DEFAULT_BUDGET = 10**7


class BudgetExceededError(RuntimeError):
    """Raised when an enumeration or lattice sum would exceed its budget."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


def default_budget() -> int:
    value = os.environ.get(BUDGET_ENV)
    if value is None:
        return DEFAULT_BUDGET
    return int(float(value))


def resolve_budget(budget):
    return default_budget() if budget is None else int(budget)


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=None)
def log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def exact_log(x) -> float:
    """Natural log of a positive int or Fraction that may overflow a double."""
    if isinstance(x, Integral):
        return math.log(x)
    if isinstance(x, Rational):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def backend_name(x) -> str:
    """Label the arithmetic a value was produced with.

    Returns ``"rational"`` for ints/Fractions (and object arrays of them),
    ``"log-space"`` for :class:`LogNumber` and ``"float"`` otherwise.
    """
    if isinstance(x, LogNumber):
        return "log-space"
    if isinstance(x, np.ndarray):
        if x.dtype == object:
            return "rational" if all(is_exact(v) for v in x.flat) else "float"
        return "integer" if np.issubdtype(x.dtype, np.integer) else "float"
    return "rational" if is_exact(x) else "float"


@dataclass(frozen=True)
class LogNumber:
    """A non-negative magnitude stored as its natural log.

    ``zero=True`` represents exactly 0 (``log_value`` is then ``-inf``).
    """

    log_value: float
    zero: bool = False

    @classmethod
    def of(cls, x) -> "LogNumber":
        if isinstance(x, LogNumber):
            return x
        if x < 0:
            raise ValueError("LogNumber holds non-negative magnitudes only")
        if x == 0:
            return cls.zero_value()
        return cls(exact_log(x))

    @classmethod
    def zero_value(cls) -> "LogNumber":
        return cls(-math.inf, True)

    @classmethod
    def logsumexp(cls, log_terms) -> "LogNumber":
        arr = np.asarray(log_terms, dtype=float)
        arr = arr[np.isfinite(arr)]
        if arr.size == 0:
            return cls.zero_value()
        shift = float(arr.max())
        return cls(shift + math.log(float(np.exp(arr - shift).sum())))

    def __mul__(self, other):
        other = LogNumber.of(other)
        if self.zero or other.zero:
            return LogNumber.zero_value()
        return LogNumber(self.log_value + other.log_value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = LogNumber.of(other)
        if other.zero:
            raise ZeroDivisionError("division by a zero LogNumber")
        if self.zero:
            return self
        return LogNumber(self.log_value - other.log_value)

    def __add__(self, other):
        other = LogNumber.of(other)
        if self.zero:
            return other
        if other.zero:
            return self
        return LogNumber(float(np.logaddexp(self.log_value, other.log_value)))

    __radd__ = __add__

    def __pow__(self, exponent):
        if self.zero:
            if exponent <= 0:
                raise ValueError("0 raised to a non-positive power")
            return self
        return LogNumber(self.log_value * float(exponent))

    def root(self, M) -> "LogNumber":
        return self ** (1.0 / M)

    def __float__(self):
        return 0.0 if self.zero else math.exp(self.log_value)

    def __lt__(self, other):
        return self.log_value < LogNumber.of(other).log_value

    def __le__(self, other):
        return self.log_value <= LogNumber.of(other).log_value

    def isclose(self, other, abs_tol=1e-12) -> bool:
        other = LogNumber.of(other)
        if self.zero or other.zero:
            return self.zero and other.zero
        return abs(self.log_value - other.log_value) <= abs_tol

    def to_json(self):
        return {"log": None if self.zero else self.log_value, "zero": self.zero,
                "backend": "log-space"}


def to_fraction_array(values) -> np.ndarray:
    arr = np.empty(np.shape(values), dtype=object)
    for idx, v in np.ndenumerate(np.asarray(values, dtype=object)):
        arr[idx] = Fraction(v)
    return arr


def as_matrix(theta) -> np.ndarray:
    """Square numpy matrix; exact entries stay Fractions in an object array."""
    arr = np.asarray(theta, dtype=object)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if all(is_exact(v) for v in arr.flat):
        return to_fraction_array(arr)
    return arr.astype(float)
