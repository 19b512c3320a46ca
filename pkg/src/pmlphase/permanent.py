"""Exact permanents and pattern probabilities.

Exact inputs (ints, Fractions) run in rational arithmetic; anything else
runs in double precision.  :func:`pmlphase.backend_name` labels a result.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numeric import BudgetExceededError, as_matrix, is_exact
from .patterns import as_pattern

MAX_PERMANENT_DIM = 20
INJECTION_BUDGET = 10**7


@dataclass(frozen=True)
class Pmf:
    """Probability vector over ``[k]``; exact when built from Fractions."""

    p: tuple

    def __post_init__(self):
        vals = tuple(self.p)
        if not vals:
            raise ValueError("a pmf needs at least one entry")
        if all(is_exact(v) for v in vals):
            vals = tuple(Fraction(v) for v in vals)
            total = sum(vals)
            if total != 1:
                raise ValueError(f"pmf sums to {total}, not 1")
        else:
            vals = tuple(float(v) for v in vals)
            if abs(math.fsum(vals) - 1.0) > 1e-12:
                raise ValueError(f"pmf sums to {math.fsum(vals)!r}, not 1")
        if any(v < 0 for v in vals):
            raise ValueError("pmf entries must be non-negative")
        object.__setattr__(self, "p", vals)

    @property
    def k(self) -> int:
        return len(self.p)

    @property
    def exact(self) -> bool:
        return isinstance(self.p[0], Fraction)

    @classmethod
    def uniform(cls, k: int, exact: bool = True) -> "Pmf":
        return cls((Fraction(1, k) if exact else 1.0 / k,) * k)

    def as_array(self) -> np.ndarray:
        return np.array(self.p, dtype=object if self.exact else float)


def as_pmf(p) -> Pmf:
    return p if isinstance(p, Pmf) else Pmf(tuple(p))


def _ryser_exact(a) -> Fraction:
    # Gray-code walk over column subsets; row sums updated one column at a time.
    k = a.shape[0]
    rows = [list(a[i]) for i in range(k)]
    row_sums = [Fraction(0)] * k
    total = Fraction(0)
    subset = 0
    size = 0
    for g in range(1, 1 << k):
        j = (g & -g).bit_length() - 1
        subset ^= 1 << j
        if subset >> j & 1:
            size += 1
            for i in range(k):
                row_sums[i] += rows[i][j]
        else:
            size -= 1
            for i in range(k):
                row_sums[i] -= rows[i][j]
        prod = Fraction(1)
        for s in row_sums:
            if not s:
                prod = 0
                break
            prod *= s
        if prod:
            total += prod if (k - size) % 2 == 0 else -prod
    return total


def _subset_bits(k, start, stop):
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(float)


def _ryser_float(a, chunk=1 << 15) -> float:
    k = a.shape[0]
    total = 0.0
    n_subsets = 1 << k
    for start in range(1, n_subsets, chunk):
        stop = min(start + chunk, n_subsets)
        bits = _subset_bits(k, start, stop)
        sizes = bits.sum(axis=1)
        signs = np.where((k - sizes) % 2 == 0, 1.0, -1.0)
        total += float(np.dot(signs, np.prod(bits @ a.T, axis=1)))
    return total


def permanent(theta):
    """Permanent by inclusion-exclusion over column subsets (Ryser).

    Parameters
    ----------
    theta : array_like, shape (k, k)
        Exact entries give an exact Fraction; float entries give a float.

    Raises
    ------
    ValueError
        If ``k`` exceeds :data:`MAX_PERMANENT_DIM` ("dimension too large").
    """
    a = as_matrix(theta)
    k = a.shape[0]
    if k > MAX_PERMANENT_DIM:
        raise ValueError(f"dimension too large: k={k} > {MAX_PERMANENT_DIM}")
    if k == 0:
        return Fraction(1)
    if a.dtype == object:
        return _ryser_exact(a)
    return _ryser_float(a)


def permanent_bruteforce(theta):
    """Sum over all k! permutations; oracle for small k."""
    a = as_matrix(theta)
    k = a.shape[0]
    total = Fraction(0) if a.dtype == object else 0.0
    for perm in itertools.permutations(range(k)):
        prod = Fraction(1) if a.dtype == object else 1.0
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += prod
    return total


def _power(x, e):
    # 0**0 == 1 in both Fraction and float arithmetic
    return x**e


def theta_matrix(psi, p) -> np.ndarray:
    """``theta[i, j] = p_i ** mu_j`` with ``mu_j = 0`` past the pattern size."""
    psi = as_pattern(psi)
    p = as_pmf(p)
    k = p.k
    if k < psi.m:
        raise ValueError(f"support smaller than pattern size: k={k} < m={psi.m}")
    mu = list(psi.mu) + [0] * (k - psi.m)
    theta = np.empty((k, k), dtype=object if p.exact else float)
    for i in range(k):
        for j in range(k):
            theta[i, j] = _power(p.p[i], mu[j])
    return theta


def pattern_probability(psi, p):
    """Sum over injections ``sigma: [m] -> [k]`` of ``prod p_sigma(i)^mu_i``.

    Injections are visited in lexicographic order of their images, so the
    floating-point summation order is fixed.
    """
    psi = as_pattern(psi)
    p = as_pmf(p)
    k, m = p.k, psi.m
    if k < m:
        raise ValueError(f"support smaller than pattern size: k={k} < m={m}")
    count = math.perm(k, m)
    if count > INJECTION_BUDGET:
        raise BudgetExceededError(
            f"{count} injections exceed the budget of {INJECTION_BUDGET}", count)
    powers = [[_power(p.p[i], mu) for i in range(k)] for mu in psi.mu]
    total = Fraction(0) if p.exact else 0.0
    for sigma in itertools.permutations(range(k), m):
        prod = powers[0][sigma[0]]
        for i in range(1, m):
            prod *= powers[i][sigma[i]]
        total += prod
    return total


def pattern_probability_via_perm(psi, p):
    """``perm(theta(psi; p)) / (k - m)!``."""
    psi = as_pattern(psi)
    p = as_pmf(p)
    theta = theta_matrix(psi, p)
    value = permanent(theta)
    denom = math.factorial(p.k - psi.m)
    return value / denom if p.exact else value / float(denom)
