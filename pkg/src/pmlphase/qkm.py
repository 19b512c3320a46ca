"""The distribution Q_{k,M}(A) proportional to w(A) on A_{k,M}.

Exact statistics use integer weights ``(M!)^k w(A) = prod_rows phi_hat(row)``
and sum them row by row, caching partial sums over the remaining rows by
their (sorted) residual column sums.  All moments come out as Fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._numeric import LogNumber, exact_log, factorial, log_factorial
from .lifted import (
    ContingencyTable,
    _as_table_array,
    _bounded_compositions,
    _check_budget,
    _int_phi_hat,
    weight_w,
)


@dataclass(frozen=True)
class QkmStats:
    """Exact partition function and low moments of ``a_11`` under Q_{k,M}."""

    k: int
    M: int
    Z: LogNumber
    Z_exact: Fraction
    mean_a: Fraction
    second_moment: Fraction
    variance: Fraction
    cross_row: Fraction | None
    cross_diag: Fraction | None
    n_tables: int


@lru_cache(maxsize=None)
def _rows_sum(M: int, rows_left: int, residual: tuple) -> int:
    """Sum of prod phi_hat over ``rows_left`` rows with column sums ``residual``."""
    if rows_left == 0:
        return 1 if not any(residual) else 0
    if rows_left == 1:
        return _int_phi_hat(M, residual)
    total = 0
    for row in _bounded_compositions(M, residual):
        rest = tuple(sorted(r - x for r, x in zip(residual, row)))
        total += _int_phi_hat(M, row) * _rows_sum(M, rows_left - 1, rest)
    return total


def _minus(a, b):
    return tuple(sorted(x - y for x, y in zip(a, b)))


def qkm_stats(k: int, M: int, budget=None) -> QkmStats:
    """Exact Z, E[a11], E[a11^2], Var(a11), E[a11 a12] and E[a11 a22]."""
    if k < 1 or M < 0:
        raise ValueError("need k >= 1 and M >= 0")
    n_tables = _check_budget(k, M, budget)
    full = (M,) * k
    z_int = _rows_sum(M, k, full)
    s1 = s2 = s12 = s22 = 0
    first_rows = list(_bounded_compositions(M, full))
    for r1 in first_rows:
        rest1 = _minus(full, r1)
        w1 = _int_phi_hat(M, r1) * _rows_sum(M, k - 1, rest1)
        s1 += r1[0] * w1
        s2 += r1[0] * r1[0] * w1
        if k >= 2:
            s12 += r1[0] * r1[1] * w1
    if k >= 2:
        for r1 in first_rows:
            if r1[0] == 0:
                continue
            phi1 = _int_phi_hat(M, r1) * r1[0]
            resid = tuple(M - x for x in r1)
            for r2 in _bounded_compositions(M, resid):
                if r2[1] == 0:
                    continue
                s22 += phi1 * _int_phi_hat(M, r2) * r2[1] * _rows_sum(
                    M, k - 2, _minus(resid, r2))
    scale = factorial(M) ** k
    mean = Fraction(s1, z_int)
    second = Fraction(s2, z_int)
    return QkmStats(
        k=k,
        M=M,
        Z=LogNumber(exact_log(z_int) - k * exact_log(factorial(M))),
        Z_exact=Fraction(z_int, scale),
        mean_a=mean,
        second_moment=second,
        variance=second - mean * mean,
        cross_row=Fraction(s12, z_int) if k >= 2 else None,
        cross_diag=Fraction(s22, z_int) if k >= 2 else None,
        n_tables=n_tables,
    )


@dataclass(frozen=True)
class MaximizerU:
    """Circulant table whose first row spreads M as evenly as possible."""

    k: int
    M: int
    q: int
    r: int
    table: ContingencyTable
    w_exact: Fraction
    w_star: LogNumber

    @property
    def u(self) -> tuple:
        return self.table.a[0]


def maximizer_u(k: int, M: int) -> MaximizerU:
    """The maximizer U of w over A_{k,M} and ``w(U)`` in closed form."""
    if k < 1 or M < 0:
        raise ValueError("need k >= 1 and M >= 0")
    q, r = divmod(M, k)
    u = [q + 1] * r + [q] * (k - r)
    table = ContingencyTable(tuple(tuple(u[(j - i) % k] for j in range(k))
                                   for i in range(k)))
    w = Fraction(factorial(M - q - 1), factorial(q + 1)) ** (k * r) if r else Fraction(1)
    w *= Fraction(factorial(M - q), factorial(q)) ** (k * (k - r))
    return MaximizerU(k, M, q, r, table, w, LogNumber(exact_log(w)))


def majorizes(x, y) -> bool:
    """True iff ``x`` majorizes ``y`` (``y`` is majorized by ``x``)."""
    x = list(x)
    y = list(y)
    if len(x) != len(y):
        raise ValueError("vectors must have equal length")
    if sum(x) != sum(y):
        return False
    xs = sorted(x, reverse=True)
    ys = sorted(y, reverse=True)
    px = py = 0
    for a, b in zip(xs, ys):
        px += a
        py += b
        if px < py:
            return False
    return True


def phi(x, exact: bool = False):
    """Row factor ``prod_j (sum_{l != j} x_l)! / x_j!``; w(A) is its row product."""
    x = [int(v) for v in x]
    if any(v < 0 for v in x):
        raise ValueError("phi takes non-negative integers")
    s = sum(x)
    if exact:
        value = Fraction(1)
        for v in x:
            value *= Fraction(factorial(s - v), factorial(v))
        return value
    return LogNumber(sum(log_factorial(s - v) - log_factorial(v) for v in x))


def normalized_Z(k: int, M: int, budget=None) -> float:
    """``[(M!)^(2k - k^2) Z_{k,M}]^(1/M)``, computed in log space."""
    if M < 1:
        raise ValueError("M must be positive")
    stats = qkm_stats(k, M, budget)
    log_value = (2 * k - k * k) * log_factorial(M) + stats.Z.log_value
    return math.exp(log_value / M)


def normalized_Z_limit(k: int) -> float:
    """Large-M limit ``(k-1)^(k(k-1)) / k^(k(k-2))`` (k >= 3)."""
    return math.exp(k * (k - 1) * math.log(k - 1) - k * (k - 2) * math.log(k))


def variance_rate_limit(k: int) -> float:
    """Large-M limit of ``Var(a11) / M``: ``(k-1)^3 / (k^3 (k-2))`` (k >= 3)."""
    return (k - 1) ** 3 / (k**3 * (k - 2))


@dataclass(frozen=True)
class GaussianApprox:
    """Discrete Gaussian stand-in for Q_{k,M} around U."""

    k: int
    M: int
    rho: float
    sigma_sq: float
    B: np.ndarray


def build_B(k: int) -> np.ndarray:
    """Integer Gram matrix with ``t' B t = ||T||^2`` for zero-margin T.

    ``t`` lists the free entries ``T[i, j]``, ``i, j < k - 1``, row-major; the
    last row and column are completed so every margin is zero.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    d = (k - 1) ** 2
    E = np.zeros((k * k, d), dtype=np.int64)
    for idx in range(d):
        t = np.zeros(d, dtype=np.int64)
        t[idx] = 1
        E[:, idx] = complete_zero_margins(t, k).reshape(-1)
    return E.T @ E


def complete_zero_margins(t, k: int) -> np.ndarray:
    """k x k integer matrix with free block ``t`` and all margins zero."""
    core = np.asarray(t, dtype=np.int64).reshape(k - 1, k - 1)
    T = np.zeros((k, k), dtype=np.int64)
    T[:-1, :-1] = core
    T[:-1, -1] = -core.sum(axis=1)
    T[-1, :-1] = -core.sum(axis=0)
    T[-1, -1] = core.sum()
    return T


def gaussian_approx(k: int, M: int) -> GaussianApprox:
    if k < 3:
        raise ValueError("the Gaussian approximation needs k >= 3")
    rho = M / k
    return GaussianApprox(k, M, rho, (k - 1) / (k - 2) * rho, build_B(k))


def _deviation(A):
    a = _as_table_array(A)
    k = a.shape[0]
    M = int(a[0].sum())
    U = maximizer_u(k, M).table.as_array()
    return a, k, M, a - U


def gaussian_weight(A) -> float:
    """``exp(-(1/2) ((k-2)/(k-1)) (1/rho) sum t^2)`` with ``T = A - U``."""
    _, k, M, T = _deviation(A)
    if M == 0:
        return 1.0
    rho = M / k
    return math.exp(-0.5 * (k - 2) / (k - 1) / rho * float((T * T).sum()))


def gauss_error(A) -> tuple[float, float]:
    """Log-ratio error of the Gaussian weight and its guaranteed bound.

    Returns ``(lhs, bound)`` with
    ``lhs = |log(w(A)/w(U)) - log(w~(A)/w~(U))|`` and
    ``bound = (4/rho^2) sum (|t|+1)^3 + (3/(2 rho)) sum |t|``.
    Only defined for ``k >= 3``, ``rho >= 4`` and ``max |t| <= rho / 9``.
    """
    a, k, M, T = _deviation(A)
    rho = Fraction(M, k)
    if k < 3 or rho < 4 or np.abs(T).max() > rho / 9:
        raise ValueError("outside the Gaussian-error regime: need k >= 3, rho >= 4, max|t| <= rho/9")
    ratio = weight_w(a, exact=True) / maximizer_u(k, M).w_exact
    log_ratio = exact_log(ratio)
    log_gauss = math.log(gaussian_weight(a))
    lhs = abs(log_ratio - log_gauss)
    abs_t = np.abs(T).astype(float)
    rho_f = float(rho)
    bound = 4.0 / rho_f**2 * float(((abs_t + 1) ** 3).sum()) + 1.5 / rho_f * float(abs_t.sum())
    return lhs, bound
