"""Degree-M lifted permanents.

``perm_{B,M}(theta)^M`` is an explicit sum over ``A_{k,M}``, the k x k
non-negative integer tables with every row and column summing to M.  The
same quantity is the average permanent of block-permutation lifts of
``theta``, which :func:`lifted_permanent_mc` samples directly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._numeric import (
    BudgetExceededError,
    LogNumber,
    as_matrix,
    factorial,
    log_factorial,
    resolve_budget,
)
from .patterns import as_pattern
from .permanent import _ryser_exact, as_pmf, theta_matrix

MC_BLOCK = 256
MAX_LIFT_DIM = 18


@dataclass(frozen=True)
class ContingencyTable:
    """k x k non-negative integer table with all margins equal to M."""

    a: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.a)
        k = len(rows)
        if k == 0 or any(len(r) != k for r in rows):
            raise ValueError("a contingency table is a non-empty square array")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("table entries must be non-negative")
        margins = {sum(r) for r in rows} | {sum(c) for c in zip(*rows)}
        if len(margins) != 1:
            raise ValueError(f"row and column sums differ: {sorted(margins)}")
        object.__setattr__(self, "a", rows)

    @property
    def k(self) -> int:
        return len(self.a)

    @property
    def M(self) -> int:
        return sum(self.a[0])

    def as_array(self) -> np.ndarray:
        return np.array(self.a, dtype=np.int64)


def _as_table_array(A) -> np.ndarray:
    if isinstance(A, ContingencyTable):
        return A.as_array()
    return ContingencyTable(tuple(map(tuple, np.asarray(A)))).as_array()


@lru_cache(maxsize=64)
def compositions(M: int, k: int) -> np.ndarray:
    """All x in Z_+^k with sum M, in lexicographic order."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for v in range(remaining + 1):
            rec(prefix + (v,), remaining - v, slots - 1)

    rec((), M, k)
    arr = np.array(out, dtype=np.int64).reshape(len(out), k)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _count(M, rows_left, residual):
    if rows_left == 1:
        return 1
    total = 0
    for row in _bounded_compositions(M, residual):
        rest = tuple(sorted(r - x for r, x in zip(residual, row)))
        total += _count(M, rows_left - 1, rest)
    return total


def count_tables(k: int, M: int) -> int:
    """``|A_{k,M}|`` by a row-by-row recursion on residual column sums."""
    if k < 1 or M < 0:
        raise ValueError("need k >= 1 and M >= 0")
    return _count(M, k, (M,) * k)


def _bounded_compositions(total, bounds):
    """Compositions of ``total`` with part i at most ``bounds[i]``."""
    k = len(bounds)
    suffix = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix[i] = suffix[i + 1] + bounds[i]

    def rec(i, remaining, prefix):
        if i == k - 1:
            if remaining <= bounds[i]:
                yield prefix + (remaining,)
            return
        lo = max(0, remaining - suffix[i + 1])
        for v in range(lo, min(bounds[i], remaining) + 1):
            yield from rec(i + 1, remaining - v, prefix + (v,))

    if total > suffix[0]:
        return
    yield from rec(0, total, ())


def estimate_tables(k: int, M: int) -> float:
    """Independence estimate of ``|A_{k,M}|``.

    ``C(M+k-1, k-1)^(2k) / C(kM+k^2-1, k^2-1)``; it undercounts by a factor
    between about 0.6 and 0.8 and costs nothing, unlike the exact count.
    """
    if k < 1 or M < 0:
        raise ValueError("need k >= 1 and M >= 0")
    return float(Fraction(math.comb(M + k - 1, k - 1) ** (2 * k),
                          math.comb(k * M + k * k - 1, k * k - 1)))


def _check_budget(k, M, budget):
    """Exact ``|A_{k,M}|``, or BudgetExceededError when it exceeds ``budget``.

    The exact count is itself exponential in k, so a cheap estimate well past
    the budget refuses first.
    """
    budget = resolve_budget(budget)
    est = estimate_tables(k, M)
    if est > 2 * budget:
        raise BudgetExceededError(
            f"|A_{{{k},{M}}}| is about {est:.3g} tables, over the budget of {budget}",
            int(est))
    n = count_tables(k, M)
    if n > budget:
        raise BudgetExceededError(
            f"|A_{{{k},{M}}}| = {n} tables exceed the budget of {budget}", n)
    return n


@lru_cache(maxsize=8)
def _tables_cached(k: int, M: int) -> np.ndarray:
    if k == 1:
        out = np.array([[[M]]], dtype=np.int64)
        out.setflags(write=False)
        return out
    rows = compositions(M, k)
    partial = np.zeros((1, 0, k), dtype=np.int64)
    residual = np.full((1, k), M, dtype=np.int64)
    for _ in range(k - 1):
        new_partial, new_residual = [], []
        step = max(1, 2_000_000 // len(rows))
        for s in range(0, len(residual), step):
            res = residual[s:s + step]
            ok = (rows[None, :, :] <= res[:, None, :]).all(axis=2)
            pi, ci = np.nonzero(ok)
            new_partial.append(np.concatenate(
                [partial[s:s + step][pi], rows[ci][:, None, :]], axis=1))
            new_residual.append(res[pi] - rows[ci])
        partial = np.concatenate(new_partial)
        residual = np.concatenate(new_residual)
    out = np.concatenate([partial, residual[:, None, :]], axis=1)
    out.setflags(write=False)
    return out


def tables_array(k: int, M: int, budget=None) -> np.ndarray:
    """Every element of ``A_{k,M}`` as an (N, k, k) array, rows lexicographic."""
    _check_budget(k, M, budget)
    return _tables_cached(k, M)


def enumerate_tables(k: int, M: int, budget=None):
    """Yield each :class:`ContingencyTable` in ``A_{k,M}`` exactly once."""
    for a in tables_array(k, M, budget):
        yield ContingencyTable(tuple(map(tuple, a.tolist())))


@lru_cache(maxsize=1 << 16)
def _int_phi_hat(M: int, row: tuple) -> int:
    # M! * prod_j (M - x_j)! / x_j!, an integer because row sums to M
    value = factorial(M)
    for x in row:
        value //= factorial(x)
    for x in row:
        value *= factorial(M - x)
    return value


def weight_int(A) -> int:
    """``(M!)^k * w(A)``; an integer since each row sums to M."""
    a = _as_table_array(A)
    M = int(a[0].sum())
    value = 1
    for row in a.tolist():
        value *= _int_phi_hat(M, tuple(row))
    return value


def weight_w(A, exact: bool = False):
    """``w(A) = prod_{i,j} (M - a_ij)! / a_ij!``.

    Returns a Fraction when ``exact`` else a :class:`LogNumber`.
    """
    a = _as_table_array(A)
    k = a.shape[0]
    M = int(a[0].sum())
    if exact:
        return Fraction(weight_int(a), factorial(M) ** k)
    return LogNumber(float(sum(log_factorial(M - int(x)) - log_factorial(int(x))
                               for x in a.flat)))


@lru_cache(maxsize=8)
def _log_weights_cached(k: int, M: int) -> np.ndarray:
    tables = _tables_cached(k, M)
    lf = np.array([log_factorial(i) for i in range(M + 1)])
    out = (lf[M - tables] - lf[tables]).reshape(len(tables), -1).sum(axis=1)
    out.setflags(write=False)
    return out


def log_weights(k: int, M: int, budget=None) -> np.ndarray:
    """``log w(A)`` for every table of :func:`tables_array` (same order)."""
    _check_budget(k, M, budget)
    return _log_weights_cached(k, M)


def _log_lifted_power(theta: np.ndarray, M: int, budget) -> LogNumber:
    k = theta.shape[0]
    tables = tables_array(k, M, budget).reshape(-1, k * k)
    logw = _log_weights_cached(k, M)
    flat = theta.reshape(-1)
    with np.errstate(divide="ignore"):
        log_theta = np.log(flat)
    zero = flat == 0
    contrib = tables * np.where(zero, 0.0, log_theta)
    if zero.any():
        # theta_ij = 0 kills every table with a_ij > 0 (and 0^0 = 1)
        dead = (tables[:, zero] > 0).any(axis=1)
        log_terms = np.where(dead, -np.inf, logw + contrib.sum(axis=1))
    else:
        log_terms = logw + contrib.sum(axis=1)
    total = LogNumber.logsumexp(log_terms)
    return total * LogNumber((2 * k - k * k) * log_factorial(M))


def _exact_lifted_power(theta: np.ndarray, M: int, budget) -> Fraction:
    k = theta.shape[0]
    tables = tables_array(k, M, budget)
    powers = [[[theta[i, j] ** a for a in range(M + 1)] for j in range(k)]
              for i in range(k)]
    total = Fraction(0)
    for a in tables.tolist():
        term = Fraction(weight_int(a))
        for i in range(k):
            for j in range(k):
                term *= powers[i][j][a[i][j]]
                if not term:
                    break
            if not term:
                break
        total += term
    # w(A) = weight_int / (M!)^k, then the (M!)^(2k - k^2) prefactor
    return total * Fraction(factorial(M)) ** (k - k * k)


def lifted_permanent_power(theta, M: int, budget=None):
    """``perm_{B,M}(theta)^M`` from the contingency-table sum.

    Exact theta gives a Fraction; float theta gives a :class:`LogNumber`.
    """
    a = as_matrix(theta)
    if M < 1:
        raise ValueError("M must be a positive integer")
    if a.dtype == object:
        if any(v < 0 for v in a.flat):
            raise ValueError("theta must be non-negative")
        return _exact_lifted_power(a, M, budget)
    if (a < 0).any():
        raise ValueError("theta must be non-negative")
    return _log_lifted_power(a, M, budget)


def lifted_permanent_exact(theta, M: int, budget=None) -> float:
    """``perm_{B,M}(theta)``, the M-th root of :func:`lifted_permanent_power`."""
    a = as_matrix(theta)
    power = lifted_permanent_power(a.astype(float), M, budget)
    return float(power.root(M))


def lifted_permanent_power_multinomial(theta, M: int, budget=None) -> Fraction:
    """Same power via multinomial coefficients of rows, columns and entries.

    Kept as a separate code path for cross-checking; exact arithmetic only.
    """
    a = as_matrix(theta)
    if a.dtype != object:
        a = np.vectorize(Fraction, otypes=[object])(a)
    k = a.shape[0]

    def multinomial(parts):
        value = factorial(M)
        for x in parts:
            value //= factorial(x)
        return value

    total = Fraction(0)
    for t in tables_array(k, M, budget).tolist():
        num = 1
        for row in t:
            num *= multinomial(row)
        for col in zip(*t):
            num *= multinomial(col)
        den = 1
        for row in t:
            for x in row:
                den *= math.comb(M, x)
        term = Fraction(num, den)
        for i in range(k):
            for j in range(k):
                term *= a[i, j] ** t[i][j]
        total += term
    return total


def random_lift(k: int, M: int, rng) -> np.ndarray:
    """Block permutations ``P^(i,j)`` as a (k, k, M) array of images."""
    base = np.tile(np.arange(M), (k * k, 1))
    return rng.permuted(base, axis=1).reshape(k, k, M)


def lift_matrix(theta, blocks) -> np.ndarray:
    """``theta (.) Lambda``: block (i, j) is ``theta[i, j] * P^(i,j)``."""
    t = np.asarray(theta)
    k, _, M = blocks.shape
    out = np.zeros((k * M, k * M), dtype=t.dtype)
    rows = np.arange(M)
    for i in range(k):
        for j in range(k):
            out[i * M + rows, j * M + blocks[i, j]] = t[i, j]
    return out


@lru_cache(maxsize=4)
def _ryser_tables(n: int):
    idx = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(n)) & 1).astype(float)
    signs = np.where((n - bits.sum(axis=1)) % 2 == 0, 1.0, -1.0)
    return bits, signs


def _batch_permanent(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[1]
    bits, signs = _ryser_tables(n)
    # row sums over every column subset for every matrix in the batch
    sums = np.einsum("sj,bij->bsi", bits, mats)
    return np.prod(sums, axis=2) @ signs


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sampled degree-M lifted permanent.

    ``mean_power`` estimates ``perm_{B,M}^M`` with standard error
    ``stderr_power``; ``estimate`` is its M-th root and ``stderr`` the
    delta-method error of that root.
    """

    estimate: float
    stderr: float
    mean_power: object
    stderr_power: float
    samples: int
    seed: int


def _mc_block(theta, M, count, seed_seq, exact):
    rng = np.random.default_rng(seed_seq)
    k = theta.shape[0]
    lifts = [lift_matrix(theta, random_lift(k, M, rng)) for _ in range(count)]
    if exact:
        return [_ryser_exact(L) for L in lifts]
    return list(_batch_permanent(np.stack(lifts)))


def lifted_permanent_mc(theta, M: int, samples: int, seed: int,
                        workers: int = 1) -> MonteCarloEstimate:
    """Average ``perm(theta (.) Lambda)`` over uniform block-permutation lifts.

    Samples are drawn in fixed blocks of :data:`MC_BLOCK`; block ``b`` uses
    child ``b`` of ``SeedSequence(seed).spawn(...)``.  The result therefore
    does not depend on ``workers``.
    """
    a = as_matrix(theta)
    k = a.shape[0]
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if M < 1:
        raise ValueError("M must be a positive integer")
    if k * M > MAX_LIFT_DIM:
        raise BudgetExceededError(
            f"lifted dimension kM = {k * M} exceeds {MAX_LIFT_DIM}", k * M)
    exact = a.dtype == object
    n_blocks = -(-samples // MC_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    sizes = [min(MC_BLOCK, samples - b * MC_BLOCK) for b in range(n_blocks)]
    jobs = list(zip(sizes, children))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _mc_block(a, M, job[0], job[1], exact), jobs))
    else:
        parts = [_mc_block(a, M, c, s, exact) for c, s in jobs]
    values = [v for part in parts for v in part]
    n = len(values)
    if exact:
        mean = sum(values, Fraction(0)) / n
        var = sum(((v - mean) ** 2 for v in values), Fraction(0)) / (n - 1)
        se_power = math.sqrt(var / n)
        mean_f = float(mean)
    else:
        arr = np.asarray(values, dtype=float)
        mean = mean_f = float(arr.mean())
        se_power = float(arr.std(ddof=1) / math.sqrt(n))
    if mean_f <= 0:
        return MonteCarloEstimate(0.0, se_power, mean, se_power, n, seed)
    root = mean_f ** (1.0 / M)
    se_root = root / (M * mean_f) * se_power
    return MonteCarloEstimate(root, se_root, mean, se_power, n, seed)


def beta_kM(psi, p, M: int, k: int | None = None, budget=None) -> float:
    """``perm_{B,M}(theta(psi; p))`` for a pmf ``p`` on ``[k]``."""
    psi = as_pattern(psi)
    p = as_pmf(p)
    if k is not None and k != p.k:
        raise ValueError(f"pmf has support {p.k}, expected k={k}")
    return lifted_permanent_exact(theta_matrix(psi, p), M, budget)
