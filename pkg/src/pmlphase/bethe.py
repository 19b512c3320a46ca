"""Bethe free energy and its minimization over the Birkhoff polytope.

The Bethe free energy is convex in the doubly stochastic argument when the
weight matrix is strictly positive, so a conditional-gradient method with a
permutation (assignment) oracle finds the minimizer and certifies it with
the Frank-Wolfe duality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .patterns import as_pattern
from .permanent import as_pmf, theta_matrix

DEFAULT_TOL = 1e-8
MAX_ITER = 10**5
LINE_SEARCH_TOL = 1e-12


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def check_doubly_stochastic(gamma, atol=1e-9) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    if (g < -atol).any() or (g > 1 + atol).any():
        raise ValueError("entries of a doubly stochastic matrix lie in [0, 1]")
    if (np.abs(g.sum(axis=0) - 1) > atol).any() or (np.abs(g.sum(axis=1) - 1) > atol).any():
        raise ValueError("row and column sums must all equal 1")
    return g


def bethe_free_energy(gamma, theta) -> float:
    """``U_B - H_B`` with ``0 log 0 = 0``.

    Returns ``inf`` when some ``gamma[i, j] > 0`` sits on ``theta[i, j] == 0``.
    """
    g = check_doubly_stochastic(gamma)
    t = np.asarray(theta, dtype=float)
    if t.shape != g.shape:
        raise ValueError(f"dimension mismatch: {g.shape} vs {t.shape}")
    if (t < 0).any():
        raise ValueError("theta must be non-negative")
    support = g > 0
    if (support & (t == 0)).any():
        return math.inf
    energy = -float(np.sum(g[support] * np.log(t[support])))
    # F_B = U_B - H_B, H_B = -sum g log g + sum (1-g) log(1-g)
    return energy + float(_xlogx(g).sum()) - float(_xlogx(1.0 - g).sum())


def assignment_min(cost, tie_break: bool = True) -> tuple:
    """Permutation ``pi`` minimizing ``sum_i cost[i, pi[i]]``.

    With ``tie_break`` the lexicographically least optimal permutation is
    returned (rows are fixed one at a time to the smallest column that keeps
    the optimum reachable).
    """
    c = np.asarray(cost, dtype=float)
    if not np.isfinite(c).all():
        raise ValueError("assignment costs must be finite")
    k = c.shape[0]
    rows, cols = linear_sum_assignment(c)
    perm = [0] * k
    for r, col in zip(rows, cols):
        perm[r] = int(col)
    if not tie_break or k <= 1:
        return tuple(perm)
    best = float(c[rows, cols].sum())
    tol = 1e-12 * max(1.0, float(np.abs(c).max())) * k
    fixed: list = []
    used: set = set()
    fixed_cost = 0.0
    for i in range(k):
        for j in range(k):
            if j in used:
                continue
            rest_rows = list(range(i + 1, k))
            rest_cols = [col for col in range(k) if col not in used and col != j]
            rest = 0.0
            if rest_rows:
                sub = c[np.ix_(rest_rows, rest_cols)]
                r2, c2 = linear_sum_assignment(sub)
                rest = float(sub[r2, c2].sum())
            if fixed_cost + c[i, j] + rest <= best + tol:
                fixed.append(j)
                used.add(j)
                fixed_cost += c[i, j]
                break
    return tuple(fixed)


def _perm_matrix(perm) -> np.ndarray:
    k = len(perm)
    s = np.zeros((k, k))
    s[np.arange(k), list(perm)] = 1.0
    return s


@dataclass
class BetheResult:
    """Minimizer of the Bethe free energy and its optimality certificate."""

    gamma_star: np.ndarray
    free_energy: float
    bethe_perm: float
    gap: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _gradient(x, log_theta):
    with np.errstate(divide="ignore"):
        return -log_theta + np.log(x) + np.log1p(-x) + 2.0


def _energy(x, log_theta):
    return -float(np.sum(x * log_theta)) + float(_xlogx(x).sum()) - float(_xlogx(1.0 - x).sum())


def _line_search(x, d, log_theta, step_max):
    """Largest step in [0, step_max] with non-positive directional derivative.

    Bisection on the derivative of a convex 1-D restriction; the returned step
    never increases the energy.
    """
    mask = d != 0
    dm = d[mask]
    lt = log_theta[mask]

    def slope(step):
        y = x[mask] + step * dm
        with np.errstate(divide="ignore", invalid="ignore"):
            gy = -lt + np.log(y) + np.log1p(-y) + 2.0
        return float(np.dot(gy, dm))

    lo, hi = 0.0, step_max
    # the endpoint slope is infinite when an entry reaches 0 or 1
    y_end = x[mask] + step_max * dm
    if (y_end > 0).all() and (y_end < 1).all() and slope(step_max) <= 0:
        return step_max
    while hi - lo > LINE_SEARCH_TOL * max(step_max, 1e-300):
        mid = 0.5 * (lo + hi)
        s = slope(mid)
        if math.isnan(s) or s > 0:
            hi = mid
        else:
            lo = mid
    return lo


def minimize_bethe(theta, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                   record_history: bool = False) -> BetheResult:
    """Minimize the Bethe free energy over doubly stochastic matrices.

    Away-step Frank-Wolfe from ``J_k / k`` (held as the average of the k
    cyclic shifts) with the assignment oracle and exact line search.  Stops
    when the Frank-Wolfe gap, an upper bound on ``F(x) - min F``, is at most
    ``tol``; otherwise returns after ``max_iter`` with ``converged=False``.
    """
    t = np.asarray(theta, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {t.shape}")
    if not (t > 0).all():
        raise ValueError("strictly positive matrix required")
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = t.shape[0]
    log_theta = np.log(t)
    if k == 1:
        f = -float(log_theta[0, 0])
        return BetheResult(np.ones((1, 1)), f, math.exp(-f), 0.0, 0, True, [f])

    active = {tuple((i + s) % k for i in range(k)): 1.0 / k for s in range(k)}
    x = np.full((k, k), 1.0 / k)
    history = [_energy(x, log_theta)]
    gap = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad = _gradient(x, log_theta)
        s_perm = assignment_min(grad, tie_break=False)
        s = _perm_matrix(s_perm)
        gap = float(np.sum(grad * (x - s)))
        if gap <= tol:
            iterations -= 1
            break
        v_perm = max(active, key=lambda p: float(grad[np.arange(k), list(p)].sum()))
        v = _perm_matrix(v_perm)
        away_gap = float(np.sum(grad * (v - x)))
        if gap >= away_gap or len(active) == 1:
            d = s - x
            step_max = 1.0
            away = False
        else:
            alpha_v = active[v_perm]
            d = x - v
            step_max = alpha_v / (1.0 - alpha_v)
            away = True
        step = _line_search(x, d, log_theta, step_max)
        if step <= 0.0:
            # no progress possible along the chosen direction
            break
        if away:
            for p in active:
                active[p] *= 1.0 + step
            active[v_perm] -= step
            if step >= step_max or active[v_perm] <= 1e-15:
                del active[v_perm]
        else:
            for p in active:
                active[p] *= 1.0 - step
            active[s_perm] = active.get(s_perm, 0.0) + step
            if step >= 1.0:
                active = {s_perm: 1.0}
            active = {p: w for p, w in active.items() if w > 1e-15}
        x = x + step * d
        if record_history:
            history.append(_energy(x, log_theta))
    final = _energy(x, log_theta)
    return BetheResult(
        gamma_star=x,
        free_energy=final,
        bethe_perm=math.exp(-final),
        gap=max(gap, 0.0),
        iterations=iterations,
        converged=gap <= tol,
        history=history,
    )


def bethe_permanent(theta, tol: float = DEFAULT_TOL) -> float:
    return minimize_bethe(theta, tol=tol).bethe_perm


def bethe_pattern_probability(psi, p, tol: float = DEFAULT_TOL) -> float:
    """``perm_B(theta(psi; p)) / (k - m)!`` for strictly positive ``p``."""
    psi = as_pattern(psi)
    p = as_pmf(p)
    if any(v <= 0 for v in p.p):
        raise ValueError("strictly positive pmf required (zero theta entries)")
    theta = np.asarray(theta_matrix(psi, p), dtype=float)
    return minimize_bethe(theta, tol=tol).bethe_perm / math.factorial(p.k - psi.m)


__all__ = [
    "BetheResult",
    "assignment_min",
    "bethe_free_energy",
    "bethe_pattern_probability",
    "bethe_permanent",
    "check_doubly_stochastic",
    "minimize_bethe",
]
