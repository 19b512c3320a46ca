"""Independent reference computations used only by the tests.

Each oracle recomputes a quantity by a different, slower route (brute force
over sequences, grids or permutations, scalar optimizers, closed forms)
without calling the code path it checks.
"""

import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize, minimize_scalar


def relabel(seq):
    """Pattern of a sequence by first occurrence (local re-implementation)."""
    labels = {}
    return tuple(labels.setdefault(x, len(labels) + 1) for x in seq)


def restricted_growth_strings(n):
    """All patterns of length n, generated as restricted growth strings."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(1, top + 2):
            yield from rec(prefix + [v], max(top, v))
    yield from rec([], 0)


def multiplicities(psi):
    m = max(psi)
    return tuple(psi.count(j) for j in range(1, m + 1))


def probability_by_sequences(psi, p):
    """Sum of prod p(x_i) over all sequences x^n in [k]^n with pattern psi."""
    psi = tuple(psi)
    n = len(psi)
    total = Fraction(0) if isinstance(p[0], Fraction) else 0.0
    for x in itertools.product(range(len(p)), repeat=n):
        if relabel(x) == psi:
            prod = 1
            for xi in x:
                prod *= p[xi]
            total += prod
    return total


def perm_by_permutations(a):
    k = len(a)
    total = 0
    for s in itertools.permutations(range(k)):
        prod = 1
        for i in range(k):
            prod *= a[i][s[i]]
        total += prod
    return total


def bethe_energy(g, theta):
    g = np.asarray(g, float)
    t = np.asarray(theta, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(g > 0, g * np.log(np.where(g > 0, g, 1)), 0.0)
        b = np.where(g < 1, (1 - g) * np.log(np.where(g < 1, 1 - g, 1)), 0.0)
    return float(-(g * np.log(t)).sum() + a.sum() - b.sum())


def bethe_k2(theta):
    """Minimum of F_B over D_2 = {[[x, 1-x], [1-x, x]]}: bounded scalar search plus grid."""
    def f(x):
        return bethe_energy([[x, 1 - x], [1 - x, x]], theta)

    grid = np.linspace(0, 1, 20001)
    vals = [f(x) for x in grid]
    best = float(min(vals))
    res = minimize_scalar(f, bounds=(0, 1), method="bounded", options={"xatol": 1e-12})
    return math.exp(-min(best, float(res.fun)))


def bethe_slsqp(theta, starts=4, seed=0):
    """Generic constrained minimization of F_B over D_k (SLSQP, several starts)."""
    t = np.asarray(theta, float)
    k = t.shape[0]
    rng = np.random.default_rng(seed)
    cons = []
    for i in range(k):
        cons.append({"type": "eq", "fun": lambda x, i=i: x.reshape(k, k)[i].sum() - 1})
    for j in range(k - 1):
        cons.append({"type": "eq", "fun": lambda x, j=j: x.reshape(k, k)[:, j].sum() - 1})
    best = math.inf
    for s in range(starts):
        x0 = np.full(k * k, 1.0 / k) if s == 0 else rng.dirichlet(np.ones(k), k).reshape(-1)
        with warnings.catch_warnings():
            # SLSQP reports clipping steps back into the bounds
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(lambda x: bethe_energy(np.clip(x, 1e-300, 1).reshape(k, k), t), x0,
                           method="SLSQP", bounds=[(1e-12, 1 - 1e-12)] * (k * k),
                           constraints=cons, options={"ftol": 1e-14, "maxiter": 1000})
        best = min(best, float(res.fun))
    return math.exp(-best)


def tables_by_grid(k, M):
    """A_{k,M} by scanning every k x k grid with entries in [0, M]."""
    out = []
    for cells in itertools.product(range(M + 1), repeat=k * k):
        a = np.array(cells).reshape(k, k)
        if (a.sum(axis=0) == M).all() and (a.sum(axis=1) == M).all():
            out.append(a)
    return out


def weight_direct(a):
    a = np.asarray(a)
    M = int(a[0].sum())
    w = Fraction(1)
    for x in a.flat:
        w *= Fraction(math.factorial(M - int(x)), math.factorial(int(x)))
    return w


def compositions_brute(M, k):
    return [c for c in itertools.product(range(M + 1), repeat=k) if sum(c) == M]


def theta3_sum(beta, terms=200):
    """sum_x exp(-x^2 / (2 beta)) as a plain scalar loop."""
    return math.fsum(math.exp(-x * x / (2 * beta)) for x in range(-terms, terms + 1))
