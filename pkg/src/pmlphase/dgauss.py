"""Gaussian measures on the integer lattice.

``v(x) = exp(-x' V x / (2 beta))`` for ``x`` in Z^d.  The partition function
is summed directly over a box or through its Poisson dual, whose terms decay
like ``exp(-2 pi^2 beta xi' V^-1 xi)`` and so converge fast for large beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from ._numeric import BudgetExceededError, resolve_budget

TAIL_DIGITS = 16
CHUNK = 1 << 18


@dataclass(frozen=True)
class LatticeGaussian:
    """Lattice Gaussian with precision matrix ``V / beta``."""

    V: np.ndarray
    beta: float

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError(f"V must be square, got shape {V.shape}")
        if np.abs(V - V.T).max() > 1e-12:
            raise ValueError("V must be symmetric")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        eig = np.linalg.eigvalsh(V)
        if eig[0] <= 0:
            raise ValueError("V must be positive definite")
        V.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "_eig", eig)

    @property
    def d(self) -> int:
        return self.V.shape[0]

    @property
    def lam_min(self) -> float:
        return float(self._eig[0])

    @property
    def lam_max(self) -> float:
        return float(self._eig[-1])

    def auto_radius(self, digits: int = TAIL_DIGITS) -> int:
        """Box radius past which terms fall below ``10**-digits``."""
        return math.ceil(math.sqrt(2 * self.beta * digits * math.log(10) / self.lam_min))

    def dual_radius(self, digits: int = TAIL_DIGITS) -> int:
        """Dual-box radius for the Poisson sum at the same truncation level."""
        return math.ceil(math.sqrt(digits * math.log(10) * self.lam_max
                                   / (2 * math.pi**2 * self.beta)))


def _box_quadratic_forms(A: np.ndarray, radius: int, budget):
    """Yield ``x' A x`` over the box ``[-radius, radius]^d`` in chunks."""
    d = A.shape[0]
    if radius < 0:
        raise ValueError("radius must be non-negative")
    side = 2 * radius + 1
    n_points = side**d
    budget = resolve_budget(budget)
    if n_points > budget:
        raise BudgetExceededError(
            f"lattice box has {n_points} points, over the budget of {budget}", n_points)
    axis = np.arange(-radius, radius + 1)
    if d == 1:
        yield A[0, 0] * axis.astype(float) ** 2
        return
    # split by the leading coordinates so each chunk is a full trailing grid
    tail_dims = 1
    while tail_dims < d and side ** (tail_dims + 1) <= CHUNK:
        tail_dims += 1
    tail = np.array(np.meshgrid(*([axis] * tail_dims), indexing="ij")).reshape(tail_dims, -1).T
    for lead in product(axis, repeat=d - tail_dims):
        x = np.empty((len(tail), d))
        if lead:
            x[:, : d - tail_dims] = lead
        x[:, d - tail_dims:] = tail
        yield np.einsum("ni,ij,nj->n", x, A, x)


def dg_partition_direct(g: LatticeGaussian, radius: int | None = None, budget=None) -> float:
    """``sum_{|x_i| <= radius} exp(-x' V x / (2 beta))``; radius defaults to auto."""
    r = g.auto_radius() if radius is None else radius
    return math.fsum(float(np.exp(-q / (2 * g.beta)).sum())
                     for q in _box_quadratic_forms(g.V, r, budget))


PREFACTOR_EXPONENTS = ("d/2", "1/2")


def poisson_prefactor(g: LatticeGaussian, exponent: str = "d/2") -> float:
    """``(2 pi)^(d/2) beta^e / sqrt(det V)`` with ``e = d/2`` or ``e = 1/2``.

    Only ``e = d/2`` is the Gaussian integral over R^d; ``"1/2"`` is kept to
    compare against the direct sum.
    """
    if exponent not in PREFACTOR_EXPONENTS:
        raise ValueError(f"exponent must be one of {PREFACTOR_EXPONENTS}")
    e = g.d / 2 if exponent == "d/2" else 0.5
    return (2 * math.pi) ** (g.d / 2) * g.beta**e / math.sqrt(np.linalg.det(g.V))


def dg_dual_sum(g: LatticeGaussian, terms: int | None = None, budget=None) -> float:
    """``Z* = sum_xi exp(-2 pi^2 beta xi' V^-1 xi)`` over the dual box."""
    r = g.dual_radius() if terms is None else terms
    V_inv = np.linalg.inv(g.V)
    return math.fsum(float(np.exp(-2 * math.pi**2 * g.beta * q).sum())
                     for q in _box_quadratic_forms(V_inv, r, budget))


def dg_partition_poisson(g: LatticeGaussian, terms: int | None = None,
                         prefactor: str = "d/2", budget=None) -> float:
    """Partition function from the dual sum; ``terms=0`` keeps only ``xi = 0``."""
    return poisson_prefactor(g, prefactor) * dg_dual_sum(g, terms, budget)


@dataclass(frozen=True)
class QuadraticMoment:
    """``E[X' V X]`` with the prediction ``beta d`` and their difference."""

    expected: float
    prediction: float
    residual: float
    radius: int
    dps: int | None = None
    log10_abs_residual: float | None = None


def _integer_matrix(V):
    Vi = np.rint(V)
    if np.abs(V - Vi).max() > 0:
        raise ValueError("high-precision sums need an integer V")
    return Vi.astype(np.int64)


def _grouped_forms(g: LatticeGaussian, radius: int, budget):
    """Distinct integer values of ``x' V x`` on the box and their multiplicities."""
    Vi = _integer_matrix(g.V)
    counts: dict = {}
    for q in _box_quadratic_forms(Vi.astype(float), radius, budget):
        vals, cnt = np.unique(np.rint(q).astype(np.int64), return_counts=True)
        for v, c in zip(vals.tolist(), cnt.tolist()):
            counts[v] = counts.get(v, 0) + c
    return counts


def dg_expected_quadratic(g: LatticeGaussian, radius: int | None = None,
                          dps: int | None = None, budget=None) -> QuadraticMoment:
    """``E_mu[X' V X]`` by a direct weighted lattice sum.

    With ``dps`` the sum runs in ``dps``-digit arithmetic (mpmath), so the
    exponentially small residual ``E - beta d`` can be resolved; this mode
    needs an integer V and groups lattice points by their form value.
    """
    prediction = g.beta * g.d
    if dps is None:
        r = g.auto_radius() if radius is None else radius
        num = []
        den = []
        for q in _box_quadratic_forms(g.V, r, budget):
            w = np.exp(-q / (2 * g.beta))
            num.append(float((q * w).sum()))
            den.append(float(w.sum()))
        expected = math.fsum(num) / math.fsum(den)
        res = expected - prediction
        return QuadraticMoment(expected, prediction, res, r, None,
                               math.log10(abs(res)) if res else -math.inf)
    import mpmath

    r = g.auto_radius(dps + 10) if radius is None else radius
    with mpmath.workdps(dps):
        beta = mpmath.mpf(g.beta)
        num = mpmath.mpf(0)
        den = mpmath.mpf(0)
        for q, c in sorted(_grouped_forms(g, r, budget).items()):
            w = c * mpmath.exp(-q / (2 * beta))
            num += q * w
            den += w
        expected = num / den
        residual = expected - beta * g.d
        # the residual can sit far below the double range, so keep its log too
        log10_res = float(mpmath.log10(abs(residual))) if residual else -math.inf
        return QuadraticMoment(float(expected), prediction, float(residual), r, dps, log10_res)


@dataclass(frozen=True)
class TailBound:
    empirical: float
    bound: float
    R: float
    tau: float

    @property
    def holds(self) -> bool:
        return self.empirical <= self.bound


def tail_bound_value(g: LatticeGaussian, R: float, tau: float) -> float:
    """``beta d tau^-(d/2 + 1) exp(-(1 - tau) R / (2 beta))``."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if R < 0:
        raise ValueError("R must be non-negative")
    d = g.d
    return g.beta * d * tau ** (-(d / 2 + 1)) * math.exp(-(1 - tau) * R / (2 * g.beta))


def dg_tail_bound(g: LatticeGaussian, R: float, tau: float, radius: int | None = None,
                  budget=None) -> TailBound:
    """Empirical ``(1/Z) sum_{x'Vx >= R} x'Vx v(x)`` next to its Gaussian bound."""
    bound = tail_bound_value(g, R, tau)
    r = g.auto_radius() if radius is None else radius
    tail = []
    den = []
    for q in _box_quadratic_forms(g.V, r, budget):
        w = np.exp(-q / (2 * g.beta))
        den.append(float(w.sum()))
        sel = q >= R
        tail.append(float((q[sel] * w[sel]).sum()))
    return TailBound(math.fsum(tail) / math.fsum(den), bound, float(R), float(tau))
