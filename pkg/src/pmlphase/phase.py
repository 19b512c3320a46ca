"""PML and lifted-PML phase transitions at the uniform distribution.

Closed forms (thresholds, quadratic roots, second derivatives of
``G(t) = beta(U_k + t xi)``) next to a finite-difference probe that checks
them numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import log_factorial
from .bethe import bethe_pattern_probability
from .lifted import _log_weights_cached, _check_budget, _tables_cached
from .patterns import Pattern, as_pattern, upsilon_exact
from .permanent import pattern_probability
from .qkm import normalized_Z_limit, qkm_stats

CASE_TAGS = ("all-ones", "m2-equal", "m2-unequal", "no-real-roots", "two-roots")
CLASSES = ("local-max", "local-min", "mixed", "inconclusive")
TARGETS = ("pml", "liftedM", "bethe")
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ThresholdReport:
    n: int
    m: int
    U_sum: int
    upsilon: Fraction | float
    discriminant: int
    rho1: float | None
    rho2: float | None
    upsilon_B: float
    case_tag: str
    delta: float

    def quadratic(self) -> tuple:
        """Coefficients ``(a, b, c)`` of ``q(x) = a x^2 + b x + c``."""
        return quadratic_coefficients(self.n, self.U_sum)


def quadratic_coefficients(n: int, U: int) -> tuple:
    """``q(x) = (U - n) x^2 - (U + n^2 - 2n) x + n^2``.

    ``q(k)`` has the sign of the limiting second derivative at ``U_k``
    (k >= 3) up to a positive factor.
    """
    return U - n, -(U + n * n - 2 * n), n * n


def discriminant(n: int, U: int) -> int:
    return (n * n + 2 * n - U) ** 2 - 4 * n**3


def quadratic_roots(n: int, U: int) -> tuple:
    """Roots ``rho1 <= rho2`` of q, or ``(None, None)`` when D < 0 or q is linear."""
    D = discriminant(n, U)
    if U == n or D < 0:
        return None, None
    s = math.sqrt(D)
    b = U + n * n - 2 * n
    return (b - s) / (2 * (U - n)), (b + s) / (2 * (U - n))


def threshold_report(psi, delta: float = 0.5) -> ThresholdReport:
    """Thresholds for the PML (Upsilon) and lifted-PML (Upsilon_B) transitions.

    Parameters
    ----------
    psi : Pattern or str
        Pattern with at least two distinct symbols.
    delta : float in (0, 1)
        Slack used by the two finite ``m = 2`` cases, where Upsilon_B may be
        taken as ``2 + delta`` or ``1 + delta``.
    """
    psi = as_pattern(psi)
    if psi.m < 2:
        raise ValueError("threshold_report needs m >= 2")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n, m, U = psi.n, psi.m, psi.sum_squares
    ups = upsilon_exact(psi)
    D = discriminant(n, U)
    rho1, rho2 = quadratic_roots(n, U)
    if U == n:
        tag, ups_b = "all-ones", math.inf
    elif m == 2:
        if psi.mu[0] == psi.mu[1]:
            tag, ups_b = "m2-equal", 2 + delta
        else:
            tag, ups_b = "m2-unequal", 1 + delta
    elif D < 0:
        tag, ups_b = "no-real-roots", float(ups)
    else:
        tag, ups_b = "two-roots", rho2
    return ThresholdReport(n, m, U, ups, D, rho1, rho2, ups_b, tag, delta)


def second_deriv_formula(psi, k: int, M: int, budget=None) -> float:
    """Exact ``G''_{k,M}(0)`` from Z_{k,M} and Var(a_11) of Q_{k,M}."""
    psi = as_pattern(psi)
    if k < 2:
        raise ValueError("need k >= 2")
    if k < psi.m:
        raise ValueError(f"support smaller than pattern size: k={k} < m={psi.m}")
    stats = qkm_stats(k, M, budget)
    n, U = psi.n, psi.sum_squares
    log_pref = ((2 * k - k * k) * log_factorial(M) + stats.Z.log_value) / M + (1 - n) * math.log(k)
    bracket = (Fraction(k * k, (k - 1) ** 2) * stats.variance / M * (k * U - n * n) - n)
    return math.exp(log_pref) * float(bracket)


def second_deriv_limit(psi, k: int) -> float:
    """Large-M limit of ``G''_{k,M}(0)``; ``+inf`` for k = 2 unless ``2U = n^2``."""
    psi = as_pattern(psi)
    if k < 2:
        raise ValueError("need k >= 2")
    n, U = psi.n, psi.sum_squares
    if k == 2:
        excess = 2 * U - n * n
        if excess == 0:
            return -n * 2.0 ** (1 - n)
        return math.inf if excess > 0 else -math.inf
    bracket = Fraction(k - 1, k * (k - 2)) * (k * U - n * n) - n
    return normalized_Z_limit(k) * k ** (1.0 - n) * float(bracket)


class _LiftedMap:
    """``p -> perm_{B,M}(theta(psi; p))`` with the tables collapsed against mu.

    ``sum_ij a_ij mu_j log p_i = sum_i (A mu)_i log p_i``, so each table only
    contributes a k-vector.
    """

    def __init__(self, psi: Pattern, k: int, M: int, budget=None):
        _check_budget(k, M, budget)
        tables = _tables_cached(k, M)
        mu = np.array(list(psi.mu) + [0] * (k - psi.m), dtype=float)
        self.counts = tables @ mu
        self.logw = _log_weights_cached(k, M)
        self.M = M
        self.offset = (2 * k - k * k) * log_factorial(M)

    def log_power(self, p) -> float:
        terms = self.logw + self.counts @ np.log(p)
        shift = terms.max()
        return float(shift + math.log(np.exp(terms - shift).sum())) + self.offset

    def __call__(self, p) -> float:
        return math.exp(self.log_power(p) / self.M)


def _target_map(target, psi, k, M, budget):
    """Callable target map and a per-evaluation relative rounding estimate."""
    if target == "pml":
        n_terms = math.perm(k, psi.m)
        scale = math.factorial(k - psi.m)

        # beta_k(p) = perm(theta) = (k - m)! P(psi; p), summed over injections
        def f(p):
            return scale * float(pattern_probability(psi, tuple(float(x) for x in p)))

        return f, (psi.n + n_terms) * EPS
    if target == "liftedM":
        if M is None:
            raise ValueError("the liftedM target needs M")
        lifted = _LiftedMap(psi, k, M, budget)
        # rounding in the log-sum is absolute in log space, relative after exp
        scale = float(np.abs(lifted.logw).max() + psi.n * math.log(k) * M) + abs(lifted.offset)
        return lifted, (1.0 + scale / M) * EPS * 8
    if target == "bethe":
        def f(p):
            return bethe_pattern_probability(psi, tuple(float(x) for x in p), tol=1e-13)

        # solver tolerance dominates rounding
        return f, 1e-12
    raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")


def random_directions(k: int, n_dirs: int, seed: int) -> np.ndarray:
    """Unit vectors with zero coordinate sum (Gaussian, projected, normalized)."""
    if k < 2:
        raise ValueError("directions need k >= 2")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_dirs, k))
    g -= g.mean(axis=1, keepdims=True)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class ProbeResult:
    """Finite-difference curvature of the target map at U_k along random directions.

    ``second_diffs`` holds the Richardson combination of the central second
    differences at ``step`` and ``step / 2``; the raw values are kept in
    ``raw_h`` and ``raw_h2``.  ``first_diffs`` is the analogous combination of
    the central first differences.
    """

    target: str
    k: int
    M: int | None
    directions: int
    step: float
    second_diffs: np.ndarray
    first_diffs: np.ndarray
    classification: str
    margin: float
    noise: float
    value_at_uniform: float
    raw_h: np.ndarray = field(repr=False, default=None)
    raw_h2: np.ndarray = field(repr=False, default=None)
    increments: np.ndarray = field(repr=False, default=None)
    exploratory: bool = False
    seed: int = 0
    first_margin: float = 0.0

    @property
    def first_vanishes(self) -> bool:
        """Central first differences are zero within ``first_margin``."""
        return bool((np.abs(self.first_diffs) <= self.first_margin).all())

    @property
    def min_diff(self) -> float:
        return float(self.second_diffs.min())

    @property
    def max_diff(self) -> float:
        return float(self.second_diffs.max())


def _sign_class(values, margin):
    if (values < -margin).all():
        return "local-max"
    if (values > margin).all():
        return "local-min"
    if (values < -margin).any() and (values > margin).any():
        return "mixed"
    return "inconclusive"


def probe_extremum(target: str, psi, k: int, M: int | None = None, n_dirs: int = 20,
                   step: float = 1e-3, seed: int = 0, budget=None) -> ProbeResult:
    """Classify U_k as a local max / min of the target map by finite differences.

    Along each zero-sum unit direction ``xi`` the central second difference
    ``[f(h) - 2 f(0) + f(-h)] / h^2`` is taken at ``h = step`` and ``step/2``.
    A max (min) needs every difference below ``-margin`` (above ``+margin``)
    at both step sizes and in their Richardson combination, where
    ``margin = 10 * noise / h^2``.  When the Richardson curvature is within
    its margin in every direction the quadratic term is degenerate; the
    point is then "mixed" if some one-sided increment ``f(U +- h xi) - f(U)``
    is positive and another negative beyond noise, else "inconclusive".
    For the pml target at ``k = Upsilon`` the result is never max or min.
    """
    psi = as_pattern(psi)
    if target == "lifted":
        target = "liftedM"
    if step <= 0:
        raise ValueError("step must be positive")
    if k < psi.m:
        raise ValueError(f"support smaller than pattern size: k={k} < m={psi.m}")
    if step >= 1.0 / (2 * k):
        raise ValueError(f"simplex violation: step {step} must be below 1/(2k) = {1 / (2 * k)}")
    if n_dirs < 1:
        raise ValueError("need at least one direction")
    f, rel_noise = _target_map(target, psi, k, M, budget)
    dirs = random_directions(k, n_dirs, seed)
    u = np.full(k, 1.0 / k)
    f0 = f(u)
    noise = rel_noise * abs(f0)
    h2 = step / 2
    raw_h = np.empty(n_dirs)
    raw_h2 = np.empty(n_dirs)
    d1_h = np.empty(n_dirs)
    d1_h2 = np.empty(n_dirs)
    incs = np.empty((n_dirs, 2))
    for i, xi in enumerate(dirs):
        fp, fm = f(u + step * xi), f(u - step * xi)
        gp, gm = f(u + h2 * xi), f(u - h2 * xi)
        raw_h[i] = (fp - 2 * f0 + fm) / step**2
        raw_h2[i] = (gp - 2 * f0 + gm) / h2**2
        d1_h[i] = (fp - fm) / (2 * step)
        d1_h2[i] = (gp - gm) / (2 * h2)
        incs[i] = fp - f0, fm - f0
    rich = (4 * raw_h2 - raw_h) / 3
    rich_first = (4 * d1_h2 - d1_h) / 3
    margin = 10 * noise / step**2
    # noise of the combination: (4 * 16 + 4) / 3 noise-units per h^2
    rich_margin = 10 * (68 / 3) * noise / step**2
    c_h = _sign_class(raw_h, margin)
    c_h2 = _sign_class(raw_h2, 10 * noise / h2**2)
    c_r = _sign_class(rich, rich_margin)
    if (np.abs(rich) <= rich_margin).all():
        inc_margin = 10 * noise
        up = (incs > inc_margin).any()
        down = (incs < -inc_margin).any()
        classification = "mixed" if up and down else "inconclusive"
    elif c_h == c_h2 == c_r:
        classification = c_r
    else:
        classification = "inconclusive"
    if target == "pml" and upsilon_exact(psi) == k and classification in ("local-max", "local-min"):
        classification = "inconclusive"
    return ProbeResult(
        target=target, k=k, M=M, directions=n_dirs, step=step, second_diffs=rich,
        first_diffs=rich_first, classification=classification, margin=margin,
        noise=noise, value_at_uniform=f0, raw_h=raw_h, raw_h2=raw_h2, increments=incs,
        exploratory=target == "bethe", seed=seed,
        # the combined first difference carries (4 * 2 + 1) / 3 noise-units per h
        first_margin=10 * 3 * noise / step,
    )


SCAN_COLUMNS = ("k", "M", "formula", "limit", "probe_class", "min_diff", "max_diff")


def phase_scan(psi, k_range, M_list, n_dirs: int = 20, step: float = 1e-3, seed: int = 0,
               probe: bool = True, budget=None) -> list[dict]:
    """Rows ``{k, M, formula, limit, probe_class, min_diff, max_diff}``.

    One row per ``(k, M)``; the probe uses the liftedM target.
    """
    psi = as_pattern(psi)
    rows = []
    for k in k_range:
        limit = second_deriv_limit(psi, k)
        for M in M_list:
            row = {"k": int(k), "M": int(M),
                   "formula": second_deriv_formula(psi, k, M, budget), "limit": limit,
                   "probe_class": None, "min_diff": None, "max_diff": None}
            if probe:
                res = probe_extremum("liftedM", psi, k, M, n_dirs=n_dirs, step=step,
                                     seed=seed, budget=budget)
                row.update(probe_class=res.classification, min_diff=res.min_diff,
                           max_diff=res.max_diff)
            rows.append(row)
    return rows
