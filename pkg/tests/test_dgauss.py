import math

import mpmath
import numpy as np
import pytest

from pmlphase import (BudgetExceededError, LatticeGaussian, dg_expected_quadratic,
                      dg_partition_direct, dg_partition_poisson, dg_tail_bound)
from pmlphase.dgauss import dg_dual_sum, poisson_prefactor

from oracles import theta3_sum


def random_spd(d, rng, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = np.exp(rng.uniform(0, math.log(cond), d))
    V = Q @ np.diag(lam) @ Q.T
    return (V + V.T) / 2


def test_validation():
    with pytest.raises(ValueError):
        LatticeGaussian([[1, 0.5], [0.4, 1]], 1.0)
    with pytest.raises(ValueError):
        LatticeGaussian([[1, 2], [2, 1]], 1.0)
    with pytest.raises(ValueError):
        LatticeGaussian([[1.0]], 0.0)
    g = LatticeGaussian(np.diag([2.0, 5.0]), 3.0)
    assert (g.d, g.lam_min, g.lam_max) == (2, 2.0, 5.0)


def test_direct_examples():
    g = LatticeGaussian([[1.0]], 0.5)
    assert dg_partition_direct(g, 40) == pytest.approx(theta3_sum(0.5), rel=1e-15)
    assert dg_partition_direct(g, 40) == pytest.approx(1 + 2 / math.e + 2 * math.exp(-4), rel=1e-3)
    assert dg_partition_direct(LatticeGaussian([[1.0]], 1e-3)) == pytest.approx(1.0, abs=1e-100)
    assert dg_partition_direct(LatticeGaussian(np.eye(3), 7.0), 0) == 1.0


def test_direct_against_jacobi_theta():
    for beta in (0.3, 2.0, 17.0):
        q = math.exp(-1 / (2 * beta))
        ref = float(mpmath.jtheta(3, 0, q))
        assert dg_partition_direct(LatticeGaussian([[1.0]], beta)) == pytest.approx(ref, rel=1e-14)
        V = np.eye(2)
        assert dg_partition_direct(LatticeGaussian(V, beta)) == pytest.approx(ref**2, rel=1e-13)


def test_budget():
    with pytest.raises(BudgetExceededError):
        dg_partition_direct(LatticeGaussian(np.eye(4), 100.0), budget=10**5)


def test_prefactor_candidates():
    rng = np.random.default_rng(0)
    for d in (1, 2, 3):
        g = LatticeGaussian(random_spd(d, rng), 3.0)
        direct = dg_partition_direct(g)
        assert dg_partition_poisson(g, prefactor="d/2") == pytest.approx(direct, rel=1e-12)
        half = dg_partition_poisson(g, prefactor="1/2")
        if d == 1:
            assert half == pytest.approx(direct, rel=1e-12)
        else:
            # beta^(1/2) is off by beta^((d-1)/2)
            assert half / direct == pytest.approx(g.beta ** ((1 - d) / 2), rel=1e-12)
    with pytest.raises(ValueError):
        poisson_prefactor(g, "2")


@pytest.mark.parametrize("d", [1, 2, 3])
def test_poisson_matches_direct(d):
    rng = np.random.default_rng(d)
    for beta in (1.0, 4.7, 23.0, 100.0):
        g = LatticeGaussian(random_spd(d, rng), beta)
        direct = dg_partition_direct(g)
        assert abs(dg_partition_poisson(g) / direct - 1) < 1e-10


def test_poisson_d1_sweep():
    for beta in np.linspace(1, 100, 12):
        g = LatticeGaussian([[1.0]], beta)
        assert abs(dg_partition_poisson(g) / dg_partition_direct(g) - 1) < 1e-10


def test_leading_term_dominates_at_large_beta():
    g = LatticeGaussian(np.diag([1.0, 2.0]), 40.0)
    ratio = dg_partition_direct(g) / poisson_prefactor(g)
    assert abs(ratio - 1) < 10 * math.exp(-2 * math.pi**2 * g.beta / g.lam_max)
    assert dg_partition_poisson(g, terms=0) == poisson_prefactor(g)
    assert dg_dual_sum(g, 0) == 1.0


def test_expected_quadratic_examples():
    m = dg_expected_quadratic(LatticeGaussian(np.eye(2), 25.0))
    assert abs(m.expected - 50) < 1e-6 and m.prediction == 50
    assert dg_expected_quadratic(LatticeGaussian([[1.0]], 0.01)).expected < 1e-20
    xs = np.arange(-60, 61)
    w = np.exp(-xs**2 / 0.2)
    ref = float((xs**2 * w).sum() / w.sum())
    assert dg_expected_quadratic(LatticeGaussian([[1.0]], 0.1)).expected == pytest.approx(ref, rel=1e-13)


def test_residual_decreases_in_beta():
    res = [dg_expected_quadratic(LatticeGaussian(np.eye(2), b), dps=400) for b in (5, 10, 20, 40)]
    logs = [r.log10_abs_residual for r in res]
    assert logs == sorted(logs, reverse=True)
    # the exact residual of the product of two one-dimensional lattices
    for b, r in zip((5, 10, 20), res):
        approx = -16 * math.pi**2 * b * b * math.exp(-2 * math.pi**2 * b)
        assert r.residual == pytest.approx(approx, rel=1e-6)


def test_high_precision_needs_integer_V():
    with pytest.raises(ValueError):
        dg_expected_quadratic(LatticeGaussian([[1.5]], 2.0), dps=50)


def test_tail_examples():
    g = LatticeGaussian(np.eye(2), 3.0)
    whole = dg_tail_bound(g, 0.0, 0.5)
    assert whole.empirical == pytest.approx(dg_expected_quadratic(g).expected, rel=1e-12)
    assert whole.holds
    t = dg_tail_bound(LatticeGaussian([[1.0]], 4.0), 100.0, 0.5)
    assert t.holds and t.empirical > 0
    assert dg_tail_bound(LatticeGaussian([[1.0]], 1.0), 1e6, 0.5).empirical == 0
    with pytest.raises(ValueError):
        dg_tail_bound(g, 1.0, 1.0)


def test_tail_bound_random_draws():
    rng = np.random.default_rng(8)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        g = LatticeGaussian(random_spd(d, rng), float(rng.uniform(0.5, 8)))
        R = float(rng.uniform(0, 30 * g.beta))
        tau = float(rng.uniform(0.02, 0.98))
        assert dg_tail_bound(g, R, tau).holds


def test_eigenvalue_sandwich():
    rng = np.random.default_rng(9)
    for _ in range(50):
        d = int(rng.integers(1, 5))
        g = LatticeGaussian(random_spd(d, rng), 1.0)
        V_inv = np.linalg.inv(g.V)
        x = rng.standard_normal(d)
        val = x @ V_inv @ x
        nx = x @ x
        assert nx / g.lam_max * (1 - 1e-12) <= val <= nx / g.lam_min * (1 + 1e-12)
