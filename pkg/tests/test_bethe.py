import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmlphase import (Pmf, assignment_min, bethe_free_energy, bethe_pattern_probability,
                      bethe_permanent, minimize_bethe, pattern_probability, permanent)
from pmlphase.bethe import check_doubly_stochastic

from oracles import bethe_k2, bethe_slsqp


def closed_form_all_ones(k):
    return (k - 1) ** (k * (k - 1)) / k ** (k * (k - 2))


def random_doubly_stochastic(k, rng, n_perms=6):
    w = rng.dirichlet(np.ones(n_perms))
    g = np.zeros((k, k))
    for wi in w:
        g[np.arange(k), rng.permutation(k)] += wi
    return g


def test_free_energy_examples():
    assert bethe_free_energy(np.full((2, 2), 0.5), np.ones((2, 2))) == pytest.approx(0, abs=1e-15)
    for k in (2, 3, 5):
        expected = -(k * math.log(k) + k * (k - 1) * math.log((k - 1) / k))
        assert bethe_free_energy(np.full((k, k), 1 / k), np.ones((k, k))) == pytest.approx(expected)
    assert bethe_free_energy(np.eye(2), [[0, 1], [1, 1]]) == math.inf


def test_free_energy_errors():
    with pytest.raises(ValueError, match="dimension"):
        bethe_free_energy(np.eye(2), np.ones((3, 3)))
    with pytest.raises(ValueError):
        check_doubly_stochastic([[0.5, 0.5], [0.5, 0.6]])


def test_all_ones_small():
    assert minimize_bethe(np.ones((2, 2))).bethe_perm == pytest.approx(1)
    assert minimize_bethe(np.ones((3, 3))).bethe_perm == pytest.approx(64 / 27, rel=1e-9)


@pytest.mark.parametrize("k", range(2, 9))
def test_all_ones_closed_form(k):
    res = minimize_bethe(np.ones((k, k)))
    assert res.converged
    assert res.bethe_perm == pytest.approx(closed_form_all_ones(k), rel=1e-9)
    np.testing.assert_allclose(res.gamma_star, 1 / k, atol=1e-6)


def test_result_fields():
    res = minimize_bethe(np.random.default_rng(0).random((4, 4)) + 0.1)
    assert res.bethe_perm == pytest.approx(math.exp(-res.free_energy))
    assert res.gap >= 0
    check_doubly_stochastic(res.gamma_star)


def test_errors():
    with pytest.raises(ValueError, match="strictly positive matrix required"):
        minimize_bethe([[1, 0], [1, 1]])
    with pytest.raises(ValueError):
        minimize_bethe(np.ones((2, 2)), tol=0)
    with pytest.raises(ValueError):
        bethe_pattern_probability((1,), Pmf((0, 1)))


def test_iteration_cap_flags_non_convergence():
    res = minimize_bethe(np.random.default_rng(3).random((5, 5)) + 0.01, tol=1e-15, max_iter=3)
    assert not res.converged
    assert res.iterations == 3


@pytest.mark.parametrize("seed", range(10))
def test_k2_against_scalar_oracle(seed):
    theta = np.random.default_rng(seed).random((2, 2)) + 0.05
    assert bethe_permanent(theta) == pytest.approx(bethe_k2(theta), rel=1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_k3_against_slsqp(seed):
    theta = np.random.default_rng(100 + seed).random((3, 3)) + 0.1
    fw = minimize_bethe(theta)
    ref = bethe_slsqp(theta)
    # FW certifies optimality, so it must not lose to the generic solver
    assert fw.bethe_perm >= ref * (1 - 1e-7)
    assert fw.bethe_perm == pytest.approx(ref, rel=1e-5)


def test_diag_dominant_gurvits():
    theta = np.eye(3) * 5 + np.random.default_rng(1).random((3, 3))
    assert bethe_permanent(theta) <= permanent(theta)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_gurvits_random(k):
    rng = np.random.default_rng(k)
    for _ in range(40):
        theta = rng.random((k, k)) + 1e-3
        assert bethe_permanent(theta) <= permanent(theta) * (1 + 1e-8)


def test_convexity_midpoints():
    rng = np.random.default_rng(7)
    for _ in range(100):
        k = int(rng.integers(2, 6))
        theta = rng.random((k, k)) + 0.01
        g1, g2 = random_doubly_stochastic(k, rng), random_doubly_stochastic(k, rng)
        mid = bethe_free_energy((g1 + g2) / 2, theta)
        avg = (bethe_free_energy(g1, theta) + bethe_free_energy(g2, theta)) / 2
        assert mid <= avg + 1e-8


def test_descent():
    theta = np.random.default_rng(11).random((6, 6)) + 0.01
    hist = np.array(minimize_bethe(theta, record_history=True).history)
    assert len(hist) > 10
    assert (np.diff(hist) <= 1e-12 * np.abs(hist[1:]).max()).all()


def test_scale_covariance():
    rng = np.random.default_rng(5)
    theta = rng.random((4, 4)) + 0.1
    base = minimize_bethe(theta)
    scaled = minimize_bethe(3.0 * theta)
    assert scaled.bethe_perm == pytest.approx(3.0**4 * base.bethe_perm, rel=1e-7)
    np.testing.assert_allclose(scaled.gamma_star, base.gamma_star, atol=1e-4)


def test_permutation_covariance():
    rng = np.random.default_rng(6)
    theta = rng.random((4, 4)) + 0.1
    r, c = rng.permutation(4), rng.permutation(4)
    base = minimize_bethe(theta, tol=1e-12)
    perm = minimize_bethe(theta[np.ix_(r, c)], tol=1e-12)
    assert perm.bethe_perm == pytest.approx(base.bethe_perm, rel=1e-9)
    np.testing.assert_allclose(perm.gamma_star, base.gamma_star[np.ix_(r, c)], atol=1e-4)


def test_bethe_probability_examples():
    assert bethe_pattern_probability((1,), Pmf((1,))) == pytest.approx(1)
    half = Pmf((0.5, 0.5))
    assert bethe_pattern_probability((1, 1), half) <= 0.5 + 1e-12
    u3 = Pmf.uniform(3, exact=False)
    pb = bethe_pattern_probability((2, 2), u3)
    assert 0 <= pb <= pattern_probability((2, 2), u3) * (1 + 1e-9)


def brute_assignment(cost):
    k = len(cost)
    vals = {p: sum(cost[i][p[i]] for i in range(k)) for p in itertools.permutations(range(k))}
    best = min(vals.values())
    return best, min(p for p, v in vals.items() if v == best)


def test_assignment_examples():
    cost = 1 - np.eye(4)
    assert assignment_min(cost) == (0, 1, 2, 3)
    assert assignment_min(np.full((4, 4), 2.5)) == (0, 1, 2, 3)


@given(st.lists(st.integers(0, 4), min_size=9, max_size=9))
def test_assignment_brute_force(cells):
    cost = np.array(cells, dtype=float).reshape(3, 3)
    best, lex = brute_assignment(cost.tolist())
    got = assignment_min(cost)
    assert sum(cost[i, got[i]] for i in range(3)) == best
    assert got == lex
    loose = assignment_min(cost, tie_break=False)
    assert sum(cost[i, loose[i]] for i in range(3)) == best


def test_assignment_rejects_nonfinite():
    with pytest.raises(ValueError):
        assignment_min([[0, np.inf], [1, 0]])
