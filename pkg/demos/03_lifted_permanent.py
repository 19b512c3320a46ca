"""Degree-M lifted permanents.

Replace every entry of theta by an M x M permutation block chosen uniformly,
take the permanent and its M-th root on average.  The exact value is a sum over
contingency tables with fixed margins; Monte Carlo gives an independent check.
As M grows the lift moves from the permanent toward the Bethe permanent.
"""

import numpy as np

from pmlphase import (count_tables, lifted_permanent_exact, lifted_permanent_mc,
                      lifted_permanent_power, minimize_bethe, permanent)

rng = np.random.default_rng(1)
theta = rng.random((3, 3)) + 0.1

exact = float(lifted_permanent_power(theta, 3))
est = lifted_permanent_mc(theta, 3, samples=5000, seed=1)
print(f"M=3: exact E[perm] = {exact:.6g}; MC = {est.mean_power:.6g} +/- {est.stderr_power:.2g}")

pb = minimize_bethe(theta).bethe_perm
print(f"\nperm = {permanent(theta):.6f}, perm_B = {pb:.6f}")
for M in (1, 2, 4, 8, 12):
    print(f"M={M:2d}  tables={count_tables(3, M):6d}  perm_B,M = {lifted_permanent_exact(theta, M):.6f}")
