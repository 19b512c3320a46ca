"""Bethe approximation of the permanent.

The Bethe permanent minimizes a free energy over doubly stochastic matrices.
For a positive matrix it never exceeds the permanent, and for the all-ones
matrix it has a closed form.
"""

import numpy as np

from pmlphase import minimize_bethe, permanent

for k in (3, 4, 5):
    res = minimize_bethe(np.ones((k, k)))
    closed = (k - 1) ** (k * (k - 1)) / k ** (k * (k - 2))
    print(f"k={k}: perm_B(J) = {res.bethe_perm:.10g}, closed form {closed:.10g}, "
          f"perm(J) = {permanent(np.ones((k, k)))}")

rng = np.random.default_rng(0)
theta = rng.random((5, 5))
res = minimize_bethe(theta)
print(f"\nrandom 5x5: perm = {permanent(theta):.6g}, perm_B = {res.bethe_perm:.6g}, "
      f"ratio = {res.bethe_perm / permanent(theta):.4f}")
print("Frank-Wolfe iterations:", res.iterations, " final gap:", f"{res.gap:.1e}")
