"""Gaussian sums on the integer lattice.

Direct summation and Poisson duality agree to machine precision; the second
moment matches its continuous value beta*d up to an exponentially small
correction, and the tail mass obeys a simple exponential bound.
"""

import numpy as np

from pmlphase import (LatticeGaussian, dg_expected_quadratic, dg_partition_direct,
                      dg_partition_poisson, dg_tail_bound)

V = np.array([[2.0, 0.5], [0.5, 1.0]])
for beta in (0.5, 2.0, 10.0):
    g = LatticeGaussian(V, beta)
    print(f"beta={beta:5}: direct {dg_partition_direct(g):.15g}  "
          f"Poisson {dg_partition_poisson(g):.15g}")

g = LatticeGaussian(np.eye(2), 25.0)
m = dg_expected_quadratic(g)
print(f"\nE[X'X] = {m.expected:.12f} vs beta*d = {m.prediction}")
for beta in (1.0, 2.0, 4.0):
    m = dg_expected_quadratic(LatticeGaussian(np.eye(2), beta), dps=60)
    print(f"beta={beta}: log10 |E - beta d| = {m.log10_abs_residual:.2f}")

t = dg_tail_bound(LatticeGaussian(V, 2.0), R=20.0, tau=0.5)
print(f"\ntail mass beyond R=20: {t.empirical:.3e} <= bound {t.bound:.3e}: {t.holds}")
