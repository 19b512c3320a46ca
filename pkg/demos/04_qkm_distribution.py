"""The table distribution Q_{k,M} and its Gaussian picture.

Q_{k,M} weights k x k tables with all margins M.  It peaks at a circulant
table U whose rows spread M evenly, and near U it looks like a discrete
Gaussian in the (k-1)^2 free entries.
"""

import numpy as np

from pmlphase import (gauss_error, maximizer_u, normalized_Z, qkm_stats)
from pmlphase.qkm import complete_zero_margins, normalized_Z_limit, variance_rate_limit

for M in range(1, 7):
    s = qkm_stats(2, M)
    print(f"k=2 M={M}: Z = {s.Z_exact}, Var(a11) = {s.variance}")

print(f"\nk=3 limits: normalized Z -> {normalized_Z_limit(3):.5f}, "
      f"Var/M -> {variance_rate_limit(3):.5f}")
for M in (5, 10, 20, 30):
    s = qkm_stats(3, M)
    print(f"M={M:2d}: normalized Z = {normalized_Z(3, M):.5f}, Var/M = {float(s.variance) / M:.5f}")

U = maximizer_u(3, 36)
print("\nmaximizer for k=3, M=36:\n", U.table.as_array())
T = complete_zero_margins(np.array([1, -1, 0, 1]), 3)
lhs, bound = gauss_error(U.table.as_array() + T)
print(f"Gaussian log-weight error {lhs:.4f} <= bound {bound:.4f}")
