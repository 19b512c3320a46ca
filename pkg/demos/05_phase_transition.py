"""Where the uniform pmf stops being a PML candidate.

For a pattern with n symbols and m distinct ones, the uniform pmf on k
symbols is a local maximum of the pattern probability for k < Upsilon and a
local minimum for k > Upsilon.  Random-direction finite differences confirm
it, and the lifted objective has its own threshold from a quadratic.
"""

from pmlphase import phase_scan, probe_extremum, threshold_report

psi = (3, 2, 3, 1)
rep = threshold_report(psi)
print(f"pattern mu={psi}: Upsilon = {rep.upsilon}, case {rep.case_tag}")
print(f"lifted thresholds rho1={rep.rho1}, rho2={rep.rho2}, Upsilon_B={rep.upsilon_B}")

for k in range(4, 8):
    res = probe_extremum("pml", psi, k, n_dirs=20, seed=0)
    print(f"k={k}: {res.classification:10s} second differences in "
          f"[{res.min_diff:.3g}, {res.max_diff:.3g}]")

tie = probe_extremum("pml", (2, 2), 3)
print("\n(2,2) at k = Upsilon = 3:", tie.classification)

print("\nlifted scan (formula next to probe):")
for row in phase_scan(psi, range(4, 6), [2, 3], n_dirs=8):
    print({key: row[key] for key in ("k", "M", "formula", "probe_class")})
