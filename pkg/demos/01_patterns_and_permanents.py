"""Patterns, their probabilities, and the permanent behind them.

A pattern keeps only the order in which new symbols first appear.  Its
probability under a pmf is a sum over injective relabelings, which equals a
permanent of the matrix theta_ij = p_i ** mu_j up to a factorial.
"""

from fractions import Fraction

from pmlphase import (Pmf, extract_pattern, pattern_probability, pattern_probability_via_perm,
                      theta_matrix, upsilon_exact)

seq = "abracadabra"
digits, psi = extract_pattern(seq)
print(f"sequence {seq!r} -> pattern {digits}, canonical form {psi}, multiplicities {psi.mu}")
print("Upsilon =", upsilon_exact(psi))

p = Pmf([Fraction(1, 3), Fraction(1, 4), Fraction(1, 6), Fraction(1, 8), Fraction(1, 12),
         Fraction(1, 24)])
theta = theta_matrix(psi, p)
print("theta has shape", theta.shape, "; first row:", [str(x) for x in theta[0]])
direct = pattern_probability(psi, p)
via_perm = pattern_probability_via_perm(psi, p)
print("P(psi; p) by injections :", direct)
print("P(psi; p) by permanent  :", via_perm)
assert direct == via_perm
