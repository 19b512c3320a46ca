"""Patterns of sequences and the PML threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True)
class Pattern:
    """Canonical pattern ``1^mu_1 2^mu_2 ... m^mu_m``.

    Only the multiplicities matter for pattern probabilities, so two
    sequences with the same multiplicity vector give equal Patterns.
    """

    mu: tuple

    def __post_init__(self):
        mu = tuple(int(x) for x in self.mu)
        if not mu:
            raise ValueError("a pattern needs at least one symbol")
        if any(x < 1 for x in mu):
            raise ValueError(f"multiplicities must be positive, got {mu}")
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return sum(self.mu)

    @property
    def m(self) -> int:
        return len(self.mu)

    @property
    def sum_squares(self) -> int:
        return sum(x * x for x in self.mu)

    @property
    def digits(self) -> str | None:
        """Canonical digit string, or None when ``m > 9``."""
        if self.m > 9:
            return None
        return "".join(str(i + 1) * c for i, c in enumerate(self.mu))

    def __str__(self):
        return self.digits or ",".join(map(str, self.mu))


def extract_pattern(seq: Sequence) -> tuple[str | None, Pattern]:
    """Relabel ``seq`` by order of first occurrence.

    Returns the pattern digit string (None if more than 9 distinct symbols)
    and the Pattern with multiplicities in first-occurrence order.

    >>> extract_pattern("sleepless")
    ('123342311', Pattern(mu=(3, 2, 3, 1)))
    """
    seq = list(seq)
    if not seq:
        raise ValueError("empty input")
    labels: dict = {}
    psi = []
    for x in seq:
        if x not in labels:
            labels[x] = len(labels) + 1
        psi.append(labels[x])
    counts = [0] * len(labels)
    for j in psi:
        counts[j - 1] += 1
    pattern = Pattern(tuple(counts))
    digits = "".join(map(str, psi)) if len(labels) <= 9 else None
    return digits, pattern


def parse_pattern(text: str) -> Pattern:
    """Parse ``"1122"`` (digit form) or ``"2,2"`` (multiplicity list)."""
    text = text.strip()
    if not text:
        raise ValueError("empty input")
    if "," in text or text.startswith("(") or text.startswith("["):
        parts = [s for s in text.strip("()[] ").split(",") if s.strip()]
        try:
            mu = tuple(int(s) for s in parts)
        except ValueError:
            raise ValueError(f"not a valid multiplicity list: {text!r}") from None
        if any(x <= 0 for x in mu):
            raise ValueError(f"zero or negative multiplicity in {text!r}")
        return Pattern(mu)
    if not text.isdigit():
        raise ValueError(f"not a valid pattern: {text!r}")
    seen = 0
    counts = []
    for ch in text:
        d = int(ch)
        if d == 0 or d > seen + 1:
            raise ValueError(f"not a valid pattern: {text!r}")
        if d == seen + 1:
            seen = d
            counts.append(0)
        counts[d - 1] += 1
    return Pattern(tuple(counts))


def as_pattern(p) -> Pattern:
    if isinstance(p, Pattern):
        return p
    if isinstance(p, str):
        return parse_pattern(p)
    return Pattern(tuple(p))


def upsilon_exact(p) -> Fraction | float:
    """``(n^2 - n) / (sum mu_i^2 - n)`` as a Fraction, or ``math.inf``."""
    p = as_pattern(p)
    denom = p.sum_squares - p.n
    if denom == 0:
        return math.inf
    return Fraction(p.n * p.n - p.n, denom)


def upsilon(p) -> float:
    """PML threshold: U_k is a local max below it and a local min above it."""
    return float(upsilon_exact(p))
