"""Exact rational linear algebra for the slow oracle paths."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import InputError


def solve_fraction(a: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve ``a x = b`` over the rationals by Gauss-Jordan elimination.

    ``a`` may be rectangular with dependent rows as long as the system is
    consistent and has a unique solution.
    """
    rows = len(a)
    cols = len(a[0]) if rows else 0
    aug = [[Fraction(v) for v in a[r]] + [Fraction(b[r])] for r in range(rows)]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(rows):
            if i != r and aug[i][c] != 0:
                fac = aug[i][c]
                aug[i] = [vi - fac * vr for vi, vr in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if any(aug[i][cols] != 0 for i in range(r, rows)):
        raise InputError("inconsistent linear system")
    if len(pivots) != cols:
        raise InputError("linear system is underdetermined")
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = aug[i][cols]
    return x
