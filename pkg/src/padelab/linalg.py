"""Fraction-free (Bareiss) elimination over the integers.

Rational systems are cleared of denominators row by row before entering
here, so all arithmetic is exact integer arithmetic with exact divisions.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .errors import InvariantViolation


def integer_rows(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    """Scale each rational row by the lcm of its denominators."""
    out = []
    for row in rows:
        den = math.lcm(*(Fraction(v).denominator for v in row)) if row else 1
        out.append([int(Fraction(v) * den) for v in row])
    return out


def bareiss_echelon(rows: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[int], int]:
    """Row echelon form by one-step fraction-free elimination.

    Returns ``(echelon_rows, pivot_columns, swap_parity)``.  Every entry of
    the result is a minor of the input, so the divisions are exact; a
    nonzero remainder means the input was not integral.
    """
    a = [list(r) for r in rows]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots: list[int] = []
    prev = 1
    r = 0
    parity = 0
    for c in range(ncols):
        if r == nrows:
            break
        pr = next((i for i in range(r, nrows) if a[i][c]), None)
        if pr is None:
            continue
        if pr != r:
            a[r], a[pr] = a[pr], a[r]
            parity ^= 1
        p = a[r][c]
        row_r = a[r]
        tail_r = row_r[c:]
        for i in range(r + 1, nrows):
            row_i = a[i]
            f = row_i[c]
            nums = [p * x - f * y for x, y in zip(row_i[c:], tail_r)]
            if prev != 1:
                if any(v % prev for v in nums):
                    raise InvariantViolation("inexact division in fraction-free elimination")
                nums = [v // prev for v in nums]
            row_i[c:] = nums
        prev = p
        pivots.append(c)
        r += 1
    return a[:r], pivots, parity


def min_degree_null_vector(rows: Sequence[Sequence[int]], ncols: int) -> list[int]:
    """Primitive integer null vector whose last nonzero index is minimal.

    The minimal index is the first non-pivot column of the echelon form; the
    vector is obtained by setting that free variable to 1, every other free
    variable to 0, and back-substituting.
    """
    if not rows:
        return [1] + [0] * (ncols - 1)
    ech, piv, _ = bareiss_echelon(rows)
    pivset = set(piv)
    free = next(c for c in range(ncols) if c not in pivset)
    # integer back-substitution: x holds numerators over a common scale
    x = [0] * ncols
    x[free] = 1
    for r in range(len(ech) - 1, -1, -1):
        c = piv[r]
        if c > free:
            continue
        row = ech[r]
        s = sum(row[j] * x[j] for j in range(c + 1, free + 1) if x[j])
        p = row[c]
        g = math.gcd(s, p)
        mult = p // g
        if mult != 1:
            x = [v * mult for v in x]
        x[c] = -s // g
    if x[free] < 0:  # keep the free entry positive, as with a unit free variable
        x = [-v for v in x]
    g = math.gcd(*x)
    return [v // g for v in x]


def det_integer(matrix: Sequence[Sequence[int]]) -> int:
    n = len(matrix)
    if n == 0:
        return 1
    ech, piv, parity = bareiss_echelon(matrix)
    if len(piv) < n:
        return 0
    d = ech[-1][-1]
    return -d if parity else d


def det_rational(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant of a rational square matrix."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    rows = []
    for row in matrix:
        den = math.lcm(*(Fraction(v).denominator for v in row))
        rows.append([int(Fraction(v) * den) for v in row])
        scale *= den
    return Fraction(det_integer(rows)) / scale
