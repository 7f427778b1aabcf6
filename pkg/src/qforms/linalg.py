"""Small exact integer/rational matrix helpers.

Matrices are plain tuples of tuples (rows) of ints or Fractions.  Nothing
here is clever: sizes are desk scale (n <= 10) and exactness is the point.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Sequence

IntMatrix = tuple[tuple[int, ...], ...]
IntVector = tuple[int, ...]


def _as_int(v) -> int:
    # bools and non-integral floats both coerce silently through int()
    if isinstance(v, bool) or int(v) != v:
        raise ValueError(f"{v!r} is not an integer")
    return int(v)


def as_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(tuple(_as_int(v) for v in row) for row in rows)


def identity(n: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def transpose(m) -> IntMatrix:
    return tuple(zip(*m))


def mat_mul(a, b):
    bt = list(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a
    )


def mat_vec(m, v):
    return tuple(sum(x * y for x, y in zip(row, v)) for row in m)


def det(m) -> int:
    """Determinant by fraction-free Bareiss elimination, exact over Z."""
    n = len(m)
    if n == 0:
        return 1
    a = [list(row) for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def leading_minors(m) -> list[int]:
    """Determinants of the leading principal k x k blocks, k = 1..n."""
    n = len(m)
    return [det(tuple(row[: k + 1] for row in m[: k + 1])) for k in range(n)]


def floor_sqrt(x: Fraction | int) -> int:
    """Largest integer r with r*r <= x (x >= 0)."""
    f = Fraction(x)
    if f < 0:
        raise ValueError("floor_sqrt of a negative number")
    # floor(sqrt(p/q)) = isqrt(p*q) // q
    return isqrt(f.numerator * f.denominator) // f.denominator


def ceil_sqrt(x: Fraction | int) -> int:
    """Smallest integer r with r*r >= x (x >= 0)."""
    r = floor_sqrt(x)
    return r if r * r == Fraction(x) else r + 1


def exact_sqrt(x: Fraction | int):
    """Return sqrt(x) when x is a perfect rational square, else None."""
    f = Fraction(x)
    if f < 0:
        return None
    rn = isqrt(f.numerator)
    rd = isqrt(f.denominator)
    if rn * rn == f.numerator and rd * rd == f.denominator:
        return Fraction(rn, rd)
    return None
