"""Exact dense linear algebra over the Gaussian rationals."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import ComputationError
from .exact_algebra import scalar


class SingularMatrixError(ComputationError):
    pass


def _matrix(rows) -> list[list]:
    return [[scalar(v) for v in row] for row in rows]


def rref(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[list[list], list[int]]:
    """Reduced row-echelon form; returns (nonzero rows, pivot columns)."""
    m = _matrix(rows)
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence], ncols: int | None = None) -> int:
    return len(rref(rows, ncols)[1])


def solve(a: Sequence[Sequence], b: Sequence) -> list:
    """Solve the square system ``a @ x = b`` exactly."""
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve expects a square system")
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, pivots = rref(aug, n)
    if pivots != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n] for row in red]


def inverse(a: Sequence[Sequence]) -> list[list]:
    n = len(a)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    red, pivots = rref(aug, n)
    if pivots != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n:] for row in red]


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list]:
    """Basis of ``{v : rows @ v = 0}``."""
    red, pivots = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def mat_vec(a: Sequence[Sequence], v: Sequence) -> list:
    return [sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a]


def det(a: Sequence[Sequence]):
    m = _matrix(a)
    n = len(m)
    result = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            result = -result
        result = result * m[c][c]
        inv = 1 / m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] * inv
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return result
