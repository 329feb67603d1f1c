"""Exact rational helpers: parsing, roots, and small dense linear algebra.

Scalars throughout nmforge are :class:`fractions.Fraction` whenever the value
is rational, and ``float`` only where an irrational root was unavoidable.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

import gmpy2

Scalar = Real  # Fraction or float

ROOT_TOL = 1e-12


def to_fraction(value) -> Fraction:
    """Parse ``"p/q"``, ints, Fractions (floats are refused)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def _iroot_fraction(x: Fraction, n: int):
    num = gmpy2.iroot(gmpy2.mpz(x.numerator), n)
    den = gmpy2.iroot(gmpy2.mpz(x.denominator), n)
    if num[1] and den[1]:
        return Fraction(int(num[0]), int(den[0]))
    return None


def power(x, e: Fraction):
    """``x ** e`` for ``x >= 0``; exact when the result is rational."""
    e = Fraction(e)
    if x < 0:
        raise ValueError("power() expects a nonnegative base")
    if x == 0:
        return Fraction(0) if is_exact(x) else 0.0
    if not is_exact(x):
        return float(x) ** float(e)
    x = Fraction(x)
    a, b = e.numerator, e.denominator
    if b == 1 and a >= 0:
        return x ** a
    if a < 0:
        inv = power(1 / x, -e)
        return inv
    root = _iroot_fraction(x, b)
    if root is not None:
        return root ** a
    return float(x) ** float(e)


def root(x, p: Fraction):
    """The ``p``-th root ``x ** (1/p)`` for ``x >= 0`` and rational ``p > 0``."""
    p = Fraction(p)
    return power(x, 1 / p)


def as_float(x) -> float:
    return float(x)


def close(a, b, tol: float = 1e-9) -> bool:
    """Exact equality for rationals, absolute tolerance otherwise."""
    if is_exact(a) and is_exact(b):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=0.0, abs_tol=tol)


def leq(a, b, tol: float = 1e-9) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return float(a) <= float(b) + tol


def rational_upper_bound(x) -> Fraction:
    """A rational number ``>= x``; ``x`` itself when exact."""
    if is_exact(x):
        return Fraction(x)
    r = Fraction(float(x)).limit_denominator(1 << 40)
    while r < x:
        r += Fraction(1, 1 << 40)
    return r


# -- dense rational linear algebra -------------------------------------------

def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; returns (matrix, pivots)."""
    m = [[Fraction(c) for c in r] for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
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
    return m, pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1]) if rows else 0


def solve(a: Sequence[Sequence], b: Sequence):
    """Solve the square system ``a x = b``; ``None`` when singular."""
    n = len(a)
    aug = [list(a[i]) + [b[i]] for i in range(n)]
    m, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return tuple(m[i][n] for i in range(n))


def in_span(vectors: Sequence[Sequence], target: Sequence) -> bool:
    if not vectors:
        return all(t == 0 for t in target)
    return rank(list(vectors)) == rank(list(vectors) + [list(target)])


def dot(u: Iterable, v: Iterable):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))
