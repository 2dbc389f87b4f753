"""Fibonacci numbers, the Fibonacci lattice and its dual lattice.

All lattice and dual-lattice arithmetic is done on integers.  Coordinates are
kept as numerators over the common denominator ``b_n``; floats appear only
when a caller asks for them.

Conventions: ``b_0 = b_1 = 1`` and ``b_n = b_{n-1} + b_{n-2}``.  The lattice
of index ``n`` has the ``b_n`` points ``(mu/b_n, (mu*b_{n-1} mod b_n)/b_n)``
and its dual ``L(n)`` is the set of integer frequencies ``k`` with
``k1 + b_{n-1} k2 = 0 (mod b_n)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import OverflowGuard, RangeGuard

MAX_INDEX = 80
MAX_ZAREMBA_INDEX = 45

# Largest magnitude for which int64 products stay exact.
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class FibonacciIndex:
    n: int
    b_n: int
    b_prev: int


@lru_cache(maxsize=None)
def _fib(n: int) -> int:
    a, b = 1, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def fib(n: int) -> int:
    """``b_n`` as a plain integer; ``b_{-1}`` is taken as 0."""
    if n == -1:
        return 0
    if n < -1:
        raise RangeGuard(f"Fibonacci index {n} < -1")
    return _fib(n)


def fibonacci(n: int) -> FibonacciIndex:
    if n < 0:
        raise RangeGuard(f"Fibonacci index must be nonnegative, got {n}")
    if n > MAX_INDEX:
        raise OverflowGuard(f"Fibonacci index {n} exceeds {MAX_INDEX}")
    return FibonacciIndex(n, fib(n), fib(n - 1))


@dataclass(frozen=True)
class LatticePoint2:
    mu: int
    x: Fraction
    y: Fraction

    @property
    def as_float(self) -> tuple[float, float]:
        return float(self.x), float(self.y)


def lattice_numerators(n: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Integer numerators ``(mu, mu*b_{n-1} mod b_n)`` and the denominator ``b_n``."""
    if n < 1:
        raise RangeGuard(f"lattice index must be >= 1, got {n}")
    fi = fibonacci(n)
    b, bp = fi.b_n, fi.b_prev
    if b * b < _INT64_SAFE:
        mu = np.arange(b, dtype=np.int64)
        y = (mu * bp) % b
    else:
        mu = np.arange(b, dtype=np.int64)
        y = np.array([(m * bp) % b for m in range(b)], dtype=np.int64)
    return mu, y, b


def lattice_point(n: int, mu: int) -> LatticePoint2:
    fi = fibonacci(n)
    if not 0 <= mu < fi.b_n:
        raise RangeGuard(f"lattice index mu={mu} outside [0, {fi.b_n})")
    return LatticePoint2(mu, Fraction(mu, fi.b_n), Fraction((mu * fi.b_prev) % fi.b_n, fi.b_n))


def fibonacci_lattice(n: int) -> list[LatticePoint2]:
    mu, y, b = lattice_numerators(n)
    return [LatticePoint2(int(m), Fraction(int(m), b), Fraction(int(v), b)) for m, v in zip(mu, y)]


def lattice_floats(n: int) -> np.ndarray:
    """The lattice as a ``(b_n, 2)`` float array, in ``mu`` order."""
    mu, y, b = lattice_numerators(n)
    return np.column_stack([mu / b, y / b])


class DualVector(NamedTuple):
    k1: int
    k2: int


def dual_membership(k: tuple[int, int], n: int) -> bool:
    fi = fibonacci(n)
    k1, k2 = int(k[0]), int(k[1])
    return (k1 + fi.b_prev * k2) % fi.b_n == 0


def dual_representation(u: int, v: int, n: int) -> DualVector:
    """The dual vector with lattice coordinates ``(u, v)`` in the basis
    ``(b_{n-2}, 1), (-b_{n-3}, 2)``."""
    if n < 3:
        raise RangeGuard(f"dual representation needs n >= 3, got {n}")
    fibonacci(n)
    return DualVector(u * fib(n - 2) - v * fib(n - 3), u + 2 * v)


def dual_coordinates(k: tuple[int, int], n: int) -> tuple[int, int]:
    """Inverse of :func:`dual_representation`, solved exactly by Cramer's rule.

    The basis matrix ``[[b_{n-2}, -b_{n-3}], [1, 2]]`` has determinant ``b_n``.
    Raises ``ValueError`` when ``k`` is not in ``L(n)``.
    """
    if n < 3:
        raise RangeGuard(f"dual coordinates need n >= 3, got {n}")
    b = fibonacci(n).b_n
    a, c = fib(n - 2), fib(n - 3)
    k1, k2 = int(k[0]), int(k[1])
    u_num = 2 * k1 + c * k2
    v_num = a * k2 - k1
    if u_num % b or v_num % b:
        raise ValueError(f"{k} is not in L({n})")
    return u_num // b, v_num // b


def dual_enumerate_arrays(n: int, K1: int, K2: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """All nonzero ``k`` in ``L(n)`` with ``|k1| <= K1`` and ``|k2| <= K2``.

    Each row ``k2`` has its ``k1`` solutions in a single residue class mod
    ``b_n``, so the rows are solved directly and stepped by ``b_n``.  Output
    is ordered by ``k2`` then ``k1``, both ascending.
    """
    if K2 is None:
        K2 = K1
    if K1 < 0 or K2 < 0:
        raise RangeGuard("box half-widths must be nonnegative")
    fi = fibonacci(n)
    b, bp = fi.b_n, fi.b_prev
    if b * max(K1, K2, 1) >= _INT64_SAFE or K1 + b >= _INT64_SAFE:
        return _dual_enumerate_slow(b, bp, K1, K2)
    k2 = np.arange(-K2, K2 + 1, dtype=np.int64)
    # smallest k1 >= -K1 in the residue class -bp*k2 mod b
    res = (-(bp % b) * (k2 % b)) % b
    first = -K1 + (res + K1) % b
    count = np.where(first <= K1, (K1 - first) // b + 1, 0)
    total = int(count.sum())
    rows = np.repeat(np.arange(k2.size), count)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(count) - count, count)
    out1 = first[rows] + b * offsets
    out2 = k2[rows]
    keep = (out1 != 0) | (out2 != 0)
    return out1[keep], out2[keep]


def _dual_enumerate_slow(b: int, bp: int, K1: int, K2: int) -> tuple[np.ndarray, np.ndarray]:
    out1: list[int] = []
    out2: list[int] = []
    for k2 in range(-K2, K2 + 1):
        res = (-bp * k2) % b
        k1 = -K1 + (res + K1) % b
        while k1 <= K1:
            if k1 or k2:
                out1.append(k1)
                out2.append(k2)
            k1 += b
    return np.array(out1, dtype=object), np.array(out2, dtype=object)


def dual_enumerate(n: int, K: int) -> list[DualVector]:
    if K < 1:
        raise RangeGuard(f"box size K must be >= 1, got {K}")
    k1, k2 = dual_enumerate_arrays(n, K)
    return [DualVector(int(a), int(c)) for a, c in zip(k1, k2)]


def hyperbolic_weight(k1, k2):
    """``max(1,|k1|) * max(1,|k2|)``, elementwise for arrays."""
    return np.maximum(1, np.abs(k1)) * np.maximum(1, np.abs(k2))


def zaremba_min_product(n: int, chunk: int = 1 << 22) -> tuple[int, DualVector]:
    """Minimum of ``max(1,|k1|) max(1,|k2|)`` over nonzero ``k`` in ``L(n)``.

    Rows ``k2 = 0..b_n`` are scanned with the centered residue
    ``k1 in (-b_n/2, b_n/2]``; ``k -> -k`` symmetry covers ``k2 < 0``.  The
    row ``k2 = 0`` contributes ``(b_n, 0)``.  Since every candidate in row
    ``k2`` has product at least ``k2``, the scan stops once ``k2`` reaches the
    current minimum.  Ties keep the first witness in scan order.
    """
    if not 3 <= n <= MAX_ZAREMBA_INDEX:
        raise RangeGuard(f"zaremba scan supports 3 <= n <= {MAX_ZAREMBA_INDEX}, got {n}")
    fi = fibonacci(n)
    b, bp = fi.b_n, fi.b_prev
    best = b
    witness = DualVector(b, 0)
    half = b // 2
    start = 1
    while start < best:
        stop = min(best, start + chunk)
        k2 = np.arange(start, stop, dtype=np.int64)
        k1 = (-bp * k2) % b
        k1 = np.where(k1 > half, k1 - b, k1)
        prod = np.maximum(1, np.abs(k1)) * k2
        i = int(np.argmin(prod))
        if prod[i] < best:
            best = int(prod[i])
            witness = DualVector(int(k1[i]), int(k2[i]))
        start = stop
    return best, witness
