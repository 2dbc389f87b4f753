"""Weighted cubature rules on the unit cube.

A :class:`CubatureRule` stores its nodes exactly, as integer numerators over
one common denominator, so that duplicate nodes can be merged without
tolerance.  Nodes are kept in lexicographic order and rules are applied with
``math.fsum`` in that order, which makes the result independent of how the
rule was assembled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, MissingExactIntegral, RangeGuard
from .fiblattice import lattice_numerators


@dataclass(frozen=True)
class Integrand:
    """A vectorized function on ``[0,1]^dim``.

    ``evaluator`` takes an ``(N, dim)`` float array and returns ``N`` real or
    complex values.
    """

    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    exact_integral: complex | float | None = None
    smoothness: tuple[float, float, float] | None = None
    name: str = ""
    fourier: object | None = None  # TrigPoly2 when the integrand is a trig polynomial

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.atleast_2d(points)))


@dataclass(frozen=True)
class CubatureRule:
    dim: int
    num: np.ndarray  # (N, dim) integer numerators
    den: int
    weights: np.ndarray
    label: str = ""
    nominal_size: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def points(self) -> np.ndarray:
        return self.num / self.den

    def exact_nodes(self) -> list[tuple[Fraction, ...]]:
        return [tuple(Fraction(int(a), self.den) for a in row) for row in self.num]


def make_rule(num, den: int, weights, label: str = "", nominal_size: int | None = None,
              exact_weights: dict | None = None, drop_zero: bool = True, meta: dict | None = None) -> CubatureRule:
    """Sort nodes lexicographically, merge duplicates and build a rule.

    ``exact_weights`` optionally maps a row index of ``num`` to an exact
    :class:`~fractions.Fraction` weight; merged groups containing only such
    rows are summed exactly.
    """
    num = np.asarray(num, dtype=np.int64)
    if num.ndim == 1:
        num = num[:, None]
    weights = np.asarray(weights, dtype=float)
    if num.shape[0] != weights.size:
        raise DimensionMismatch("nodes and weights differ in length")
    radix = int(num.max(initial=0)) + 1
    if num.min(initial=0) >= 0 and radix ** num.shape[1] < 2**62:
        # lexicographic order of rows == numeric order of mixed-radix keys
        keys = np.zeros(num.shape[0], dtype=np.int64)
        for col in num.T:
            keys = keys * radix + col
        _, first, inverse, counts = np.unique(keys, return_index=True, return_inverse=True,
                                              return_counts=True)
        uniq = num[first]
    else:
        uniq, inverse, counts = np.unique(num, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    merged = np.bincount(inverse, weights=weights, minlength=uniq.shape[0])
    if exact_weights is not None:
        for g in np.flatnonzero(counts > 1):
            rows = np.flatnonzero(inverse == g)
            if all(int(r) in exact_weights for r in rows):
                merged[g] = float(sum((exact_weights[int(r)] for r in rows), Fraction(0)))
    if drop_zero:
        keep = merged != 0.0
        uniq, merged = uniq[keep], merged[keep]
    return CubatureRule(num.shape[1], uniq, int(den), merged, label, nominal_size, dict(meta or {}))


def apply_rule(rule: CubatureRule, f: Integrand) -> float | complex:
    """``sum_j w_j f(x_j)`` with exactly rounded summation in node order."""
    if rule.dim != f.dim:
        raise DimensionMismatch(f"rule has dim {rule.dim}, integrand has dim {f.dim}")
    values = np.asarray(f(rule.points))
    terms = rule.weights * values
    if np.iscomplexobj(terms):
        return complex(math.fsum(terms.real), math.fsum(terms.imag))
    return math.fsum(terms)


def qmc_error(rule: CubatureRule, f: Integrand) -> float | complex:
    if f.exact_integral is None:
        raise MissingExactIntegral(f"integrand {f.name!r} has no exact integral")
    return apply_rule(rule, f) - f.exact_integral


def fibonacci_qmc(n: int) -> CubatureRule:
    mu, y, b = lattice_numerators(n)
    num = np.column_stack([mu, y])
    # mu order is already lexicographic and duplicate free
    return CubatureRule(2, num, b, np.full(b, 1.0 / b), f"fib:{n}", b)


def fibonacci_nonperiodic(n: int) -> CubatureRule:
    """Boundary-corrected Fibonacci rule for non-periodic integrands.

    Besides the lattice points, the rule samples the projections of every
    lattice point onto the four edges and the four corners:

        Q(f) = 1/b sum f(x_i, y_i)
             + 1/b sum (y_i - 1/2)(f(x_i,0) - f(x_i,1))
             + 1/b sum (x_i - 1/2)(f(0,y_i) - f(1,y_i))
             + c (f(0,0) - f(1,0) + f(1,1) - f(0,1)),
        c = 1/(2b) - 1/4 + 1/b sum x_i y_i.

    Coinciding nodes (the corners and the projections of ``mu = 0``) are
    merged with exact weights.  ``meta['nominal']`` keeps the customary size
    label ``5 b_n - 2``; :attr:`CubatureRule.size` is the number of distinct
    nodes carrying nonzero weight.
    """
    if n < 2:
        raise RangeGuard(f"non-periodic Fibonacci rule needs n >= 2, got {n}")
    mu, y, b = lattice_numerators(n)
    zeros = np.zeros_like(mu)
    full = np.full_like(mu, b)
    s_xy = int(np.dot(mu.astype(object), y.astype(object)))
    corner = Fraction(1, 2 * b) - Fraction(1, 4) + Fraction(s_xy, b ** 3)

    wy = (2 * y - b) / (2.0 * b * b)
    wx = (2 * mu - b) / (2.0 * b * b)
    blocks = [
        (np.column_stack([mu, y]), np.full(b, 1.0 / b)),
        (np.column_stack([mu, zeros]), wy),
        (np.column_stack([mu, full]), -wy),
        (np.column_stack([zeros, y]), wx),
        (np.column_stack([full, y]), -wx),
        (np.array([[0, 0], [b, 0], [b, b], [0, b]]), float(corner) * np.array([1.0, -1.0, 1.0, -1.0])),
    ]
    num = np.concatenate([blk[0] for blk in blocks])
    weights = np.concatenate([blk[1] for blk in blocks])

    # exact weights for every row that can take part in a merge: the mu = 0
    # rows of each block and the corners
    off = np.cumsum([0] + [blk[0].shape[0] for blk in blocks])
    half_b2 = Fraction(1, 2 * b * b)
    exact = {
        int(off[0]): Fraction(1, b),
        int(off[1]): (2 * int(y[0]) - b) * half_b2,
        int(off[2]): -(2 * int(y[0]) - b) * half_b2,
        int(off[3]): -b * half_b2,
        int(off[4]): b * half_b2,
    }
    for i, sign in enumerate((1, -1, 1, -1)):
        exact[int(off[5]) + i] = sign * corner
    rule = make_rule(num, b, weights, f"fibnp:{n}", 5 * b - 2, exact_weights=exact,
                     meta={"nominal": "5*b_n-2", "b_n": b})
    return rule


def constant(c: float = 1.0, dim: int = 2) -> Integrand:
    return Integrand(dim, lambda x: np.full(x.shape[0], c, dtype=float), c, name=f"const:{c}")


def monomial_integrand(ex: int, ey: int) -> Integrand:
    """``x^ex y^ey`` on the unit square."""
    return Integrand(2, lambda p: p[:, 0] ** ex * p[:, 1] ** ey, 1.0 / ((ex + 1) * (ey + 1)),
                     name=f"x^{ex}y^{ey}")


def exponential_integrand(k1: int, k2: int) -> Integrand:
    """``exp(2 pi i (k1 x + k2 y))``."""
    return Integrand(2, lambda p: np.exp(2j * np.pi * (k1 * p[:, 0] + k2 * p[:, 1])),
                     1.0 if k1 == 0 and k2 == 0 else 0.0, name=f"exp:{k1},{k2}")


def exp_sum_integrand() -> Integrand:
    """``exp(x + y)`` with integral ``(e - 1)^2``."""
    return Integrand(2, lambda p: np.exp(p[:, 0] + p[:, 1]), (math.e - 1.0) ** 2, name="expsum")

