"""Smolyak grids, hierarchical Faber sampling and the derived cubature rule.

``G^d(m)`` is the union of the dyadic grids ``I_{k_1} x ... x I_{k_d}`` with
``|k|_1 <= m``, where ``I_k = {l / 2^k : 0 <= l < 2^k}``.  These points live on
the torus.  For sampling on the cube, each coordinate 0 may also be read at
1 (the same torus point); those boundary copies are needed by the level -1
Faber functions ``1 - x`` and ``x``.

The sampling operator keeps every Faber level ``j = (j1, j2)`` whose
coefficient stencil fits in the grid, i.e. ``(j1 + 1) + (j2 + 1) <= m`` with
level -1 counted as grid level 0.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cubature import CubatureRule, make_rule
from .errors import SizeGuard
from .splines import INF, FaberCoefficients, _apply_axis, faber_hat_integral, faber_reconstruct

MAX_GRID_POINTS = 2**24


def compositions(total: int, d: int):
    """All ``k`` in ``Z_+^d`` with ``|k|_1 == total``, in lexicographic order."""
    if d == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, d - 1):
            yield (first,) + rest


def dyadic_level(num: np.ndarray, res: int) -> np.ndarray:
    """Level of ``num / 2^res``: 0 for 0, else the ``k`` with value odd / 2^k."""
    num = np.asarray(num, dtype=np.int64)
    out = np.zeros(num.shape, dtype=np.int64)
    nz = num != 0
    v = num[nz]
    tz = np.zeros(v.shape, dtype=np.int64)
    while np.any(v % 2 == 0):
        even = v % 2 == 0
        tz += even
        v = np.where(even, v // 2, v)
    out[nz] = res - tz
    return out


@dataclass(frozen=True)
class SmolyakGrid:
    d: int
    m: int
    num: np.ndarray  # (N, d) numerators over 2^m

    @property
    def den(self) -> int:
        return 2**self.m

    @property
    def size(self) -> int:
        return int(self.num.shape[0])

    @property
    def points(self) -> np.ndarray:
        return self.num / self.den

    def level_sets(self) -> list[tuple[int, ...]]:
        return list(compositions(self.m, self.d))

    def closure(self) -> np.ndarray:
        """Numerators of the grid with each zero coordinate also read at 1."""
        rows = [self.num]
        for mask in itertools.product((0, 1), repeat=self.d):
            if not any(mask):
                continue
            cols = [i for i, b in enumerate(mask) if b]
            sel = np.all(self.num[:, cols] == 0, axis=1)
            moved = self.num[sel].copy()
            moved[:, cols] = self.den
            rows.append(moved)
        return np.unique(np.concatenate(rows), axis=0)


def smolyak_grid(d: int, m: int) -> SmolyakGrid:
    """Deduplicated ``G^d(m)``, ordered by level sum and then lexicographically."""
    if d < 1 or m < 0:
        raise ValueError(f"need d >= 1 and m >= 0, got d={d}, m={m}")
    generated = math.comb(m + d - 1, d - 1) * 2**m
    if generated > MAX_GRID_POINTS:
        raise SizeGuard(f"G^{d}({m}) would generate {generated} points")
    blocks = []
    for k in compositions(m, d):
        axes = [np.arange(2**ki, dtype=np.int64) * 2 ** (m - ki) for ki in k]
        mesh = np.meshgrid(*axes, indexing="ij")
        blocks.append(np.column_stack([g.ravel() for g in mesh]))
    num = np.unique(np.concatenate(blocks), axis=0)
    level = dyadic_level(num, m).sum(axis=1)
    order = np.lexsort(tuple(num[:, i] for i in reversed(range(d))) + (level,))
    return SmolyakGrid(d, m, num[order])


def admissible(j1: int, j2: int, m: int) -> bool:
    return (j1 + 1) + (j2 + 1) <= m


def admissible_levels(m: int) -> list[tuple[int, int]]:
    return [(j1, j2) for j1 in range(-1, m) for j2 in range(-1, m) if admissible(j1, j2, m)]


def _level_grid(j: int) -> tuple[np.ndarray, int]:
    res = j + 1
    return np.arange(2**res + 1) / 2**res, res


@dataclass
class SparseSurplus:
    """Faber coefficients of ``f`` on the admissible levels of ``G^2(m)``."""

    m: int
    coeffs: FaberCoefficients

    def __call__(self, x) -> np.ndarray:
        return faber_reconstruct(self.coeffs, x)


def smolyak_interpolate(f, m: int) -> SparseSurplus:
    """Hierarchical Faber interpolant ``S_m f`` on ``G^2(m)``.

    The coefficients of level ``j`` are computed from samples of ``f`` on the
    closed anisotropic grid of resolution ``(j1 + 1, j2 + 1)``, which is part of
    the grid.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    out = FaberCoefficients(m - 1)
    for j1, j2 in admissible_levels(m):
        t1, r1 = _level_grid(j1)
        t2, r2 = _level_grid(j2)
        X, Y = np.meshgrid(t1, t2, indexing="ij")
        F = np.asarray(f(np.column_stack([X.ravel(), Y.ravel()]))).reshape(X.shape)
        out.levels[(j1, j2)] = _apply_axis(_apply_axis(F, j1, r1, 0), j2, r2, 1)
    return SparseSurplus(m, out)


def _univariate_weights(j: int) -> np.ndarray:
    """Integration weights of ``sum_m D_{j,m} v_{j,m}`` on the level-``j`` samples."""
    if j == -1:
        return np.array([0.5, 0.5])
    res = j + 1
    w = np.zeros(2**res + 1)
    c = faber_hat_integral(j)
    w[1::2] += c
    w[0:-1:2] -= 0.5 * c
    w[2::2] -= 0.5 * c
    return w


def smolyak_cubature(m: int) -> CubatureRule:
    """Cubature rule ``f -> integral of S_m f`` on ``G^2(m)`` (with boundary copies)."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    den = 2**m
    nums, weights = [], []
    for j1, j2 in admissible_levels(m):
        w1, w2 = _univariate_weights(j1), _univariate_weights(j2)
        s1 = den // (w1.size - 1)
        s2 = den // (w2.size - 1)
        a, b = np.meshgrid(np.arange(w1.size) * s1, np.arange(w2.size) * s2, indexing="ij")
        nums.append(np.column_stack([a.ravel(), b.ravel()]))
        weights.append(np.outer(w1, w2).ravel())
    rule = make_rule(np.concatenate(nums), den, np.concatenate(weights), f"smolyak:2,{m}")
    return rule


def _hat_matrix(res: int, x: np.ndarray) -> sp.csr_matrix:
    """Piecewise-linear interpolation from the nodes ``i / 2^res`` to ``x``."""
    n = 2**res
    t = x * n
    i = np.clip(np.floor(t).astype(int), 0, n - 1)
    frac = t - i
    rows = np.concatenate([np.arange(x.size)] * 2)
    cols = np.concatenate([i, i + 1])
    vals = np.concatenate([1.0 - frac, frac])
    return sp.csr_matrix((vals, (rows, cols)), shape=(x.size, n + 1))


def interpolant_on_full_grid(surplus: SparseSurplus) -> np.ndarray:
    """``S_m f`` at the nodes of the full grid of resolution ``max(m, 1)``.

    ``S_m f`` is bilinear on every cell of that grid, so these values
    determine it everywhere.
    """
    res = max(surplus.m, 1)
    t = np.arange(2**res + 1) / 2**res
    V = np.zeros((t.size, t.size))
    for (j1, j2), D in surplus.coeffs.items():
        H1 = _level_basis(j1, t)
        H2 = _level_basis(j2, t)
        V += H1 @ D @ H2.T
    return V


def _level_basis(j: int, x: np.ndarray) -> np.ndarray:
    if j == -1:
        return np.column_stack([1.0 - x, x])
    t = x[:, None] * 2.0**j - np.arange(2**j)[None, :]
    return np.clip(1.0 - np.abs(2.0 * t - 1.0), 0.0, None)


def sampling_error(f, m: int, q: float, extra: int = 4, chunk: int = 1 << 20) -> float:
    """``||f - S_m f||_q`` on ``[0,1]^2``, estimated on the uniform grid of
    resolution ``m + extra``: midpoint rule for finite ``q``, maximum over the
    closed grid nodes for ``q = inf``."""
    if q not in (1, 2, INF):
        raise ValueError(f"q must be 1, 2 or inf, got {q}")
    surplus = smolyak_interpolate(f, m)
    V = interpolant_on_full_grid(surplus)
    res = max(m, 1)
    n = 2 ** (m + extra)
    x = np.arange(n + 1) / n if q == INF else (np.arange(n) + 0.5) / n
    U = _hat_matrix(res, x)
    right = (U @ V.T).T  # (coarse, fine)
    rows_per = max(1, chunk // x.size)
    acc = []
    for i in range(0, x.size, rows_per):
        xs = x[i:i + rows_per]
        approx = U[i:i + rows_per] @ right
        X, Y = np.meshgrid(xs, x, indexing="ij")
        exact = np.asarray(f(np.column_stack([X.ravel(), Y.ravel()]))).reshape(X.shape)
        err = np.abs(exact - approx)
        acc.append(float(err.max()) if q == INF else math.fsum((err**q).ravel()))
    if q == INF:
        return max(acc)
    return (math.fsum(acc) / x.size**2) ** (1.0 / q)
