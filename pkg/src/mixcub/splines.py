"""Cardinal B-splines, tensor B-spline atoms and the bivariate Faber basis.

The Faber (hierarchical hat) system on [0, 1] has levels ``j >= -1``.  Level
``-1`` consists of ``v_0(x) = 1 - x`` and ``v_1(x) = x``; level ``j >= 0`` of
the hats ``v_{j,m}``, ``m = 0..2^j - 1``, with support
``[2^-j m, 2^-j (m+1)]`` and peak value 1 at the midpoint.  The coefficient of
``v_{j,m}`` is the hierarchical surplus

    f(mid) - (f(left) + f(right)) / 2  =  -1/2 * second difference,

and the bivariate coefficients are the tensor products of these functionals.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

INF = math.inf


def eval_bspline(r: int, x) -> np.ndarray | float:
    """Cardinal B-spline of order ``r`` (support ``[0, r]``) by the order recursion

        N_1 = 1 on [0, 1),  N_r(x) = (x N_{r-1}(x) + (r - x) N_{r-1}(x - 1)) / (r - 1).
    """
    if r < 1:
        raise ValueError(f"B-spline order must be >= 1, got {r}")
    xa = np.asarray(x, dtype=float)
    # values[i] holds N_q(x - i) for the current order q
    values = [((xa - i >= 0) & (xa - i < 1)).astype(float) for i in range(r)]
    for q in range(2, r + 1):
        values = [((xa - i) * values[i] + (q - (xa - i)) * values[i + 1]) / (q - 1)
                  for i in range(r - q + 1)]
    out = values[0]
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class CardinalBSpline:
    r: int

    def __call__(self, x):
        return eval_bspline(self.r, x)

    @property
    def peak(self) -> float:
        return float(eval_bspline(self.r, self.r / 2))

    def lq_norm(self, q: float) -> float:
        """``||N||_q`` on the real line, by Gauss-Legendre on each knot span."""
        if q == INF:
            return self.peak
        t, w = np.polynomial.legendre.leggauss(max(self.r * int(math.ceil(q)), 8))
        total = 0.0
        for i in range(self.r):
            xs = i + (t + 1) / 2
            total += 0.5 * float(np.dot(w, np.abs(eval_bspline(self.r, xs)) ** q))
        return total ** (1.0 / q)


@dataclass(frozen=True)
class BSplineAtom:
    """``N_{k,s}(x) = prod_i N(2^{k_i} x_i - s_i)``."""

    k: tuple[int, ...]
    s: tuple[int, ...]
    r: int

    @property
    def dim(self) -> int:
        return len(self.k)

    @property
    def integral(self) -> float:
        return 2.0 ** (-sum(self.k))

    def support(self) -> list[tuple[float, float]]:
        return [(2.0 ** -ki * si, 2.0 ** -ki * (si + self.r)) for ki, si in zip(self.k, self.s)]


def eval_atom(atom: BSplineAtom, x) -> np.ndarray | float:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != atom.dim:
        raise ValueError(f"atom has dim {atom.dim}, points have dim {pts.shape[1]}")
    out = np.ones(pts.shape[0])
    for i, (ki, si) in enumerate(zip(atom.k, atom.s)):
        out *= eval_bspline(atom.r, 2.0 ** ki * pts[:, i] - si)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class BesovParams:
    alpha: float
    p: float
    theta: float

    @classmethod
    def parse(cls, text: str) -> "BesovParams":
        a, p, t = (float(v) for v in text.split(","))
        return cls(a, p, t)


def _lp(values, p: float) -> float:
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    if v.size == 0:
        return 0.0
    if p == INF:
        return float(v.max())
    scale = float(v.max())
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((v / scale) ** p)) ** (1.0 / p)


def _weighted_lq(weights: list[float], norms: list[float], theta: float) -> float:
    """``(sum (w_i x_i)^theta)^(1/theta)``, scaled by the largest term so that
    multiplying every ``x_i`` by a power of two is exact."""
    terms = [w * x for w, x in zip(weights, norms)]
    terms = [v for v in terms if v > 0]
    if not terms:
        return 0.0
    top = max(terms)
    if theta == INF:
        return top
    return top * math.fsum((v / top) ** theta for v in terms) ** (1.0 / theta)


# --------------------------------------------------------------------------
# Faber basis


def level_size(j: int) -> int:
    return 2 if j == -1 else 2**j


def faber_hat(j: int, m: int, x) -> np.ndarray:
    """The univariate Faber function ``v_{j,m}``."""
    xa = np.asarray(x, dtype=float)
    if j == -1:
        return 1.0 - xa if m == 0 else xa.copy()
    t = 2.0**j * xa - m
    return np.clip(1.0 - np.abs(2.0 * t - 1.0), 0.0, None)


def faber_hat_integral(j: int) -> float:
    return 0.5 if j == -1 else 2.0 ** (-j - 1)


@dataclass
class FaberCoefficients:
    """Coefficients ``D_{j,m}`` keyed by level ``(j1, j2)``; each value is a
    ``(level_size(j1), level_size(j2))`` array."""

    J: int
    levels: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def items(self):
        return sorted(self.levels.items())

    def scaled(self, c: float) -> "FaberCoefficients":
        return FaberCoefficients(self.J, {j: c * a for j, a in self.levels.items()})

    def __add__(self, other: "FaberCoefficients") -> "FaberCoefficients":
        out = {j: a.copy() for j, a in self.levels.items()}
        for j, a in other.levels.items():
            out[j] = out[j] + a if j in out else a.copy()
        return FaberCoefficients(max(self.J, other.J), out)

    def rows(self):
        """``(j1, j2, m1, m2, coef)`` rows in level-major order."""
        for (j1, j2), a in self.items():
            for m1 in range(a.shape[0]):
                for m2 in range(a.shape[1]):
                    yield j1, j2, m1, m2, float(a[m1, m2])


def _surplus_operator(j: int, res: int) -> np.ndarray:
    """Rows of the univariate coefficient functional of level ``j`` acting on
    samples at ``i / 2^res``, ``i = 0..2^res``, as (index, weight) arrays."""
    if j == -1:
        return np.array([[0], [2**res]]), np.array([[1.0], [1.0]])
    step = 2 ** (res - j)
    left = np.arange(2**j) * step
    idx = np.column_stack([left, left + step // 2, left + step])
    w = np.tile([-0.5, 1.0, -0.5], (2**j, 1))
    return idx, w


def surplus_stencil(j: int, m: int) -> list[tuple[float, float]]:
    """Sample points and weights of the level-``j`` coefficient functional."""
    if j == -1:
        return [(float(m), 1.0)]
    h = 2.0 ** -j
    return [(m * h, -0.5), (m * h + h / 2, 1.0), ((m + 1) * h, -0.5)]


def _apply_axis(values: np.ndarray, j: int, res: int, axis: int) -> np.ndarray:
    idx, w = _surplus_operator(j, res)
    if axis == 0:
        return np.einsum("ijk,ij->ik", values[idx, :], w)
    return np.einsum("kij,ij->ki", values[:, idx], w)


def _grid_values(f: Callable, res: int) -> np.ndarray:
    t = np.arange(2**res + 1) / 2**res
    X, Y = np.meshgrid(t, t, indexing="ij")
    vals = np.asarray(f(np.column_stack([X.ravel(), Y.ravel()])))
    return vals.reshape(X.shape)


def faber_decompose(f: Callable, J: int, admissible: Callable[[int, int], bool] | None = None) -> FaberCoefficients:
    """Faber coefficients of ``f`` on ``[0,1]^2`` for levels ``-1 <= j_i <= J``.

    ``f`` maps ``(N, 2)`` arrays to ``N`` values and is sampled once on the
    dyadic grid of resolution ``J + 1``.  ``admissible`` restricts the stored
    levels.
    """
    if J < -1:
        raise ValueError(f"J must be >= -1, got {J}")
    res = J + 1
    F = _grid_values(f, res)
    return _decompose_grid(F, res, J, admissible)


def _decompose_grid(F: np.ndarray, res: int, J: int, admissible=None) -> FaberCoefficients:
    out = FaberCoefficients(J)
    for j1 in range(-1, J + 1):
        if admissible is not None and not any(admissible(j1, j2) for j2 in range(-1, J + 1)):
            continue
        A = _apply_axis(F, j1, res, 0)
        for j2 in range(-1, J + 1):
            if admissible is not None and not admissible(j1, j2):
                continue
            out.levels[(j1, j2)] = _apply_axis(A, j2, res, 1)
    return out


def _hat_support(j: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices and values of the level-``j`` functions that can be nonzero at ``x``."""
    if j == -1:
        return np.column_stack([np.zeros(x.size, int), np.ones(x.size, int)]), np.column_stack([1.0 - x, x])
    t = x * 2.0**j
    m = np.clip(np.floor(t).astype(int), 0, 2**j - 1)
    return m[:, None], np.clip(1.0 - np.abs(2.0 * (t - m) - 1.0), 0.0, None)[:, None]


def faber_reconstruct(coeffs: FaberCoefficients, x) -> np.ndarray | float:
    """``sum_j sum_m D_{j,m} v_{j,m}(x)`` at points ``x`` of shape ``(N, 2)``."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = np.zeros(pts.shape[0])
    cache1: dict = {}
    cache2: dict = {}
    for (j1, j2), D in coeffs.items():
        if j1 not in cache1:
            cache1[j1] = _hat_support(j1, pts[:, 0])
        if j2 not in cache2:
            cache2[j2] = _hat_support(j2, pts[:, 1])
        i1, v1 = cache1[j1]
        i2, v2 = cache2[j2]
        for a in range(i1.shape[1]):
            for b in range(i2.shape[1]):
                out += D[i1[:, a], i2[:, b]] * v1[:, a] * v2[:, b]
    return float(out[0]) if single else out


def _level_weight(j: tuple[int, ...]) -> int:
    return sum(max(ji, 0) for ji in j)


def besov_norm_faber(coeffs: FaberCoefficients, params: BesovParams) -> float:
    """``[sum_j 2^{|j|_1 (alpha - 1/p) theta} (sum_m |D_{j,m}|^p)^{theta/p}]^{1/theta}``.

    Levels ``-1`` count as 0 in ``|j|_1``.
    """
    a, p, t = params.alpha, params.p, params.theta
    ws, ns = [], []
    for j, D in coeffs.items():
        ws.append(2.0 ** (_level_weight(j) * (a - 1.0 / p)))
        ns.append(_lp(D, p))
    return _weighted_lq(ws, ns, t)


def bspline_quasinorm(terms: Iterable[tuple[tuple[int, ...], tuple[int, ...], float]], params: BesovParams) -> float:
    """``B(g) = (sum_k 2^{theta (alpha - 1/p) |k|_1} [sum_s |c_{k,s}|^p]^{theta/p})^{1/theta}``."""
    grouped: dict[tuple[int, ...], list[float]] = defaultdict(list)
    for k, _s, c in terms:
        grouped[tuple(k)].append(c)
    a, p, t = params.alpha, params.p, params.theta
    ws = [2.0 ** ((a - 1.0 / p) * sum(k)) for k in grouped]
    ns = [_lp(cs, p) for cs in grouped.values()]
    return _weighted_lq(ws, ns, t)


# --------------------------------------------------------------------------
# Stability of the B-spline system


def shift_range(k: int, r: int) -> np.ndarray:
    """Shifts ``s`` with ``-r < s < 2^k``: the atoms not vanishing on [0, 1]."""
    return np.arange(-r + 1, 2**k)


def _basis_matrix(k: int, r: int, x: np.ndarray) -> sp.csr_matrix:
    """Sparse ``B[i, s] = N(2^k x_i - s)`` over ``s`` in :func:`shift_range`."""
    t = 2.0**k * x
    base = np.floor(t).astype(int)
    rows, cols, vals = [], [], []
    for off in range(r):
        s = base - off
        v = eval_bspline(r, t - s)
        ok = (s > -r) & (s < 2**k) & (v != 0)
        rows.append(np.flatnonzero(ok))
        cols.append(s[ok] + r - 1)
        vals.append(v[ok])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(x.size, 2**k + r - 1))


def spline_lp_norms(k: tuple[int, ...], coeffs: np.ndarray, r: int, ps: Iterable[float],
                    extra: int = 6, chunk: int = 1 << 20) -> dict[float, float]:
    """``||sum_s a_s N_{k,s}||_p`` on ``[0,1]^d`` for several ``p`` at once.

    Finite ``p`` uses the midpoint rule on the dyadic grid of resolution
    ``k + extra``; ``p = inf`` takes the maximum over the closed grid nodes.
    Supports ``d = 1, 2``.
    """
    k = tuple(k)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != tuple(2**ki + r - 1 for ki in k):
        raise ValueError(f"coefficient array shape {coeffs.shape} does not match level {k}")
    ps = list(ps)
    out: dict[float, float] = {}
    for closed in (False, True):
        want = [p for p in ps if (p == INF) == closed]
        if not want:
            continue
        axes = []
        for ki in k:
            n = 2 ** (ki + extra)
            x = np.arange(n + 1) / n if closed else (np.arange(n) + 0.5) / n
            axes.append(_basis_matrix(ki, r, x))
        sums = {p: 0.0 for p in want}
        vmax = 0.0
        if len(k) == 1:
            vals = np.abs(axes[0] @ coeffs)
            blocks = [vals]
        elif len(k) == 2:
            T = (axes[1] @ coeffs.T).T  # (n_s1, ny)
            rows_per = max(1, chunk // T.shape[1])
            blocks = (np.abs(axes[0][i:i + rows_per] @ T) for i in range(0, axes[0].shape[0], rows_per))
        else:
            raise NotImplementedError("spline norms are implemented for d <= 2")
        cells = 1
        for ax in axes:
            cells *= ax.shape[0]
        for blk in blocks:
            if closed:
                vmax = max(vmax, float(blk.max(initial=0.0)))
            else:
                for p in want:
                    sums[p] += float(np.sum(blk**p))
        for p in want:
            out[p] = vmax if closed else (sums[p] / cells) ** (1.0 / p)
    return out


def stability_check(k: tuple[int, ...], coeffs: np.ndarray, p: float, r: int = 2) -> tuple[float, float]:
    """``(||g||_p, 2^{-|k|_1/p} ||a||_p)`` for ``g = sum_s a_s N_{k,s}``."""
    lhs = spline_lp_norms(k, coeffs, r, [p])[p]
    scale = 1.0 if p == INF else 2.0 ** (-sum(k) / p)
    return lhs, scale * _lp(coeffs, p)


def all_shifts(k: tuple[int, ...], r: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(*(shift_range(ki, r) for ki in k))
