"""Fooling functions: B-spline sums that vanish on a node set.

For a level ``k`` in ``Z_+^d`` and a shift ``s`` with ``0 <= s_i < 2^{k_i}``,
the atom

    g_{k,s}(x) = prod_i N_r(2^{k_i + nu} x_i - 2^nu s_i),   2^{nu-1} < r <= 2^nu,

is positive on the interior of its support and zero elsewhere, and the
support lies in the closed dyadic cell ``I_{k,s}``.  An atom therefore
vanishes on every node outside the open cell.  Its integral is
``2^{-|k|_1 - d nu}``.

A witness is a weighted sum of such atoms on cells that contain no node.  It
is scaled to unit B-spline quasi-norm, so the absolute value of its integral
is a lower bound for the error of every cubature rule using those nodes.
Node locations are handled with exact integer arithmetic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InsufficientCells, SizeGuard, VanishingCheckFailed
from .fiblattice import lattice_numerators
from .smolyak import compositions, smolyak_grid
from .splines import INF, BesovParams, _lp, _weighted_lq, bspline_quasinorm, eval_bspline

MAX_CELLS = 2**24
VANISH_TOL = 1e-14


def minimal_nu(r: int) -> int:
    """Smallest ``nu >= 0`` with ``r <= 2^nu`` (so ``2^{nu-1} < r`` for ``r >= 2``)."""
    if r < 1:
        raise ValueError(f"spline order must be >= 1, got {r}")
    return (r - 1).bit_length()


@dataclass(frozen=True)
class FoolingConfig:
    d: int
    r: int
    params: BesovParams
    nu: int | None = None

    def __post_init__(self):
        if self.r < 2:
            raise ValueError(f"spline order must be >= 2, got {self.r}")
        nu = minimal_nu(self.r) if self.nu is None else self.nu
        if not 2 ** (nu - 1) < self.r <= 2**nu:
            raise ValueError(f"nu={nu} does not satisfy 2^(nu-1) < r <= 2^nu for r={self.r}")
        object.__setattr__(self, "nu", nu)

    @property
    def valid_window(self) -> bool:
        """Whether ``alpha < min(r, r - 1 + 1/p)``."""
        p = self.params.p
        return self.params.alpha < min(self.r, self.r - 1 + (0.0 if p == INF else 1.0 / p))


@dataclass(frozen=True)
class NodeSet:
    """Points ``num / den`` in ``[0,1]^d`` with integer numerators."""

    num: np.ndarray
    den: int

    @property
    def d(self) -> int:
        return int(self.num.shape[1])

    @property
    def size(self) -> int:
        return int(self.num.shape[0])

    @property
    def points(self) -> np.ndarray:
        return self.num.astype(float) / self.den

    @classmethod
    def from_fractions(cls, rows: Iterable[Iterable]) -> "NodeSet":
        fr = [[Fraction(v) for v in row] for row in rows]
        if not fr:
            raise ValueError("empty node set")
        den = math.lcm(*(v.denominator for row in fr for v in row))
        num = [[v.numerator * (den // v.denominator) for v in row] for row in fr]
        dtype = np.int64 if den < 2**62 else object
        return cls(np.array(num, dtype=dtype), den)


def fibonacci_nodes(n: int) -> NodeSet:
    mu, y, b = lattice_numerators(n)
    return NodeSet(np.column_stack([mu, y]), b)


def smolyak_nodes(d: int, m: int) -> NodeSet:
    g = smolyak_grid(d, m)
    return NodeSet(g.num, g.den)


def read_node_file(path: str) -> NodeSet:
    """CSV rows ``x1,...,xd`` of rationals ``p/q`` or decimals."""
    with open(path, newline="") as fh:
        rows = [[c.strip() for c in row] for row in csv.reader(fh) if row and not row[0].startswith("#")]
    return NodeSet.from_fractions(rows)


def node_set_from_spec(spec: str) -> NodeSet:
    """``fib:<n>``, ``smolyak:<d>,<m>`` or ``file:<path>``."""
    kind, _, arg = spec.partition(":")
    if kind == "fib":
        return fibonacci_nodes(int(arg))
    if kind == "smolyak":
        d, m = (int(v) for v in arg.split(","))
        return smolyak_nodes(d, m)
    if kind == "file":
        return read_node_file(arg)
    raise ValueError(f"unknown node spec {spec!r}")


def _cell_coordinates(nodes: NodeSet, k: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Per node: the cell index along each axis and whether it is interior."""
    num = nodes.num
    big = num.dtype == object or int(num.max(initial=0)) * 2 ** max(k) >= 2**62
    if big:
        num = num.astype(object)
    cells = np.empty(num.shape, dtype=np.int64)
    inner = np.empty(num.shape, dtype=bool)
    for i, ki in enumerate(k):
        scaled = num[:, i] * (2**ki)
        q, rem = scaled // nodes.den, scaled % nodes.den
        cells[:, i] = q.astype(np.int64)
        inner[:, i] = (rem != 0) if not big else np.array([v != 0 for v in rem], dtype=bool)
    return cells, inner


def cells_avoiding(nodes: NodeSet, k: tuple[int, ...]) -> np.ndarray:
    """All shifts ``s`` whose open cell ``I_{k,s}`` contains no node, as a
    ``(M, d)`` array in lexicographic order."""
    k = tuple(int(v) for v in k)
    if len(k) != nodes.d:
        raise ValueError(f"level {k} does not match node dimension {nodes.d}")
    if sum(k) > math.log2(MAX_CELLS):
        raise SizeGuard(f"level {k} has more than {MAX_CELLS} cells")
    shape = tuple(2**ki for ki in k)
    cells, inner = _cell_coordinates(nodes, k)
    occ = np.all(inner, axis=1) & np.all((cells >= 0) & (cells < np.array(shape)), axis=1)
    occupied = np.zeros(shape, dtype=bool)
    occupied[tuple(cells[occ].T)] = True
    return np.argwhere(~occupied).astype(np.int64)


@dataclass
class WitnessFunction:
    """``C * sum_k sum_s c_{k,s} g_{k,s}``.

    ``levels`` maps ``k`` to ``(shifts, coefs)`` with the unnormalized
    coefficients; ``C`` brings the B-spline quasi-norm to one.
    """

    kind: str
    config: FoolingConfig
    m: int
    levels: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]]
    C: float = 1.0
    exact_integral: float = 0.0
    _dense: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.config.d

    @property
    def atom_count(self) -> int:
        return sum(s.shape[0] for s, _ in self.levels.values())

    def terms(self) -> Iterable[tuple[tuple[int, ...], tuple[int, ...], float]]:
        """Normalized terms ``(k, s, C c)`` over the atom levels ``k + nu``
        and shifts ``2^nu s``, in the B-spline convention ``N(2^k x - s)``."""
        nu = self.config.nu
        for k, (shifts, coefs) in self.levels.items():
            lk = tuple(ki + nu for ki in k)
            for s, c in zip(shifts, coefs):
                yield lk, tuple(int(v) * 2**nu for v in s), self.C * float(c)

    def unnormalized_quasinorm(self) -> float:
        nu = self.config.nu
        a, p, t = self.config.params.alpha, self.config.params.p, self.config.params.theta
        ws = [2.0 ** ((a - 1.0 / p) * (sum(k) + self.d * nu)) for k in self.levels]
        ns = [_lp(c, p) for _, c in self.levels.values()]
        return _weighted_lq(ws, ns, t)

    def quasinorm(self) -> float:
        return bspline_quasinorm(self.terms(), self.config.params)

    def _coef_grid(self, k):
        if k not in self._dense:
            shifts, coefs = self.levels[k]
            grid = np.zeros(tuple(2**ki for ki in k))
            grid[tuple(shifts.T)] = coefs
            self._dense[k] = grid
        return self._dense[k]

    def __call__(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.d:
            raise ValueError(f"witness has dim {self.d}, points have dim {pts.shape[1]}")
        r, nu = self.config.r, self.config.nu
        out = np.zeros(pts.shape[0])
        for k in self.levels:
            grid = self._coef_grid(k)
            scale = np.array([2.0**ki for ki in k])
            cell = np.floor(pts * scale).astype(np.int64)
            ok = np.all((cell >= 0) & (cell < scale.astype(np.int64)), axis=1)
            idx = np.flatnonzero(ok)
            c = grid[tuple(cell[idx].T)]
            val = c.copy()
            for i in range(self.d):
                val *= eval_bspline(r, 2.0**nu * (scale[i] * pts[idx, i] - cell[idx, i]))
            out[idx] += val
        return self.C * out


def _finish(kind: str, config: FoolingConfig, m: int, levels: dict) -> WitnessFunction:
    w = WitnessFunction(kind, config, m, levels)
    B = w.unnormalized_quasinorm()
    w.C = 1.0 / B
    dnu = config.d * config.nu
    w.exact_integral = w.C * math.fsum(
        math.fsum(c) * 2.0 ** (-sum(k) - dnu) for k, (_, c) in levels.items())
    return w


def _log_factor(m: int, config: FoolingConfig) -> float:
    t = config.params.theta
    if config.d == 1 or t == INF:
        return 1.0
    return max(m, 1) ** (-(config.d - 1) / t)


def node_level(nodes: NodeSet) -> int:
    """``m = ceil(log2 |X|)``."""
    return max(0, (nodes.size - 1).bit_length())


def _select(nodes: NodeSet, k: tuple[int, ...], m: int) -> np.ndarray:
    free = cells_avoiding(nodes, k)
    if free.shape[0] < 2**m:
        raise InsufficientCells(f"level {k} has {free.shape[0]} free cells, need {2**m}")
    return free[: 2**m]


def build_gstar(nodes: NodeSet, m: int | None, config: FoolingConfig) -> WitnessFunction:
    """All levels ``|k|_1 = m + 1``, ``2^m`` free cells each."""
    if m is None:
        m = node_level(nodes)
    if nodes.size > 2**m:
        raise ValueError(f"{nodes.size} nodes exceed 2^{m}")
    pre = 2.0 ** (-config.params.alpha * m) * _log_factor(m, config)
    levels = {}
    for k in compositions(m + 1, config.d):
        shifts = _select(nodes, k, m)
        levels[k] = (shifts, np.full(shifts.shape[0], pre))
    return _finish("gstar", config, m, levels)


def build_gk(nodes: NodeSet, m: int | None, k: tuple[int, ...] | None, config: FoolingConfig) -> WitnessFunction:
    """Single level ``k`` with ``|k|_1 = m + 1``; default ``k = (m+1, 0, ..., 0)``."""
    if m is None:
        m = node_level(nodes)
    if nodes.size > 2**m:
        raise ValueError(f"{nodes.size} nodes exceed 2^{m}")
    if k is None:
        k = (m + 1,) + (0,) * (config.d - 1)
    k = tuple(int(v) for v in k)
    if sum(k) != m + 1:
        raise ValueError(f"level {k} must have |k|_1 = {m + 1}")
    shifts = _select(nodes, k, m)
    levels = {k: (shifts, np.full(shifts.shape[0], 2.0 ** (-config.params.alpha * m)))}
    return _finish("gk", config, m, levels)


def _all_shifts(k: tuple[int, ...]) -> np.ndarray:
    return np.indices(tuple(2**ki for ki in k)).reshape(len(k), -1).T.astype(np.int64)


def build_smolyak_witnesses(d: int, m: int, config: FoolingConfig) -> dict[str, WitnessFunction]:
    """``phi1`` .. ``phi4`` on levels ``|k|_1 = m``; they vanish on ``G^d(m)``.

    ``phi1`` and ``phi3`` use the lexicographically first level; ``phi3`` and
    ``phi4`` use the shift ``s = 0``.
    """
    if config.d != d:
        raise ValueError(f"config has d={config.d}, requested d={d}")
    if math.comb(m + d - 1, d - 1) * 2**m > MAX_CELLS:
        raise SizeGuard(f"witnesses on G^{d}({m}) exceed {MAX_CELLS} atoms")
    a, p = config.params.alpha, config.params.p
    ks = list(compositions(m, d))
    kbar = ks[0]
    zero = np.zeros((1, d), dtype=np.int64)
    big = 2.0 ** (-a * m)
    small = 2.0 ** (-(a - 1.0 / p) * m)
    lf = _log_factor(m, config)

    phi1 = {kbar: (_all_shifts(kbar), np.full(2**m, big))}
    phi2 = {k: (_all_shifts(k), np.full(2**m, big * lf)) for k in ks}
    phi3 = {kbar: (zero, np.array([small]))}
    phi4 = {k: (zero, np.array([small * lf])) for k in ks}
    return {name: _finish(name, config, m, lv)
            for name, lv in (("phi1", phi1), ("phi2", phi2), ("phi3", phi3), ("phi4", phi4))}


def build_witness(kind: str, nodes: NodeSet, config: FoolingConfig, m: int | None = None) -> WitnessFunction:
    """Dispatch on ``kind``; Smolyak witnesses take ``m`` from the node count."""
    if kind == "gstar":
        return build_gstar(nodes, m, config)
    if kind == "gk":
        return build_gk(nodes, m, None, config)
    if kind in ("phi1", "phi2", "phi3", "phi4"):
        if m is None:
            m = _smolyak_level(nodes)
        return build_smolyak_witnesses(nodes.d, m, config)[kind]
    raise ValueError(f"unknown witness kind {kind!r}")


def _smolyak_level(nodes: NodeSet) -> int:
    """Largest ``m`` with ``G^d(m)`` contained in the node set (by size)."""
    m = 0
    while math.comb(m + 1 + nodes.d - 1, nodes.d - 1) * 2 ** (m + 1) <= MAX_CELLS \
            and smolyak_grid(nodes.d, m + 1).size <= nodes.size:
        m += 1
    return m


def check_vanishing(w: WitnessFunction, nodes: NodeSet) -> float:
    """Largest ``|w|`` over the nodes; raises if it exceeds the tolerance."""
    worst = float(np.max(np.abs(w(nodes.points)), initial=0.0))
    if worst > VANISH_TOL:
        raise VanishingCheckFailed(f"{w.kind} reaches {worst:.3e} on a node")
    return worst


def witness_lower_bound(w: WitnessFunction, nodes: NodeSet) -> float:
    """``|I(w)|`` for a unit-norm witness that vanishes on ``nodes``."""
    check_vanishing(w, nodes)
    return abs(w.exact_integral)


def witness_grid_integral(w: WitnessFunction, res: int, chunk: int = 1 << 20) -> float:
    """Midpoint rule for ``w`` on the dyadic grid of resolution ``res``."""
    n = 2**res
    t = (np.arange(n) + 0.5) / n
    if w.d == 1:
        return math.fsum(w(t[:, None])) / n
    if w.d != 2:
        raise ValueError("grid quadrature implemented for d <= 2")
    rows = max(1, chunk // n)
    total = []
    for i in range(0, n, rows):
        X, Y = np.meshgrid(t[i:i + rows], t, indexing="ij")
        total.append(math.fsum(w(np.column_stack([X.ravel(), Y.ravel()]))))
    return math.fsum(total) / n**2


def witness_lq_norm(w: WitnessFunction, q: float, res: int) -> float:
    """``||w||_q`` on the grid of resolution ``res`` (d = 2); max over the
    closed grid for ``q = inf``."""
    n = 2**res
    t = np.arange(n + 1) / n if q == INF else (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(t, t, indexing="ij")
    v = np.abs(w(np.column_stack([X.ravel(), Y.ravel()])))
    if q == INF:
        return float(v.max())
    return (math.fsum(v**q) / n**2) ** (1.0 / q)
