"""Convergence sweeps, rate fits and matched-budget comparisons.

Errors of trigonometric test functions under the Fibonacci rule are computed
from the dual lattice rather than by summing over the nodes, which keeps
sweeps up to ``n = 28`` cheap.  Other rules are applied node by node.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.fft

from .cubature import (CubatureRule, Integrand, apply_rule, exp_sum_integrand, fibonacci_nonperiodic,
                       fibonacci_qmc)
from .errors import DegenerateFit, MissingExactIntegral, RangeGuard
from .fiblattice import dual_enumerate_arrays, fibonacci
from .fooling import FoolingConfig, NodeSet, build_witness, node_set_from_spec
from .smolyak import smolyak_cubature
from .splines import BesovParams

KOROBOV_TRUNCATION = 4096
MIN_FIT_POINTS = 6


# --------------------------------------------------------------------------
# Test functions


@dataclass(frozen=True)
class KorobovFunction:
    """``prod_i (1 + 2 sum_{k=1}^{K} k^{-r} cos(2 pi k (x_i + shift_i)))``.

    Each factor has Fourier coefficients ``|k|^{-r} e^{2 pi i k shift}`` for
    ``0 < |k| <= K`` and 1 at ``k = 0``; the integral is 1.
    """

    r: float = 2.0
    K: int = KOROBOV_TRUNCATION
    shift: tuple[float, float] = (0.0, 0.0)

    dim = 2
    exact_integral = 1.0

    @property
    def name(self) -> str:
        base = f"korobov:r={self.r:g},K={self.K}"
        if any(self.shift):
            base += ",shift=" + ";".join(f"{s:g}" for s in self.shift)
        return base

    def _coefficients(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        k = np.arange(-self.K, self.K + 1)
        a = np.abs(k).astype(float)
        a[self.K] = 1.0
        c = a ** (-self.r) * np.exp(2j * np.pi * k * self.shift[axis])
        return k, c

    def univariate(self, x: np.ndarray, axis: int = 0, chunk: int = 1 << 22) -> np.ndarray:
        """One factor at the points ``x``, summed directly over unique values."""
        uniq, inv = np.unique(np.asarray(x, dtype=float), return_inverse=True)
        k = np.arange(1, self.K + 1)
        w = k ** (-float(self.r))
        out = np.empty(uniq.size)
        step = max(1, chunk // self.K)
        for i in range(0, uniq.size, step):
            t = uniq[i:i + step, None] + self.shift[axis]
            out[i:i + step] = 1.0 + 2.0 * (np.cos(2 * np.pi * k * t) @ w)
        return out[inv.ravel()]

    def table(self, M: int, axis: int = 0) -> np.ndarray:
        """The factor at ``j / M`` for ``j = 0..M-1``, by folding the
        coefficients modulo ``M`` and one inverse FFT."""
        k, c = self._coefficients(axis)
        folded = np.zeros(M, dtype=complex)
        np.add.at(folded, k % M, c)
        return (scipy.fft.ifft(folded) * M).real

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return self.univariate(pts[:, 0], 0) * self.univariate(pts[:, 1], 1)

    def dual_sum(self, n: int) -> float:
        """Fibonacci error: the coefficient sum over ``L(n)`` minus the origin."""
        k1, k2 = dual_enumerate_arrays(n, self.K)
        k1 = k1.astype(np.int64)
        k2 = k2.astype(np.int64)
        w1 = np.maximum(np.abs(k1), 1).astype(float) ** (-self.r)
        w2 = np.maximum(np.abs(k2), 1).astype(float) ** (-self.r)
        phase = np.cos(2 * np.pi * (k1 * self.shift[0] + k2 * self.shift[1]))
        return math.fsum(w1 * w2 * phase)

    def rule_error(self, rule: CubatureRule) -> float:
        """``rule(f) - 1`` using exact node tables modulo the denominator."""
        t1 = self.table(rule.den, 0)
        t2 = self.table(rule.den, 1)
        vals = t1[rule.num[:, 0] % rule.den] * t2[rule.num[:, 1] % rule.den]
        return math.fsum(np.concatenate([rule.weights * vals, [-1.0]]))


def korobov_battery(r: float = 2.0, K: int = KOROBOV_TRUNCATION) -> list[KorobovFunction]:
    """Unshifted, half-period shifted and generically shifted members."""
    return [KorobovFunction(r, K, s) for s in ((0.0, 0.0), (0.5, 0.5), (1 / 3, 1 / 5))]


def bilinear_integrand() -> Integrand:
    """``1 + 2x - 3y + 5xy``, integral ``7/4``."""
    return Integrand(2, lambda p: 1 + 2 * p[:, 0] - 3 * p[:, 1] + 5 * p[:, 0] * p[:, 1], 1.75,
                     name="bilinear")


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, text.split(",")):
        key, _, val = part.partition("=")
        out[key.strip()] = val.strip()
    return out


@dataclass(frozen=True)
class WitnessSpec:
    """``witness:<kind>/<nodes>/<a,p,t>/<r>``; an empty node part means the
    nodes of whatever rule the witness is paired with."""

    kind: str
    nodes: str
    params: BesovParams
    r: int

    @property
    def name(self) -> str:
        p = self.params
        return f"witness:{self.kind}/{self.nodes}/{p.alpha:g},{p.p:g},{p.theta:g}/{self.r}"

    def build(self, nodes: NodeSet | None = None):
        if nodes is None:
            if not self.nodes:
                raise ValueError("witness spec needs a node set")
            nodes = node_set_from_spec(self.nodes)
        w = build_witness(self.kind, nodes, FoolingConfig(nodes.d, self.r, self.params))
        return w, nodes


def parse_integrand(spec: str):
    """Built-in test functions by name.

    ``korobov:r=<r>[,K=<trunc>][,shift=<a>;<b>]``, ``battery:r=<r>[,K=<trunc>]``,
    ``expsum``, ``bilinear``, ``const``, ``witness:<kind>/<nodes>/<a,p,t>/<r>``.
    Returns a callable integrand, a list of them (battery) or a
    :class:`WitnessSpec`.
    """
    name, _, arg = spec.partition(":")
    if name == "korobov":
        kv = _kv(arg)
        shift = tuple(float(Fraction(v)) for v in kv["shift"].split(";")) if "shift" in kv else (0.0, 0.0)
        return KorobovFunction(float(kv.get("r", 2)), int(kv.get("K", KOROBOV_TRUNCATION)), shift)
    if name == "battery":
        kv = _kv(arg)
        return korobov_battery(float(kv.get("r", 2)), int(kv.get("K", KOROBOV_TRUNCATION)))
    if name == "expsum":
        return exp_sum_integrand()
    if name == "bilinear":
        return bilinear_integrand()
    if name == "const":
        c = float(arg) if arg else 1.0
        return Integrand(2, lambda p: np.full(p.shape[0], c), c, name=f"const:{c:g}")
    if name == "witness":
        parts = arg.split("/")
        if len(parts) != 4:
            raise ValueError("witness spec is witness:<kind>/<nodes>/<a,p,t>/<r>")
        kind, nodes, params, r = parts
        return WitnessSpec(kind, nodes, BesovParams.parse(params), int(r))
    raise ValueError(f"unknown integrand {spec!r}")


# --------------------------------------------------------------------------
# Rules


def parse_rule(spec: str) -> CubatureRule:
    """``fib:<n>``, ``fibnp:<n>`` or ``smolyak:<d>,<m>`` (d = 2)."""
    family, _, arg = spec.partition(":")
    if family == "fib":
        return fibonacci_qmc(int(arg))
    if family == "fibnp":
        return fibonacci_nonperiodic(int(arg))
    if family == "smolyak":
        d, m = (int(v) for v in arg.split(","))
        if d != 2:
            raise RangeGuard("Smolyak cubature is implemented for d = 2")
        return smolyak_cubature(m)
    raise ValueError(f"unknown rule {spec!r}")


def rule_for(family: str, index: int) -> CubatureRule:
    return parse_rule(f"smolyak:2,{index}" if family == "smolyak" else f"{family}:{index}")


def integration_error(rule: CubatureRule, f, use_dual: bool = True) -> float:
    """Signed error ``rule(f) - I(f)``.

    Fibonacci errors of Korobov functions come from the dual lattice unless
    ``use_dual`` is false.  Witness specs are built on the rule's own nodes.
    """
    if isinstance(f, KorobovFunction):
        if use_dual and rule.label.startswith("fib:"):
            return f.dual_sum(int(rule.label.split(":")[1]))
        return f.rule_error(rule)
    if isinstance(f, WitnessSpec):
        w, _ = f.build(NodeSet(rule.num, rule.den))
        vals = w(rule.points)
        return math.fsum(rule.weights * vals) - w.exact_integral
    if getattr(f, "exact_integral", None) is None:
        raise MissingExactIntegral(f"integrand {getattr(f, 'name', f)!r} has no exact integral")
    err = apply_rule(rule, f) - f.exact_integral
    return err.real if isinstance(err, complex) else err


def battery_error(rule: CubatureRule, fs) -> float:
    """Largest absolute error over one integrand or a list of them."""
    if not isinstance(fs, (list, tuple)):
        fs = [fs]
    return max(abs(integration_error(rule, f)) for f in fs)


# --------------------------------------------------------------------------
# Sweeps and fits


@dataclass(frozen=True)
class ExperimentSpec:
    rule: str
    fn: str
    lo: int
    hi: int
    besov: str | None = None
    fit: bool = False
    pin_beta: float | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.rule not in ("fib", "fibnp", "smolyak"):
            raise ValueError(f"unknown rule family {self.rule!r}")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.hi < self.lo:
            raise RangeGuard(f"empty range {self.lo}:{self.hi}")
        if self.fit and self.hi - self.lo + 1 < MIN_FIT_POINTS:
            raise RangeGuard(f"a fit needs at least {MIN_FIT_POINTS} sweep points")

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepRow:
    index: int
    N: int
    error: float


@dataclass(frozen=True)
class RateFit:
    alpha_hat: float
    beta_hat: float
    intercept: float
    residual: float
    model: str = "log e = c - a*log N + b*log log N"


def converge(spec: ExperimentSpec) -> list[SweepRow]:
    """Absolute errors over the index range, in index order."""
    f = parse_integrand(spec.fn)
    rows = []
    for i in range(spec.lo, spec.hi + 1):
        if spec.rule == "fib" and isinstance(f, (KorobovFunction, list)):
            # node count only; the error comes from the dual lattice
            N = fibonacci(i).b_n
            err = battery_error(_FibLabel(i), f)
        else:
            rule = rule_for(spec.rule, i)
            N = rule.size
            err = battery_error(rule, f)
        rows.append(SweepRow(i, N, err))
    return rows


class _FibLabel:
    """Stand-in for a Fibonacci rule when only its label is needed."""

    def __init__(self, n: int):
        self.label = f"fib:{n}"


def fit_rate(rows: Sequence, pin_beta: float | None = None, pin_alpha: float | None = None) -> RateFit:
    """Least squares for ``log e = c - a log N + b log log N``.

    With ``pin_beta`` the slope ``a`` and intercept are fitted with ``b``
    fixed; with ``pin_alpha`` the roles swap; otherwise all three are fitted.
    """
    pairs = [(r.N, r.error) if isinstance(r, SweepRow) else (r[0], r[1]) for r in rows]
    if len(pairs) < MIN_FIT_POINTS:
        raise DegenerateFit(f"need at least {MIN_FIT_POINTS} rows, got {len(pairs)}")
    N = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(e <= 0) or np.any(N <= math.e):
        raise DegenerateFit("errors must be positive and node counts above e")
    if math.log10(e.max() / e.min()) < 2.0:
        raise DegenerateFit("errors span less than two decades")
    y = np.log(e)
    lN, llN = np.log(N), np.log(np.log(N))
    ones = np.ones_like(y)
    if pin_beta is not None and pin_alpha is not None:
        raise ValueError("pin at most one exponent")
    if pin_beta is not None:
        A = np.column_stack([ones, -lN])
        (c, a), *_ = np.linalg.lstsq(A, y - pin_beta * llN, rcond=None)
        b = pin_beta
    elif pin_alpha is not None:
        A = np.column_stack([ones, llN])
        (c, b), *_ = np.linalg.lstsq(A, y + pin_alpha * lN, rcond=None)
        a = pin_alpha
    else:
        A = np.column_stack([ones, -lN, llN])
        (c, a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (c - a * lN + b * llN)
    return RateFit(float(a), float(b), float(c), float(np.sqrt(np.mean(resid**2))))


# --------------------------------------------------------------------------
# Matched budgets


@dataclass(frozen=True)
class BudgetRow:
    budget: int
    fib_n: int
    fib_nodes: int
    fib_error: float
    smolyak_m: int
    smolyak_nodes: int
    smolyak_error: float

    @property
    def ratio(self) -> float:
        return self.smolyak_error / self.fib_error if self.fib_error else math.inf


_smolyak_sizes: dict[int, int] = {}


def _smolyak_size(m: int) -> int:
    if m not in _smolyak_sizes:
        _smolyak_sizes[m] = smolyak_cubature(m).size
    return _smolyak_sizes[m]


def compare_budget(fn, budgets: Sequence[int]) -> list[BudgetRow]:
    """Largest Fibonacci ``n`` and Smolyak ``m`` within each node budget.

    ``fn`` is an integrand spec string, an integrand or a list of them; with
    a list, each column holds the largest absolute error over the list.
    """
    fs = parse_integrand(fn) if isinstance(fn, str) else fn
    out = []
    for B in budgets:
        B = int(B)
        if B < 3:
            raise RangeGuard(f"budget {B} is below the smallest rule size 3")
        n = 1
        while fibonacci(n + 1).b_n <= B:
            n += 1
        m = 0
        while _smolyak_size(m + 1) <= B:
            m += 1
        fib_rule = fibonacci_qmc(n) if not _all_korobov(fs) else _FibLabel(n)
        out.append(BudgetRow(B, n, fibonacci(n).b_n, battery_error(fib_rule, fs),
                             m, _smolyak_size(m), battery_error(smolyak_cubature(m), fs)))
    return out


def _all_korobov(fs) -> bool:
    items = fs if isinstance(fs, (list, tuple)) else [fs]
    return all(isinstance(f, KorobovFunction) for f in items)


# --------------------------------------------------------------------------
# Output


def _emit(header: list[str], rows: list[list], fmt: str, footer: dict | None = None) -> str:
    buf = io.StringIO()
    if fmt == "json":
        for row in rows:
            buf.write(json.dumps(dict(zip(header, row))) + "\n")
        if footer:
            buf.write(json.dumps(footer) + "\n")
        return buf.getvalue()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if footer:
        buf.write("# " + " ".join(f"{k}={v}" for k, v in footer.items()) + "\n")
    return buf.getvalue()


def sweep_report(spec: ExperimentSpec, rows: list[SweepRow], fit: RateFit | None = None) -> str:
    h = spec.digest()
    body = [[h, spec.rule, spec.fn, r.index, r.N, repr(r.error)] for r in rows]
    footer = None
    if fit is not None:
        footer = {"spec": h, "alpha_hat": repr(fit.alpha_hat), "beta_hat": repr(fit.beta_hat),
                  "intercept": repr(fit.intercept), "residual": repr(fit.residual)}
    return _emit(["spec", "rule", "fn", "index", "N", "error"], body, spec.fmt, footer)


def budget_report(fn: str, rows: list[BudgetRow], fmt: str = "csv") -> str:
    h = hashlib.sha256(json.dumps({"fn": fn, "budgets": [r.budget for r in rows]}).encode()).hexdigest()[:16]
    body = [[h, fn, r.budget, r.fib_n, r.fib_nodes, repr(r.fib_error), r.smolyak_m, r.smolyak_nodes,
             repr(r.smolyak_error), repr(r.ratio)] for r in rows]
    header = ["spec", "fn", "budget", "fib_n", "fib_nodes", "fib_error", "smolyak_m", "smolyak_nodes",
              "smolyak_error", "ratio"]
    return _emit(header, body, fmt)


def run_experiment(spec: ExperimentSpec, fitter: Callable = fit_rate) -> str:
    rows = converge(spec)
    fit = fitter(rows, pin_beta=spec.pin_beta) if spec.fit else None
    return sweep_report(spec, rows, fit)
