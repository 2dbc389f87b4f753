"""Sparse bivariate trigonometric polynomials and their Fibonacci errors.

A Fibonacci rule integrates ``exp(2 pi i k.x)`` to 1 when ``k`` lies in the
dual lattice ``L(n)`` and to 0 otherwise, so the error of the rule on a
trigonometric polynomial is the sum of its nonzero-frequency coefficients on
``L(n)``.  This module computes that sum directly, together with the dyadic
frequency blocks and the Fourier-side Besov quasi-norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import CapExceeded, UnsupportedExponent
from .fiblattice import dual_enumerate_arrays, fibonacci
from .splines import INF, BesovParams, _weighted_lq

CHI_TERM_CAP = 2**20


@dataclass(frozen=True)
class TrigPoly2:
    """``sum_k c_k exp(2 pi i k.x)`` with frequencies ``k`` (rows of ``freqs``)."""

    freqs: np.ndarray  # (M, 2) int64, unique rows
    coefs: np.ndarray  # (M,) complex

    @classmethod
    def from_dict(cls, coeffs: dict) -> "TrigPoly2":
        if not coeffs:
            return cls.zero()
        freqs = np.array([tuple(int(v) for v in k) for k in coeffs], dtype=np.int64).reshape(-1, 2)
        vals = np.array([complex(v) for v in coeffs.values()])
        return cls.from_arrays(freqs, vals)

    @classmethod
    def from_arrays(cls, freqs, coefs) -> "TrigPoly2":
        freqs = np.asarray(freqs, dtype=np.int64).reshape(-1, 2)
        coefs = np.asarray(coefs, dtype=complex).ravel()
        if freqs.shape[0] == 0:
            return cls.zero()
        uniq, inv = np.unique(freqs, axis=0, return_inverse=True)
        summed = np.zeros(uniq.shape[0], dtype=complex)
        np.add.at(summed, inv.ravel(), coefs)
        keep = summed != 0
        return cls(uniq[keep], summed[keep])

    @classmethod
    def zero(cls) -> "TrigPoly2":
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=complex))

    @classmethod
    def exponential(cls, k1: int, k2: int, c: complex = 1.0) -> "TrigPoly2":
        return cls.from_arrays([[k1, k2]], [c])

    def to_dict(self) -> dict[tuple[int, int], complex]:
        return {(int(a), int(b)): complex(c) for (a, b), c in zip(self.freqs, self.coefs)}

    def __len__(self) -> int:
        return int(self.coefs.size)

    def __add__(self, other: "TrigPoly2") -> "TrigPoly2":
        return TrigPoly2.from_arrays(np.concatenate([self.freqs, other.freqs]),
                                     np.concatenate([self.coefs, other.coefs]))

    def scaled(self, c: complex) -> "TrigPoly2":
        if c == 0:
            return TrigPoly2.zero()
        return TrigPoly2(self.freqs, self.coefs * c)

    def mean(self) -> complex:
        """``I(f)``, the zero-frequency coefficient."""
        hit = np.flatnonzero((self.freqs[:, 0] == 0) & (self.freqs[:, 1] == 0))
        return complex(self.coefs[hit[0]]) if hit.size else 0j

    def max_freq(self) -> tuple[int, int]:
        if len(self) == 0:
            return 0, 0
        a = np.abs(self.freqs).max(axis=0)
        return int(a[0]), int(a[1])

    def is_real(self) -> bool:
        d = self.to_dict()
        return all(abs(d.get((-a, -b), 0) - np.conj(c)) <= 1e-15 * max(1.0, abs(c)) for (a, b), c in d.items())

    def __call__(self, points: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0], dtype=complex)
        step = max(1, chunk // max(1, len(self)))
        for i in range(0, pts.shape[0], step):
            phase = pts[i:i + step] @ self.freqs.T.astype(float)
            out[i:i + step] = np.exp(2j * np.pi * phase) @ self.coefs
        return out

    def grid_values(self, M1: int, M2: int) -> np.ndarray:
        """Values at ``(a/M1, b/M2)``; requires ``M_i > 2 max |k_i|``."""
        K1, K2 = self.max_freq()
        if M1 <= 2 * K1 or M2 <= 2 * K2:
            raise ValueError("grid too coarse for the polynomial's bandwidth")
        C = np.zeros((M1, M2), dtype=complex)
        np.add.at(C, (self.freqs[:, 0] % M1, self.freqs[:, 1] % M2), self.coefs)
        return scipy.fft.ifft2(C) * (M1 * M2)


def lp_norms(poly: TrigPoly2, ps, oversample: int = 4) -> dict[float, float]:
    """``||poly||_p`` on the torus for each ``p`` in ``ps``, by the rectangle
    rule on one uniform grid with at least ``oversample`` times the Nyquist
    density."""
    ps = list(ps)
    if len(poly) == 0:
        return {p: 0.0 for p in ps}
    K1, K2 = poly.max_freq()
    M1 = scipy.fft.next_fast_len(max(256, oversample * (2 * K1 + 1)))
    M2 = scipy.fft.next_fast_len(max(256, oversample * (2 * K2 + 1)))
    vals = np.abs(poly.grid_values(M1, M2))
    return {p: float(vals.max()) if p == INF else float(np.mean(vals**p)) ** (1.0 / p) for p in ps}


def lp_norm(poly: TrigPoly2, p: float, oversample: int = 4) -> float:
    return lp_norms(poly, [p], oversample)[p]


def fib_error_exact(poly, n: int) -> complex:
    """``Phi_n(poly) - I(poly)`` as the sum of the coefficients on ``L(n) \\ {0}``.

    Objects other than :class:`TrigPoly2` may supply their own ``dual_sum(n)``.
    """
    if not isinstance(poly, TrigPoly2):
        return poly.dual_sum(n)
    fi = fibonacci(n)
    k1, k2 = poly.freqs[:, 0], poly.freqs[:, 1]
    on = ((k1 + fi.b_prev * k2) % fi.b_n == 0) & ((k1 != 0) | (k2 != 0))
    return complex(math.fsum(poly.coefs[on].real), math.fsum(poly.coefs[on].imag))


# --------------------------------------------------------------------------
# Dyadic decomposition of the frequency domain


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity transition from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffSystem:
    """A partition of unity ``{phi_j}`` on the line.

    ``sharp``: ``phi_0`` is the indicator of ``|x| <= 1`` and ``phi_j`` the
    indicator of ``2^{j-1} < |x| <= 2^j``.
    ``smooth``: ``phi_0 = 1`` on ``[-1, 1]``, a smooth ramp down on
    ``1 < |x| < 2``, and ``phi_j(x) = phi_0(2^-j x) - phi_0(2^{1-j} x)``.
    """

    kind: str = "sharp"

    def __post_init__(self):
        if self.kind not in ("sharp", "smooth"):
            raise ValueError(f"unknown cutoff system {self.kind!r}")

    def phi0(self, x) -> np.ndarray:
        ax = np.abs(np.asarray(x, dtype=float))
        if self.kind == "sharp":
            return (ax <= 1).astype(float)
        return np.where(ax <= 1, 1.0, np.where(ax >= 2, 0.0, _smooth_step(2.0 - ax)))

    def phi(self, j: int, x) -> np.ndarray:
        if j < 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        if j == 0:
            return self.phi0(x)
        xa = np.asarray(x, dtype=float)
        if self.kind == "sharp":
            ax = np.abs(xa)
            return ((ax > 2.0 ** (j - 1)) & (ax <= 2.0**j)).astype(float)
        return self.phi0(xa / 2.0**j) - self.phi0(xa / 2.0 ** (j - 1))

    def max_level(self, K: int) -> int:
        """Largest ``j`` with ``phi_j`` nonzero on ``|x| <= K``."""
        top = max(0, math.ceil(math.log2(K))) if K > 1 else 0
        return top if self.kind == "sharp" else top + 1


SHARP = CutoffSystem("sharp")
SMOOTH = CutoffSystem("smooth")


def sharp_level(k) -> np.ndarray:
    """Sharp band index of integer frequencies: 0 for ``|k| <= 1``, else
    ``ceil(log2 |k|)``."""
    ak = np.abs(np.asarray(k, dtype=np.int64))
    out = np.zeros(ak.shape, dtype=np.int64)
    big = ak > 1
    # bit length of (|k| - 1) == ceil(log2 |k|) for |k| >= 2
    v = ak[big] - 1
    bits = np.zeros(v.shape, dtype=np.int64)
    while np.any(v > 0):
        bits += v > 0
        v = v >> 1
    out[big] = bits
    return out


def dyadic_block(poly: TrigPoly2, j: tuple[int, int], system: CutoffSystem = SHARP) -> TrigPoly2:
    """``delta_j(poly)``: coefficients multiplied by ``phi_{j1}(k1) phi_{j2}(k2)``."""
    if min(j) < 0 or len(poly) == 0:
        return TrigPoly2.zero()
    w = system.phi(j[0], poly.freqs[:, 0]) * system.phi(j[1], poly.freqs[:, 1])
    keep = w != 0
    return TrigPoly2(poly.freqs[keep], poly.coefs[keep] * w[keep])


def block_levels(poly: TrigPoly2, system: CutoffSystem = SHARP) -> list[tuple[int, int]]:
    """All block indices that can be nonzero for ``poly``, in row-major order."""
    if len(poly) == 0:
        return []
    if system.kind == "sharp":
        lv = np.unique(np.column_stack([sharp_level(poly.freqs[:, 0]), sharp_level(poly.freqs[:, 1])]), axis=0)
        return [(int(a), int(b)) for a, b in lv]
    K1, K2 = poly.max_freq()
    return [(a, b) for a in range(system.max_level(K1) + 1) for b in range(system.max_level(K2) + 1)]


def fourier_besov_norm(poly: TrigPoly2, params: BesovParams, system: CutoffSystem = SHARP) -> float:
    """``(sum_j 2^{|j|_1 alpha theta} ||delta_j(poly)||_p^theta)^{1/theta}``."""
    if params.p < 1:
        raise UnsupportedExponent(f"Fourier-side norms need p >= 1, got {params.p}")
    ws, ns = [], []
    for j in block_levels(poly, system):
        block = dyadic_block(poly, j, system)
        if len(block) == 0:
            continue
        ws.append(2.0 ** (sum(j) * params.alpha))
        ns.append(lp_norm(block, params.p))
    return _weighted_lq(ws, ns, params.theta)


# --------------------------------------------------------------------------
# The chi_s polynomials


def v0_profile(t) -> np.ndarray:
    """1 on ``|t| <= 2``, ``2 - |t|/2`` on ``2 < |t| <= 4``, 0 beyond."""
    at = np.abs(np.asarray(t, dtype=float))
    return np.where(at <= 2, 1.0, np.where(at <= 4, 2.0 - at / 2.0, 0.0))


def v_profile(s: int, t) -> np.ndarray:
    """``v_0`` for ``s = 0``; ``v_0(t/2^s) - v_0(8 t/2^s)`` for ``s >= 1``."""
    ta = np.asarray(t, dtype=float)
    if s == 0:
        return v0_profile(ta)
    return v0_profile(ta / 2.0**s) - v0_profile(ta / 2.0 ** (s - 3))


def _chi_box(s: tuple[int, int]) -> tuple[int, int]:
    return tuple(4 if si == 0 else 2 ** (si + 2) for si in s)


def build_chi_s(n: int, s: tuple[int, int]) -> TrigPoly2:
    """``chi_s = sum_{k in L(n)} v_{s1}(k1) v_{s2}(k2) exp(2 pi i k.x)``."""
    K1, K2 = _chi_box(s)
    b = fibonacci(n).b_n
    if (2 * K1 + 1) * (2 * K2 + 1) > CHI_TERM_CAP * b:
        raise CapExceeded(f"chi_s enumeration for s={s}, n={n} exceeds the term cap")
    k1, k2 = dual_enumerate_arrays(n, K1, K2)
    k1 = np.append(k1, 0).astype(np.int64)
    k2 = np.append(k2, 0).astype(np.int64)
    c = v_profile(s[0], k1) * v_profile(s[1], k2)
    keep = c != 0
    return TrigPoly2.from_arrays(np.column_stack([k1[keep], k2[keep]]), c[keep])


def chi_norm_check(n: int, s: tuple[int, int], p: float) -> tuple[float, float]:
    """``(||chi_s||_p, (2^{|s|_1} / b_n)^{1 - 1/p})``."""
    return chi_norm_checks(n, s, [p])[p]


def chi_norm_checks(n: int, s: tuple[int, int], ps) -> dict[float, tuple[float, float]]:
    """:func:`chi_norm_check` for several exponents, sharing one grid evaluation."""
    chi = build_chi_s(n, s)
    b = fibonacci(n).b_n
    norms = lp_norms(chi, ps)
    return {p: (norms[p], (2.0 ** sum(s) / b) ** (1.0 if p == INF else 1.0 - 1.0 / p)) for p in norms}
