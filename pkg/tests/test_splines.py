import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from mixcub.splines import (INF, BesovParams, BSplineAtom, CardinalBSpline, FaberCoefficients,
                            besov_norm_faber, bspline_quasinorm, eval_atom, eval_bspline, faber_decompose,
                            faber_hat, faber_hat_integral, faber_reconstruct, shift_range, spline_lp_norms,
                            stability_check, surplus_stencil)


def smooth_f(p):
    x, y = p[:, 0], p[:, 1]
    return np.exp(x * np.sin(3 * y)) + np.cos(2 * x + y * y)


def dyadic_grid(res):
    t = np.arange(2**res + 1) / 2**res
    X, Y = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


class TestBSpline:
    def test_hat_peak(self):
        assert eval_bspline(2, 1.0) == 1.0

    @pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
    def test_support(self, r):
        assert np.all(eval_bspline(r, np.array([-1e-9, -3.0, r + 1e-9, r + 2.0])) == 0.0)

    def test_quadratic_midpoint(self):
        assert eval_bspline(3, 1.5) == pytest.approx(0.75, abs=1e-15)

    @pytest.mark.parametrize("r", [2, 3, 4, 6])
    def test_against_scipy_basis_element(self, r):
        x = np.linspace(-0.5, r + 0.5, 997)
        ref = BSpline.basis_element(np.arange(r + 1), extrapolate=False)(x)
        assert np.allclose(eval_bspline(r, x), np.nan_to_num(ref), atol=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.floats(-20, 20, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-6))
    def test_partition_of_unity(self, r, x):
        # tiny |x| is excluded: x - s then rounds onto a knot
        total = sum(eval_bspline(r, x - s) for s in range(math.floor(x) - r, math.floor(x) + 2))
        assert total == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_unit_integral_and_norms(self, r):
        N = CardinalBSpline(r)
        assert N.lq_norm(1) == pytest.approx(1.0, abs=1e-13)
        if r == 1:
            assert N.lq_norm(2) == pytest.approx(1.0, abs=1e-13)
            return
        x = np.linspace(0, r, 200001)
        assert N.lq_norm(2) == pytest.approx(math.sqrt(np.trapezoid(N(x) ** 2, x)), rel=1e-7)
        assert N.lq_norm(INF) == N.peak

    def test_peaks(self):
        assert CardinalBSpline(2).peak == 1.0
        assert CardinalBSpline(3).peak == 0.75


class TestAtom:
    def test_peak(self):
        assert eval_atom(BSplineAtom((0, 0), (0, 0), 2), np.array([1.0, 1.0])) == 1.0

    @pytest.mark.parametrize("k,s,r", [((1, 2), (0, 1), 2), ((3, 0), (2, 0), 3), ((2, 2), (1, 0), 4)])
    def test_integral(self, k, s, r):
        atom = BSplineAtom(k, s, r)
        (a1, b1), (a2, b2) = atom.support()
        n = 1024
        x = a1 + (b1 - a1) * (np.arange(n) + 0.5) / n
        y = a2 + (b2 - a2) * (np.arange(n) + 0.5) / n
        X, Y = np.meshgrid(x, y, indexing="ij")
        q = eval_atom(atom, np.column_stack([X.ravel(), Y.ravel()])).sum() * (b1 - a1) * (b2 - a2) / n**2
        assert q == pytest.approx(atom.integral, rel=1e-6)
        assert atom.integral == 2.0 ** -sum(k)

    def test_vanishes_outside_support(self):
        atom = BSplineAtom((2, 1), (1, 0), 2)
        pts = np.array([[0.25, 0.3], [0.75, 0.3], [0.5, 1.0], [0.1, 0.5], [0.9, 0.9]])
        assert np.all(eval_atom(atom, pts) == 0.0)

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            eval_atom(BSplineAtom((1, 1), (0, 0), 2), np.zeros((3, 3)))


class TestFaber:
    def test_bump_coefficient(self):
        c = faber_decompose(lambda p: p[:, 0] * (1 - p[:, 0]) * p[:, 1] * (1 - p[:, 1]), 2)
        assert c.levels[(0, 0)][0, 0] == pytest.approx(1 / 16, abs=1e-16)
        assert np.all(c.levels[(-1, -1)] == 0)

    def test_bilinear_only_corner_level(self):
        f = lambda p: 2 - p[:, 0] + 3 * p[:, 1] - 4 * p[:, 0] * p[:, 1]
        c = faber_decompose(f, 3)
        for j, D in c.items():
            if j != (-1, -1):
                assert np.all(np.abs(D) < 1e-15)
        assert c.levels[(-1, -1)].tolist() == [[2, 5], [1, 0]]

    def test_level_shapes(self):
        c = faber_decompose(smooth_f, 3)
        for (j1, j2), D in c.items():
            assert D.shape == (2 if j1 == -1 else 2**j1, 2 if j2 == -1 else 2**j2)
        assert len(c.levels) == 25

    @pytest.mark.parametrize("J", [0, 1, 3, 5])
    def test_reconstruct_interpolates(self, J):
        c = faber_decompose(smooth_f, J)
        P = dyadic_grid(J + 1)
        assert np.max(np.abs(faber_reconstruct(c, P) - smooth_f(P))) <= 1e-12

    def test_zero_coefficients(self):
        c = faber_decompose(lambda p: np.zeros(p.shape[0]), 2)
        P = np.random.default_rng(1).random((50, 2))
        assert np.all(faber_reconstruct(c, P) == 0)

    def test_xy_reproduced_everywhere(self):
        c = faber_decompose(lambda p: p[:, 0] * p[:, 1], 0)
        P = np.random.default_rng(2).random((200, 2))
        assert np.allclose(faber_reconstruct(c, P), P[:, 0] * P[:, 1], atol=1e-15)

    def test_stencil_and_hat_integrals(self):
        assert surplus_stencil(-1, 1) == [(1.0, 1.0)]
        assert surplus_stencil(1, 1) == [(0.5, -0.5), (0.75, 1.0), (1.0, -0.5)]
        for j in range(-1, 6):
            for m in range(2 if j == -1 else 2**j):
                x = np.linspace(0, 1, 2**12 + 1)
                assert np.trapezoid(faber_hat(j, m, x), x) == pytest.approx(faber_hat_integral(j), abs=1e-12)

    def test_hierarchical_surplus_oracle(self):
        # direct scalar formula for a coefficient with both levels >= 0
        j, m = (2, 1), (3, 0)
        c = faber_decompose(smooth_f, 3)
        def val(x, y):
            return float(smooth_f(np.array([[x, y]]))[0])
        h1, h2 = 2.0 ** -j[0], 2.0 ** -j[1]
        w = [(0, -0.5), (0.5, 1.0), (1, -0.5)]
        ref = sum(a * b * val((m[0] + u) * h1, (m[1] + v) * h2) for u, a in w for v, b in w)
        assert c.levels[j][m] == pytest.approx(ref, abs=1e-14)


PARAMS = [BesovParams(1.5, 2, 2), BesovParams(2, 1, INF), BesovParams(0.8, INF, 1), BesovParams(1.2, 0.5, 0.7)]


class TestNorms:
    @pytest.mark.parametrize("params", PARAMS)
    def test_homogeneity(self, params):
        c = faber_decompose(smooth_f, 3)
        base = besov_norm_faber(c, params)
        for s in (-3.0, 0.25, 7.0):
            assert besov_norm_faber(c.scaled(s), params) == pytest.approx(abs(s) * base, rel=1e-14)

    @pytest.mark.parametrize("params", PARAMS)
    def test_single_coefficient(self, params):
        c = FaberCoefficients(0, {(0, 0): np.array([[1.0]])})
        assert besov_norm_faber(c, params) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("params", PARAMS)
    @pytest.mark.parametrize("j", [(0, 3), (2, 2), (5, 1), (-1, 4)])
    def test_scaled_hat_has_unit_norm(self, params, j):
        a, p = params.alpha, params.p
        lvl = sum(max(v, 0) for v in j)
        D = np.zeros((2 if j[0] == -1 else 2 ** j[0], 2 ** j[1]))
        D[0, -1] = 2.0 ** (-lvl * (a - 1.0 / p))
        assert besov_norm_faber(FaberCoefficients(5, {j: D}), params) == pytest.approx(1.0, rel=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from(PARAMS))
    def test_quasi_triangle(self, seed, params):
        rng = np.random.default_rng(seed)
        f = faber_decompose(lambda p: np.sin(rng.integers(1, 9) * p[:, 0] + p[:, 1] ** 2), 3)
        g = faber_decompose(lambda p: np.exp(-rng.random() * p[:, 1]) * p[:, 0] ** 3, 3)
        const = 2.0 ** max(1.0, 1.0 / params.p, 1.0 / params.theta)
        lhs = besov_norm_faber(f + g, params)
        assert lhs <= const * (besov_norm_faber(f, params) + besov_norm_faber(g, params)) + 1e-12

    def test_quasinorm_one_term(self):
        assert bspline_quasinorm([((0, 0), (0, 0), 1.0)], BesovParams(2, 2, 2)) == 1.0

    @pytest.mark.parametrize("params", PARAMS)
    def test_quasinorm_homogeneous(self, params):
        terms = [((1, 2), (0, 1), 0.3), ((1, 2), (1, 1), -0.7), ((3, 0), (2, 0), 1.1)]
        base = bspline_quasinorm(terms, params)
        scaled = bspline_quasinorm([(k, s, -4 * c) for k, s, c in terms], params)
        assert scaled == pytest.approx(4 * base, rel=1e-14)

    @pytest.mark.parametrize("alpha,p", [(2.0, 2.0), (1.5, 1.0), (0.7, 3.0)])
    @pytest.mark.parametrize("k", [(3, 0), (2, 2), (1, 4)])
    def test_quasinorm_full_level(self, alpha, p, k):
        terms = [(k, (a, b), 1.0) for a in range(2 ** k[0]) for b in range(2 ** k[1])]
        got = bspline_quasinorm(terms, BesovParams(alpha, p, p))
        assert got == pytest.approx(2.0 ** (alpha * sum(k)), rel=1e-12)


class TestStability:
    @pytest.mark.parametrize("r,peak", [(2, 1.0), (3, 0.75), (4, 2 / 3)])
    def test_single_coefficient_sup(self, r, peak):
        k = (3, 2)
        a = np.zeros((2 ** k[0] + r - 1, 2 ** k[1] + r - 1))
        a[r - 1 + 2, r - 1 + 1] = 1.0
        lhs, rhs = stability_check(k, a, INF, r)
        assert rhs == 1.0
        assert lhs == pytest.approx(peak**2, abs=1e-12)
        assert CardinalBSpline(r).peak ** 2 <= lhs / rhs <= 1.0

    @pytest.mark.parametrize("r", [2, 3, 4])
    def test_constant_coefficients_sup(self, r):
        k = (2, 3)
        lhs, rhs = stability_check(k, np.ones((2 ** k[0] + r - 1, 2 ** k[1] + r - 1)), INF, r)
        assert lhs == pytest.approx(1.0, abs=1e-12) and rhs == 1.0

    @pytest.mark.parametrize("r", [2, 3])
    def test_single_atom_l1(self, r):
        k = (4, 3)
        a = np.zeros((2 ** k[0] + r - 1, 2 ** k[1] + r - 1))
        a[r - 1 + 5, r - 1 + 2] = 1.0
        lhs, rhs = stability_check(k, a, 1, r)
        assert lhs == pytest.approx(2.0 ** -7, rel=1e-12)
        assert rhs == pytest.approx(2.0 ** -7, rel=1e-15)

    def test_shift_range(self):
        assert shift_range(2, 3).tolist() == [-2, -1, 0, 1, 2, 3]

    def test_univariate_norm_matches_dense(self):
        k, r = (5,), 3
        a = np.random.default_rng(3).standard_normal(2**5 + r - 1)
        norms = spline_lp_norms(k, a, r, [1, 2])
        x = (np.arange(2**16) + 0.5) / 2**16
        g = sum(c * eval_bspline(r, 2**5 * x - s) for c, s in zip(a, shift_range(5, r)))
        assert norms[1] == pytest.approx(np.mean(np.abs(g)), rel=1e-4)
        assert norms[2] == pytest.approx(np.sqrt(np.mean(g**2)), rel=1e-6)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            spline_lp_norms((2,), np.ones(3), 2, [1])


def test_params_parse():
    assert BesovParams.parse("2,1.5,inf") == BesovParams(2.0, 1.5, INF)
