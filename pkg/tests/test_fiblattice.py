import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixcub.errors import OverflowGuard, RangeGuard
from mixcub.fiblattice import (DualVector, dual_coordinates, dual_enumerate, dual_enumerate_arrays,
                               dual_membership, dual_representation, fib, fibonacci, fibonacci_lattice,
                               hyperbolic_weight, lattice_floats, lattice_numerators, lattice_point,
                               zaremba_min_product)


def brute_zaremba(n):
    b = fib(n)
    best = None
    for k2 in range(-b, b + 1):
        for k1 in range(-b, b + 1):
            if (k1 or k2) and dual_membership((k1, k2), n):
                w = max(1, abs(k1)) * max(1, abs(k2))
                best = w if best is None else min(best, w)
    return best


def box_scan(n, K):
    return [DualVector(k1, k2) for k2 in range(-K, K + 1) for k1 in range(-K, K + 1)
            if (k1 or k2) and dual_membership((k1, k2), n)]


class TestFibonacci:
    def test_initial_values(self):
        assert fibonacci(0).b_n == 1
        assert fibonacci(1).b_n == 1

    def test_index_ten(self):
        assert fibonacci(10).b_n == 89
        assert fibonacci(10).b_prev == 55

    def test_recursion_and_coprime(self):
        for n in range(2, 81):
            fi = fibonacci(n)
            assert fi.b_n == fi.b_prev + fib(n - 2)
            assert math.gcd(fi.b_n, fi.b_prev) == 1

    def test_overflow_guard(self):
        fibonacci(80)
        with pytest.raises(OverflowGuard):
            fibonacci(81)

    def test_negative_index(self):
        with pytest.raises(RangeGuard):
            fibonacci(-1)


class TestLattice:
    def test_n4(self):
        pts = {(p.x, p.y) for p in fibonacci_lattice(4)}
        F = Fraction
        assert pts == {(F(0), F(0)), (F(1, 5), F(3, 5)), (F(2, 5), F(1, 5)), (F(3, 5), F(4, 5)), (F(4, 5), F(2, 5))}

    def test_n2(self):
        pts = [(p.x, p.y) for p in fibonacci_lattice(2)]
        assert pts == [(0, 0), (Fraction(1, 2), Fraction(1, 2))]

    @pytest.mark.parametrize("n", [1, 3, 7, 12, 20])
    def test_mean_x(self, n):
        b = fib(n)
        pts = fibonacci_lattice(n)
        assert sum(p.x for p in pts) / b == Fraction(1, 2) - Fraction(1, 2 * b)

    @pytest.mark.parametrize("n", [3, 9, 18, 25])
    def test_sum_identities(self, n):
        mu, y, b = lattice_numerators(n)
        assert sum(int(v) for v in mu) == sum(int(v) for v in y) == b * (b - 1) // 2

    def test_y_numerators_integer_oracle(self):
        for n in (5, 17, 26, 32):
            mu, y, b = lattice_numerators(n)
            bp = fib(n - 1)
            idx = np.random.default_rng(n).integers(0, b, 200)
            assert all(int(y[i]) == (int(i) * bp) % b for i in idx)

    def test_large_index_numerators_exact(self):
        n = 60
        b, bp = fib(n), fib(n - 1)
        for mu in (1, 2, 12345, b - 1):
            p = lattice_point(n, mu)
            assert p.y == Fraction((mu * bp) % b, b)

    def test_points_distinct_and_in_unit_square(self):
        P = lattice_floats(15)
        assert P.shape == (fib(15), 2)
        assert len({tuple(r) for r in P}) == P.shape[0]
        assert P.min() >= 0 and P.max() < 1

    def test_point_range(self):
        with pytest.raises(RangeGuard):
            lattice_point(5, 8)


class TestDual:
    def test_membership_examples(self):
        assert dual_membership((3, 1), 5)
        assert not dual_membership((1, 0), 5)
        assert dual_membership((8, 0), 5)

    def test_representation_examples(self):
        assert dual_representation(1, 0, 5) == (3, 1)
        assert dual_representation(0, 0, 9) == (0, 0)
        k = dual_representation(1, 1, 5)
        assert k == (1, 3) and dual_membership(k, 5)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(-50, 50), st.integers(-50, 50), st.integers(3, 40))
    def test_forward_inclusion(self, u, v, n):
        assert dual_membership(dual_representation(u, v, n), n)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6), st.integers(3, 60))
    def test_coordinates_round_trip(self, u, v, n):
        assert dual_coordinates(dual_representation(u, v, n), n) == (u, v)

    def test_coordinates_reject_non_members(self):
        with pytest.raises(ValueError):
            dual_coordinates((1, 0), 5)

    def test_enumerate_n5_matches_box_scan(self):
        got = dual_enumerate(5, 4)
        assert got == box_scan(5, 4)
        assert {(3, 1), (1, 3), (-2, 2), (2, -2), (-3, -1), (-1, -3), (4, 4)} <= set(got)
        assert (-5, 1) not in got

    def test_enumerate_n10_empty(self):
        assert dual_enumerate(10, 4) == []

    @pytest.mark.parametrize("n,K", [(3, 7), (6, 9), (8, 25), (11, 40), (13, 3)])
    def test_enumerate_equals_filtered_box(self, n, K):
        assert dual_enumerate(n, K) == box_scan(n, K)

    def test_enumerate_rectangular_box(self):
        k1, k2 = dual_enumerate_arrays(7, 30, 5)
        expected = [(a, c) for c in range(-5, 6) for a in range(-30, 31)
                    if (a or c) and dual_membership((a, c), 7)]
        assert list(zip(k1.tolist(), k2.tolist())) == expected

    def test_enumerate_guard(self):
        with pytest.raises(RangeGuard):
            dual_enumerate(5, 0)

    def test_hyperbolic_weight(self):
        assert hyperbolic_weight(0, 0) == 1
        assert hyperbolic_weight(-3, 4) == 12
        assert list(hyperbolic_weight(np.array([0, 5]), np.array([7, 0]))) == [7, 5]


class TestZaremba:
    def test_n5(self):
        assert zaremba_min_product(5) == (3, (3, 1))

    @pytest.mark.parametrize("n", range(3, 14))
    def test_matches_exhaustive_scan(self, n):
        value, w = zaremba_min_product(n)
        assert value == brute_zaremba(n)
        assert dual_membership(w, n)
        assert hyperbolic_weight(*w) == value

    def test_ratio_window(self):
        for n in range(5, 31):
            value, _ = zaremba_min_product(n)
            assert 0.2 <= value / fib(n) <= 1

    def test_range_guard(self):
        with pytest.raises(RangeGuard):
            zaremba_min_product(2)
        with pytest.raises(RangeGuard):
            zaremba_min_product(46)
