"""Exact recurrence sets, pairwise correlations, eventually-always covers."""

import io
import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recurlab.circle import EarRadius, ExplicitTable, IntervalSet, PowerLaw, circle_dist, ear_log2_delta
from recurlab.errors import ArcBudgetExceeded
from recurlab.exact_sets import (
    branch_ratio_check,
    build_ear_sets,
    build_recurrence_set,
    build_recurrence_set_piecewise,
    compose_branches,
    ear_truncated_A,
    fourier_indicator_coeff,
    pair_correlation,
    petrov_profile,
    petrov_ratio,
    write_pair_correlation_csv,
)
from recurlab.systems import Branch, IntegerCircleMap, PiecewiseLinear


def exact_orbit_point(a: int, n: int, x: Fraction) -> Fraction:
    return (a ** n * x) % 1


class TestRecurrenceSet:
    def test_doubling_n2_explicit(self):
        res = build_recurrence_set(2, 2, Fraction(1, 10))
        assert res.measure == Fraction(1, 5)
        assert res.arc_count == 3
        expected = IntervalSet.from_arcs(
            [
                (Fraction(-1, 30), Fraction(1, 30)),
                (Fraction(1, 3) - Fraction(1, 30), Fraction(1, 3) + Fraction(1, 30)),
                (Fraction(2, 3) - Fraction(1, 30), Fraction(2, 3) + Fraction(1, 30)),
            ]
        )
        assert res.set == expected

    @pytest.mark.parametrize("a", [2, 3, 4, 5])
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_measure_is_twice_radius(self, a, n):
        r = Fraction(1, 4 * n)
        res = build_recurrence_set(a, n, r)
        assert res.measure == 2 * r
        assert res.set.measure == 2 * r
        assert res.arc_count == a ** n - 1

    def test_membership_against_orbit_oracle(self):
        rng = random.Random(7)
        for a, n in [(2, 3), (3, 2), (5, 2)]:
            r = Fraction(1, 12)
            res = build_recurrence_set(a, n, r)
            for _ in range(300):
                x = Fraction(rng.randrange(10**6), 10**6)
                inside = circle_dist(exact_orbit_point(a, n, x), x) < r
                assert res.set.contains(x) == inside

    def test_monotone_in_radius(self):
        small = build_recurrence_set(2, 4, Fraction(1, 40)).set
        large = build_recurrence_set(2, 4, Fraction(1, 20)).set
        assert small.is_subset_of(large)

    def test_skip_materialization_keeps_measure(self):
        res = build_recurrence_set(4, 12, Fraction(1, 48), materialize=False)
        assert res.set is None
        assert res.measure == Fraction(1, 24)
        assert res.arc_count == 4**12 - 1

    def test_budget_is_enforced(self):
        with pytest.raises(ArcBudgetExceeded):
            build_recurrence_set(4, 12, Fraction(1, 48), arc_budget=1000)

    def test_zero_radius_is_empty(self):
        res = build_recurrence_set(2, 3, Fraction(0))
        assert res.measure == 0
        assert res.set.is_empty()

    def test_radius_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            build_recurrence_set(2, 3, Fraction(2, 3))


class TestPiecewiseConstruction:
    @pytest.mark.parametrize("a", [2, 3])
    @pytest.mark.parametrize("n", list(range(1, 8)))
    def test_matches_direct_circle_construction(self, a, n):
        r = Fraction(1, 4 * n)
        direct = build_recurrence_set(a, n, r)
        via_branches = build_recurrence_set_piecewise(IntegerCircleMap(a), n, r)
        assert via_branches.set == direct.set
        assert via_branches.measure == direct.measure

    def test_explicit_three_branch_map(self):
        pw = PiecewiseLinear(
            (
                Branch(Fraction(0), Fraction(1, 3), Fraction(3), Fraction(0)),
                Branch(Fraction(1, 3), Fraction(2, 3), Fraction(3), Fraction(-1)),
                Branch(Fraction(2, 3), Fraction(1), Fraction(3), Fraction(-2)),
            )
        )
        r = Fraction(1, 9)
        res = build_recurrence_set_piecewise(pw, 1, r)
        assert res.set == build_recurrence_set(3, 1, r).set

    def test_branch_composition_counts(self):
        pw = IntegerCircleMap(2).as_piecewise()
        assert len(compose_branches(pw, 1)) == 2
        assert len(compose_branches(pw, 5)) == 32

    def test_line_metric_half_open_interval(self):
        # |2x - x| < r on [0, 1) gives [0, r) plus the right sliver (1-r, 1)
        r = Fraction(1, 8)
        res = build_recurrence_set_piecewise(IntegerCircleMap(2), 1, r, metric="line")
        assert res.measure == 2 * r

    def test_branch_ratio_bound(self):
        # minimal slope 2, smallest branch image 1: bound 2*2/((2-1)*1) = 4
        res = branch_ratio_check(IntegerCircleMap(2), 3, Fraction(1, 12))
        assert res.bound == 4
        assert res.within_bound
        assert res.max_ratio > 0


class TestPairCorrelation:
    def test_known_intersection(self):
        pc = pair_correlation(2, 1, 2, Fraction(1, 10), Fraction(1, 10))
        assert pc.intersection == Fraction(1, 15)
        assert pc.excess == Fraction(1, 15) - Fraction(1, 25)
        assert pc.bound_ok

    def test_intersection_against_interval_sets(self):
        for i, j in [(1, 2), (2, 3), (1, 4), (3, 5), (2, 6)]:
            r_i, r_j = Fraction(1, 4 * i), Fraction(1, 4 * j)
            pc = pair_correlation(2, i, j, r_i, r_j)
            e_i = build_recurrence_set(2, i, r_i).set
            e_j = build_recurrence_set(2, j, r_j).set
            assert pc.intersection == e_i.intersect(e_j).measure

    def test_symmetry(self):
        pc_a = pair_correlation(3, 2, 5, Fraction(1, 8), Fraction(1, 20))
        pc_b = pair_correlation(3, 5, 2, Fraction(1, 20), Fraction(1, 8))
        assert pc_a.intersection == pc_b.intersection

    @pytest.mark.parametrize("a", [2, 3])
    def test_bound_sweep(self, a):
        for j in range(2, 13):
            for i in range(1, j):
                pc = pair_correlation(a, i, j, Fraction(1, 4 * i), Fraction(1, 4 * j))
                assert pc.bound_ok, (a, i, j)

    def test_equal_indices_rejected(self):
        with pytest.raises(ValueError):
            pair_correlation(2, 3, 3, Fraction(1, 10), Fraction(1, 10))

    def test_csv_export(self):
        pairs = [
            pair_correlation(2, i, j, Fraction(1, 4 * i), Fraction(1, 4 * j))
            for j in range(2, 5)
            for i in range(1, j)
        ]
        buf = io.StringIO()
        count = write_pair_correlation_csv(buf, pairs)
        lines = buf.getvalue().strip().splitlines()
        assert count == len(pairs)
        assert len(lines) == len(pairs) + 1
        assert lines[0].startswith("a,i,j,p")


class TestPetrov:
    def test_profile_matches_manual_sum(self):
        seq = PowerLaw(Fraction(1, 4), Fraction(1))
        summary = petrov_ratio(2, seq, 5, 1)
        manual_S = Fraction(0)
        mus = []
        for n in range(1, 6):
            mus.append(2 * seq.exact(n))
        for j in range(1, 6):
            for i in range(1, j):
                pc = pair_correlation(2, i, j, seq.exact(i), seq.exact(j))
                manual_S += pc.intersection - mus[i - 1] * mus[j - 1]
        assert summary.S_N == manual_S
        assert summary.R_N == sum(mus) ** 2

    def test_ratio_profile_certifies_quasi_independence(self):
        # S_N/R_N staying <= 0 is the criterion giving the limsup full measure
        seq = PowerLaw(Fraction(1, 4), Fraction(1))
        profile = petrov_profile(2, seq, [8, 12, 16], 1)
        ratios = [s.ratio for s in profile]
        assert all(r <= 0 for r in ratios)
        magnitudes = [abs(r) for r in ratios]
        assert magnitudes == sorted(magnitudes, reverse=True)

    def test_single_horizon_consistency(self):
        seq = PowerLaw(Fraction(1, 8), Fraction(1))
        profile = petrov_profile(2, seq, [6, 10], Fraction(1))
        assert profile[0].S_N == petrov_ratio(2, seq, 6, 1).S_N
        assert profile[1].S_N == petrov_ratio(2, seq, 10, 1).S_N


class TestEventuallyAlwaysSets:
    def test_cover_equals_union_of_recurrence_sets(self):
        seq = ExplicitTable(tuple(Fraction(1, 3 * m) for m in range(1, 9)))
        for m in [2, 4, 6]:
            cover = build_ear_sets(2, m, seq)
            r_m = seq.exact(m)
            parts = [build_recurrence_set(2, k, r_m).set for k in range(1, m + 1)]
            assert cover.set == IntervalSet.union_all(parts)
            assert cover.measure <= 2 * m * r_m

    @pytest.mark.parametrize("m", list(range(1, 19)))
    def test_cover_and_complement_bounds(self, m):
        seq = EarRadius(ear_log2_delta(1), lambda d: Fraction(1), "ear")
        cover = build_ear_sets(2, m, seq, materialize=False)
        r_m = seq.exact(m)
        assert cover.measure <= 2 * m * r_m
        assert 1 - cover.measure >= 1 - 2 * m * r_m

    def test_truncation_profile_non_increasing(self):
        seq = ExplicitTable(tuple(Fraction(1, 4 * m) for m in range(1, 11)))
        res = ear_truncated_A(2, 3, 10, seq)
        values = [v for _, v in res.profile]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert res.measure == values[-1]

    def test_truncation_matches_set_intersection(self):
        seq = ExplicitTable(tuple(Fraction(1, 4 * m) for m in range(1, 9)))
        res = ear_truncated_A(2, 2, 8, seq)
        acc = build_ear_sets(2, 2, seq).set
        for m in range(3, 9):
            acc = acc.intersect(build_ear_sets(2, m, seq).set)
        assert res.set == acc
        assert res.measure == acc.measure


class TestFourierCoefficients:
    def test_mean_value_exact(self):
        assert fourier_indicator_coeff(Fraction(1, 10), 0) == Fraction(1, 5)

    @pytest.mark.parametrize("l", [1, 2, 3, 7])
    def test_against_quadrature(self, l):
        r = Fraction(1, 10)
        oracle = mpmath.quad(lambda x: 2 * mpmath.cos(2 * mpmath.pi * l * x), [0, float(r)])
        assert abs(fourier_indicator_coeff(r, l) - oracle) < 1e-12

    @given(st.fractions(min_value=Fraction(1, 100), max_value=Fraction(1, 2)),
           st.integers(min_value=1, max_value=50))
    @settings(max_examples=60)
    def test_decay_bound(self, r, l):
        c = fourier_indicator_coeff(r, l)
        assert abs(c) <= 1 / (math.pi * l) + 1e-15
