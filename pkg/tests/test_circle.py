"""Exact circle arithmetic: distances, interval sets, radius sequences."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recurlab.circle import (
    EarRadius,
    ExplicitTable,
    IntervalSet,
    PowerLaw,
    PowerLog,
    circle_dist,
    circle_point,
    ear_log2_delta,
)

fractions01 = st.fractions(min_value=0, max_value=1)
small_fracs = st.fractions(min_value=-3, max_value=3)


def random_interval_sets(draw_arcs):
    arcs = []
    for lo, w in draw_arcs:
        arcs.append((lo, lo + w))
    return IntervalSet.from_arcs(arcs)


arc_strategy = st.lists(
    st.tuples(
        st.fractions(min_value=0, max_value=1),
        st.fractions(min_value=0, max_value=Fraction(1, 3)),
    ),
    max_size=6,
)
iset_strategy = arc_strategy.map(random_interval_sets)


class TestCircleDistance:
    def test_known_values(self):
        assert circle_dist(Fraction(1, 10), Fraction(9, 10)) == Fraction(1, 5)
        assert circle_dist(Fraction(1, 4), Fraction(3, 4)) == Fraction(1, 2)
        assert circle_dist(0, 1) == 0

    @given(small_fracs, small_fracs)
    def test_symmetric_and_bounded(self, x, y):
        d = circle_dist(x, y)
        assert d == circle_dist(y, x)
        assert 0 <= d <= Fraction(1, 2)

    @given(small_fracs, small_fracs, small_fracs)
    def test_triangle_inequality(self, x, y, z):
        assert circle_dist(x, z) <= circle_dist(x, y) + circle_dist(y, z)

    @given(small_fracs, small_fracs, small_fracs)
    def test_rotation_invariance(self, x, y, t):
        assert circle_dist(x + t, y + t) == circle_dist(x, y)

    @given(small_fracs)
    def test_point_reduction(self, x):
        p = circle_point(x)
        assert 0 <= p < 1
        assert (x - p).denominator == 1


class TestIntervalSet:
    def test_empty_and_full(self):
        assert IntervalSet.empty().measure == 0
        assert IntervalSet.full().measure == 1
        assert IntervalSet.empty().is_empty()
        assert IntervalSet.full().complement().is_empty()

    def test_overlapping_arcs_merge(self):
        s = IntervalSet.from_arcs(
            [(Fraction(0), Fraction(1, 4)), (Fraction(1, 8), Fraction(1, 2))]
        )
        assert s.arc_count == 1
        assert s.measure == Fraction(1, 2)

    def test_wrapping_arc(self):
        s = IntervalSet.arc(Fraction(7, 8), Fraction(9, 8))
        assert s.measure == Fraction(1, 4)
        assert s.contains(Fraction(15, 16))
        assert s.contains(Fraction(1, 16))
        assert not s.contains(Fraction(1, 2))

    @given(iset_strategy, iset_strategy)
    @settings(max_examples=60)
    def test_inclusion_exclusion_exact(self, a, b):
        union = a.union(b)
        inter = a.intersect(b)
        assert union.measure + inter.measure == a.measure + b.measure

    @given(iset_strategy)
    @settings(max_examples=60)
    def test_complement_partition(self, a):
        c = a.complement()
        assert a.measure + c.measure == 1
        assert a.intersect(c).measure == 0

    @given(iset_strategy, st.fractions(min_value=0, max_value=1))
    @settings(max_examples=60)
    def test_rotation_preserves_measure(self, a, t):
        assert a.rotate(t).measure == a.measure

    @given(iset_strategy, iset_strategy)
    @settings(max_examples=60)
    def test_subset_relations(self, a, b):
        inter = a.intersect(b)
        assert inter.is_subset_of(a)
        assert inter.is_subset_of(b)
        assert a.is_subset_of(a.union(b))

    @given(iset_strategy)
    @settings(max_examples=60)
    def test_text_roundtrip(self, a):
        assert IntervalSet.from_text(a.to_text()) == a

    def test_text_format(self):
        s = IntervalSet.from_arcs([(Fraction(1, 3), Fraction(1, 2))])
        assert s.to_text().strip() == "1/3,1/2"

    def test_union_all(self):
        parts = [IntervalSet.arc(Fraction(k, 4), Fraction(k + 1, 4)) for k in range(4)]
        assert IntervalSet.union_all(parts) == IntervalSet.full()

    @given(iset_strategy, st.fractions(min_value=-2, max_value=2))
    @settings(max_examples=60)
    def test_membership_consistent_with_rotation(self, a, x):
        t = Fraction(1, 7)
        assert a.contains(x) == a.rotate(t).contains(x + t)


class TestRadiusSequences:
    def test_power_law_exact(self):
        seq = PowerLaw(Fraction(1, 4), Fraction(1))
        assert seq.exact(8) == Fraction(1, 32)
        assert seq.approx(8) == pytest.approx(1 / 32)

    def test_power_law_non_integer_exponent_is_inexact(self):
        seq = PowerLaw(Fraction(1), Fraction(3, 2))
        assert seq.exact(2) is None
        assert seq.approx(4) == pytest.approx(1 / 8)

    def test_power_log_values(self):
        seq = PowerLog(Fraction(1), Fraction(2))
        # 1/(n (log n)^2), via mpmath for the reference value
        assert seq.approx(10) == pytest.approx(1 / (10 * math.log(10) ** 2))

    def test_explicit_table(self):
        seq = ExplicitTable((Fraction(1, 2), Fraction(1, 3)))
        assert seq.exact(1) == Fraction(1, 2)
        assert seq.exact(2) == Fraction(1, 3)

    def test_ear_radius_exact_when_h_rational(self):
        seq = EarRadius(ear_log2_delta(1), lambda d: Fraction(1), "test")
        m = 32
        delta = seq.delta(m)
        assert delta == math.ceil(3 * math.log2(m))
        assert seq.exact(m) == delta / Fraction(m)

    def test_ear_radius_float_h_has_no_exact_value(self):
        seq = EarRadius(ear_log2_delta(1), lambda d: 1.0, "test")
        assert seq.exact(4) is None
        assert seq.approx(4) > 0
