"""Exact arithmetic on the circle R/Z and finite unions of rational arcs.

Everything in this module is exact: points are `Fraction`s in [0, 1), arc
endpoints are `Fraction`s, and all set operations return canonical normal
forms so that equality of sets is equality of representations.

Arcs are half-open [lo, hi). A set that differs from another on finitely
many points has the same canonical measure, which is all the downstream
computations care about; constructors therefore normalise open solution
intervals (a, b) to [a, b).

Canonical form: arcs are maximal half-open subintervals of [0, 1), sorted
by left endpoint, merged whenever they touch on the line. An arc crossing
0 is stored split as [0, x) and [y, 1); the two halves are not fused, so a
set like {[0, 1/10), [9/10, 1)} prints with two arcs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


def circle_point(x) -> Fraction:
    """Reduce a rational number mod 1 into [0, 1)."""
    f = Fraction(x)
    return f - math.floor(f)


def circle_dist(x, y) -> Fraction:
    """Shortest-arc distance on R/Z; always in [0, 1/2]."""
    t = circle_point(Fraction(x) - Fraction(y))
    return min(t, 1 - t)


# ---------------------------------------------------------------------------
# Integer-scaled arc kernels.
#
# Heavy sweeps (recurrence-set intersections, EAR unions) run on arcs whose
# endpoints are integers over a common denominator L, i.e. on the circle of
# circumference L. These kernels are shared by IntervalSet and by the bulk
# routines in exact_sets, which generate scaled arcs directly.
# ---------------------------------------------------------------------------

def merge_scaled_arcs(arcs: list[tuple[int, int]], L: int) -> list[tuple[int, int]]:
    """Canonicalise integer arcs on a circle of circumference L.

    Input arcs may be unsorted and may have lo < 0 or hi > L (wrapping);
    each must satisfy lo < hi. Output is sorted, disjoint, non-adjacent,
    confined to [0, L), with wrap arcs split at 0.
    """
    flat: list[tuple[int, int]] = []
    for lo, hi in arcs:
        if hi <= lo:
            continue
        if hi - lo >= L:
            return [(0, L)]
        lo_m = lo % L
        hi_m = lo_m + (hi - lo)
        if hi_m <= L:
            flat.append((lo_m, hi_m))
        else:
            flat.append((lo_m, L))
            flat.append((0, hi_m - L))
    if not flat:
        return []
    flat.sort()
    merged = [flat[0]]
    for lo, hi in flat[1:]:
        mlo, mhi = merged[-1]
        if lo <= mhi:
            if hi > mhi:
                merged[-1] = (mlo, hi)
        else:
            merged.append((lo, hi))
    if len(merged) == 1 and merged[0] == (0, L):
        return [(0, L)]
    return merged


def scaled_measure(arcs: Sequence[tuple[int, int]]) -> int:
    return sum(hi - lo for lo, hi in arcs)


def intersect_scaled_arcs(
    a: Sequence[tuple[int, int]], b: Sequence[tuple[int, int]]
) -> list[tuple[int, int]]:
    """Intersection of two canonical scaled arc lists (two-pointer sweep)."""
    out: list[tuple[int, int]] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


@dataclass(frozen=True)
class IntervalSet:
    """Finite disjoint union of half-open arcs with exact rational endpoints.

    Instances are immutable and always in canonical form; construct through
    ``from_arcs`` (or the set operations), never directly.
    """

    arcs: tuple[tuple[Fraction, Fraction], ...]

    @staticmethod
    def empty() -> "IntervalSet":
        return IntervalSet(())

    @staticmethod
    def full() -> "IntervalSet":
        return IntervalSet(((ZERO, ONE),))

    @staticmethod
    def from_arcs(arcs: Iterable[tuple[Fraction, Fraction]]) -> "IntervalSet":
        """Build a canonical set from arbitrary (lo, hi) rational arcs.

        Arcs may wrap (lo < 0 or hi > 1) and may overlap; hi <= lo arcs are
        dropped as empty. An arc of length >= 1 is the full circle.
        """
        pairs = [(Fraction(lo), Fraction(hi)) for lo, hi in arcs]
        if not pairs:
            return IntervalSet.empty()
        L = math.lcm(*[f.denominator for p in pairs for f in p])
        scaled = [
            (int(lo * L), int(hi * L))
            for lo, hi in pairs
        ]
        merged = merge_scaled_arcs(scaled, L)
        return IntervalSet(tuple((Fraction(lo, L), Fraction(hi, L)) for lo, hi in merged))

    @staticmethod
    def arc(lo, hi) -> "IntervalSet":
        return IntervalSet.from_arcs([(Fraction(lo), Fraction(hi))])

    # -- queries ----------------------------------------------------------

    @property
    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.arcs), ZERO)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def is_empty(self) -> bool:
        return not self.arcs

    def contains(self, x) -> bool:
        p = circle_point(x)
        return any(lo <= p < hi for lo, hi in self.arcs)

    # -- algebra -----------------------------------------------------------

    def _scaled(self, L: int) -> list[tuple[int, int]]:
        return [(int(lo * L), int(hi * L)) for lo, hi in self.arcs]

    @staticmethod
    def _common_denominator(*sets: "IntervalSet") -> int:
        dens = [f.denominator for s in sets for p in s.arcs for f in p]
        return math.lcm(*dens) if dens else 1

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.from_arcs(self.arcs + other.arcs)

    @staticmethod
    def union_all(sets: Sequence["IntervalSet"]) -> "IntervalSet":
        arcs: list[tuple[Fraction, Fraction]] = []
        for s in sets:
            arcs.extend(s.arcs)
        return IntervalSet.from_arcs(arcs)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        if self.is_empty() or other.is_empty():
            return IntervalSet.empty()
        L = IntervalSet._common_denominator(self, other)
        out = intersect_scaled_arcs(self._scaled(L), other._scaled(L))
        return IntervalSet(tuple((Fraction(lo, L), Fraction(hi, L)) for lo, hi in out))

    def complement(self) -> "IntervalSet":
        if self.is_empty():
            return IntervalSet.full()
        gaps: list[tuple[Fraction, Fraction]] = []
        prev = ZERO
        for lo, hi in self.arcs:
            if lo > prev:
                gaps.append((prev, lo))
            prev = hi
        if prev < 1:
            gaps.append((prev, ONE))
        return IntervalSet(tuple(gaps))

    def rotate(self, offset) -> "IntervalSet":
        """Rotate every arc by a common rational offset (mod 1)."""
        d = Fraction(offset)
        return IntervalSet.from_arcs([(lo + d, hi + d) for lo, hi in self.arcs])

    def is_subset_of(self, other: "IntervalSet") -> bool:
        return self.intersect(other) == self

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form: one 'num/den,num/den' line per arc."""
        lines = [
            f"{lo.numerator}/{lo.denominator},{hi.numerator}/{hi.denominator}"
            for lo, hi in self.arcs
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @staticmethod
    def from_text(text: str) -> "IntervalSet":
        arcs = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            a, b = line.split(",")
            arcs.append((Fraction(a), Fraction(b)))
        return IntervalSet.from_arcs(arcs)


# ---------------------------------------------------------------------------
# Radius sequences
# ---------------------------------------------------------------------------

class RadiusSequence:
    """Symbolic family r_n, evaluated exactly when possible.

    ``exact(n)`` returns a Fraction or None when the value is irrational;
    ``approx(n)`` always returns a float; ``mp(n)`` an mpmath value at the
    current working precision.
    """

    def exact(self, n: int) -> Fraction | None:
        raise NotImplementedError

    def approx(self, n: int) -> float:
        raise NotImplementedError

    def mp(self, n: int):
        e = self.exact(n)
        if e is not None:
            return mpmath.mpf(e.numerator) / e.denominator
        return mpmath.mpf(self.approx(n))

    def describe(self) -> str:
        raise NotImplementedError


def _check_positive_kappa(kappa: Fraction) -> Fraction:
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return kappa


@dataclass(frozen=True)
class PowerLaw(RadiusSequence):
    """r_n = kappa * n**(-gamma)."""

    kappa: Fraction
    gamma: Fraction

    def __post_init__(self):
        object.__setattr__(self, "kappa", _check_positive_kappa(Fraction(self.kappa)))
        object.__setattr__(self, "gamma", Fraction(self.gamma))

    def exact(self, n: int) -> Fraction | None:
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.gamma.denominator == 1:
            return self.kappa * Fraction(1, n) ** int(self.gamma)
        root = round(n ** (1 / self.gamma.denominator))
        if root ** self.gamma.denominator == n:
            return self.kappa * Fraction(1, root) ** self.gamma.numerator
        return None

    def approx(self, n: int) -> float:
        return float(self.kappa) * n ** (-float(self.gamma))

    def mp(self, n: int):
        e = self.exact(n)
        if e is not None:
            return mpmath.mpf(e.numerator) / e.denominator
        k = mpmath.mpf(self.kappa.numerator) / self.kappa.denominator
        g = mpmath.mpf(self.gamma.numerator) / self.gamma.denominator
        return k * mpmath.power(n, -g)

    def describe(self) -> str:
        return f"powerlaw:{self.kappa},{self.gamma}"


@dataclass(frozen=True)
class PowerLog(RadiusSequence):
    """r_n = kappa / (n * (log n)**theta), with (log n)**theta := 1 for n <= 2.

    The log-factor floor only matters for n in {1, 2} where log n <= 1; the
    asymptotics, which are all the theory constrains, are untouched.
    """

    kappa: Fraction
    theta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "kappa", _check_positive_kappa(Fraction(self.kappa)))
        object.__setattr__(self, "theta", Fraction(self.theta))

    def exact(self, n: int) -> Fraction | None:
        if n < 1:
            raise ValueError("n must be >= 1")
        if n <= 2 or self.theta == 0:
            return self.kappa / n
        return None

    def approx(self, n: int) -> float:
        if n <= 2:
            return float(self.kappa) / n
        return float(self.kappa) / (n * math.log(n) ** float(self.theta))

    def mp(self, n: int):
        e = self.exact(n)
        if e is not None:
            return mpmath.mpf(e.numerator) / e.denominator
        k = mpmath.mpf(self.kappa.numerator) / self.kappa.denominator
        t = mpmath.mpf(self.theta.numerator) / self.theta.denominator
        return k / (n * mpmath.log(n) ** t)

    def describe(self) -> str:
        return f"powerlog:{self.kappa},{self.theta}"


@dataclass(frozen=True)
class EarRadius(RadiusSequence):
    """r_m = Delta_m * h(Delta_m) / m for eventually-always experiments.

    ``delta_rule`` and ``h_rule`` map m (resp. Delta_m) to values; when both
    return rationals the sequence is exact, which the exact EAR set builders
    require.
    """

    delta_rule: Callable[[int], Fraction | int]
    h_rule: Callable[[Fraction], Fraction | float]
    label: str = "ear:custom"

    def delta(self, m: int) -> Fraction:
        return Fraction(self.delta_rule(m))

    def exact(self, m: int) -> Fraction | None:
        if m < 1:
            raise ValueError("m must be >= 1")
        d = self.delta(m)
        h = self.h_rule(d)
        if isinstance(h, (int, Fraction)):
            return d * Fraction(h) / m
        return None

    def approx(self, m: int) -> float:
        d = self.delta(m)
        return float(d) * float(self.h_rule(d)) / m

    def describe(self) -> str:
        return self.label


def ear_log2_delta(sigma: Fraction) -> Callable[[int], Fraction]:
    """Delta_m = ceil((2 + sigma) * log2(m)), kept integral for exactness."""
    s = Fraction(sigma)

    def rule(m: int) -> Fraction:
        if m == 1:
            return Fraction(1)
        bits = Fraction(math.ceil(float(2 + s) * math.log2(m)))
        return max(bits, Fraction(1))

    return rule


@dataclass(frozen=True)
class LogTimesH(RadiusSequence):
    """r_m = log(m) * h(m) / m, the full-measure side of the EAR dichotomy."""

    h_rule: Callable[[int], float]
    label: str = "logtimesh:custom"

    def exact(self, m: int) -> Fraction | None:
        return None

    def approx(self, m: int) -> float:
        if m < 1:
            raise ValueError("m must be >= 1")
        if m == 1:
            return 0.0
        return math.log(m) * float(self.h_rule(m)) / m

    def describe(self) -> str:
        return self.label


@dataclass(frozen=True)
class ExplicitTable(RadiusSequence):
    """r_n read from a finite table (1-based)."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("radii must be non-negative")
        object.__setattr__(self, "values", vals)

    def exact(self, n: int) -> Fraction | None:
        if not 1 <= n <= len(self.values):
            raise ValueError(f"n={n} outside table of length {len(self.values)}")
        return self.values[n - 1]

    def approx(self, n: int) -> float:
        return float(self.exact(n))

    def describe(self) -> str:
        return "table:" + ",".join(str(v) for v in self.values)


def radius_eval(seq: RadiusSequence, n: int):
    """Evaluate r_n: exact Fraction when available, else high-precision mpf."""
    if n < 1:
        raise ValueError("n must be >= 1")
    e = seq.exact(n)
    return e if e is not None else seq.mp(n)
