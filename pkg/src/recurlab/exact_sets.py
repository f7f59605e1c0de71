"""Exact recurrence sets E_n = {x : d(T^n x, x) < r} and their statistics.

For the circle map T x = a x mod 1 the set E_n is a union of |a^n - 1| arcs
of radius r/(a^n - 1) centered at the fixed points j/(a^n - 1) of T^n, so
mu(E_n) = 2r exactly whenever r <= 1/2. Everything here is exact rational
arithmetic; bulk sweeps run on integer-scaled arcs (endpoints over a common
denominator L), with a numpy int64 fast path when L fits in 62 bits.

Hard budgets replace silent truncation: a computation that would need more
arcs or composed branches than allowed raises, naming the limit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .circle import (
    IntervalSet,
    RadiusSequence,
    intersect_scaled_arcs,
    merge_scaled_arcs,
    scaled_measure,
)
from .errors import ArcBudgetExceeded, BranchBudgetExceeded
from .systems import IntegerCircleMap, PiecewiseLinear, SystemSpec

DEFAULT_ARC_BUDGET = 1 << 22
DEFAULT_BRANCH_BUDGET = 1 << 22

# Largest common denominator for which scaled arcs fit comfortably in int64.
_NP_LIMIT = 1 << 62


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceSetResult:
    """E_n for one system, radius and index.

    ``arc_count`` counts arcs on the circle (an arc crossing 0 counts once,
    even though the stored IntervalSet keeps it split); for T x = a x mod 1
    with 0 < r <= 1/2 it equals |a^n - 1|. ``set`` is None when the caller
    skipped materialization and only the exact measure was computed.
    """

    n: int
    r: Fraction
    set: IntervalSet | None
    measure: Fraction
    arc_count: int


@dataclass(frozen=True)
class PairCorrelation:
    """Exact overlap statistics of E_i and E_j for one circle map."""

    a: int
    i: int
    j: int
    mu_i: Fraction
    mu_j: Fraction
    intersection: Fraction
    excess: Fraction
    bound: Fraction
    bound_ok: bool


@dataclass(frozen=True)
class PetrovSummary:
    """Correlation sum S_N against R_N = (sum of mu(E_i))^2 at one horizon."""

    N: int
    S_N: Fraction
    R_N: Fraction
    ratio: float


@dataclass(frozen=True)
class BranchRatioResult:
    """Max over branches of T^n of (|solution interval| / |branch domain|)/r,
    against the uniform bound 2*lambda/((lambda-1)*c0) from the branch-geometry
    argument (distortion constant 1 for piecewise-affine maps)."""

    n: int
    r: Fraction
    max_ratio: Fraction
    bound: Fraction
    branch_count: int

    @property
    def within_bound(self) -> bool:
        return self.max_ratio <= self.bound


@dataclass(frozen=True)
class EarCoverResult:
    """C_m = union over k <= m of {x : d(T^k x, x) < r_m} for T x = a x mod 1."""

    m: int
    r: Fraction
    set: IntervalSet | None
    measure: Fraction
    arc_count: int


@dataclass(frozen=True)
class EarTruncationResult:
    """A_{n0,M} = intersection of C_m over m in [n0, M], with the measure
    profile after each successive intersection (non-increasing in m)."""

    n0: int
    M: int
    set: IntervalSet | None
    measure: Fraction
    profile: tuple[tuple[int, Fraction], ...]


# ---------------------------------------------------------------------------
# Scaled-arc generation for circle maps
# ---------------------------------------------------------------------------

def _check_multiplier(a: int) -> int:
    if abs(a) < 2:
        raise ValueError(f"multiplier must satisfy |a| >= 2, got {a}")
    return a


def _check_radius(r, upper=Fraction(1, 2)) -> Fraction:
    r = Fraction(r)
    if not 0 <= r <= upper:
        raise ValueError(f"radius must lie in [0, {upper}], got {r}")
    return r


def _fixed_point_count(a: int, n: int) -> int:
    """Number of fixed points of T^n on the circle, |a^n - 1|."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return abs(a ** n - 1)


def _en_scaled_arcs(M: int, w: int, L: int) -> list[tuple[int, int]]:
    """Canonical scaled arcs of E_n: radius w around the M points k*(L/M).

    Requires L % M == 0 and 2*w <= L//M (disjoint arcs); the arc around 0
    comes out split as [0, w) and [L-w, L).
    """
    if w <= 0:
        return []
    sp = L // M
    if 2 * w >= sp:
        return [(0, L)]
    arcs = [(0, w)]
    arcs.extend((k * sp - w, k * sp + w) for k in range(1, M))
    arcs.append((L - w, L))
    return arcs


def _circle_arc_count(arcs: Sequence[tuple], top=Fraction(1)) -> int:
    """Arc count on the circle: the canonical form splits an arc crossing 0
    into [0, .) and [., top) pieces; count those as one arc. ``top`` is 1 for
    Fraction arcs and L for integer-scaled arcs."""
    c = len(arcs)
    if c >= 2 and arcs[0][0] == 0 and arcs[-1][1] == top:
        c -= 1
    return c


# ---------------------------------------------------------------------------
# build_recurrence_set (integer circle maps)
# ---------------------------------------------------------------------------

def build_recurrence_set(
    a: int,
    n: int,
    r,
    *,
    materialize: bool = True,
    arc_budget: int = DEFAULT_ARC_BUDGET,
) -> RecurrenceSetResult:
    """E_n = {x : circle_dist(a^n x, x) < r} for T x = a x mod 1, exactly.

    The measure is always the closed form 2r (r <= 1/2 keeps the arcs
    disjoint); the IntervalSet is materialized only when requested and the
    arc count fits the budget.
    """
    _check_multiplier(a)
    r = _check_radius(r)
    M = _fixed_point_count(a, n)
    measure = 2 * r
    if r == 0:
        return RecurrenceSetResult(n, r, IntervalSet.empty() if materialize else None, Fraction(0), 0)
    arc_count = 1 if measure == 1 else M
    if not materialize:
        return RecurrenceSetResult(n, r, None, measure, arc_count)
    if M + 1 > arc_budget:
        raise ArcBudgetExceeded(M + 1, arc_budget)
    L = M * r.denominator
    w = r.numerator
    scaled = _en_scaled_arcs(M, w, L)
    iset = IntervalSet(tuple((Fraction(lo, L), Fraction(hi, L)) for lo, hi in scaled))
    return RecurrenceSetResult(n, r, iset, measure, arc_count)


# ---------------------------------------------------------------------------
# Piecewise-affine branch machinery
# ---------------------------------------------------------------------------

def _as_piecewise(sys: SystemSpec) -> PiecewiseLinear:
    if isinstance(sys, IntegerCircleMap):
        return sys.as_piecewise()
    if isinstance(sys, PiecewiseLinear):
        return sys
    raise TypeError(f"exact branch analysis needs a piecewise-affine map, got {sys!r}")


def compose_branches(
    pw: PiecewiseLinear, n: int, branch_budget: int = DEFAULT_BRANCH_BUDGET
) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
    """Maximal affine branches (lo, hi, slope, intercept) of T^n.

    On each returned domain [lo, hi), T^n x = slope*x + intercept with the
    value already reduced into [0, 1) (the intercept absorbs the mod-1
    subtractions along the orbit).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cur = [(b.lo, b.hi, b.slope, b.intercept) for b in pw.branches]
    for _ in range(n - 1):
        nxt = []
        for lo, hi, s, t in cur:
            for b in pw.branches:
                # solve s*x + t in [b.lo, b.hi) within [lo, hi)
                if s > 0:
                    xlo = (b.lo - t) / s
                    xhi = (b.hi - t) / s
                else:
                    xlo = (b.hi - t) / s
                    xhi = (b.lo - t) / s
                xlo = max(xlo, lo)
                xhi = min(xhi, hi)
                if xlo < xhi:
                    nxt.append((xlo, xhi, b.slope * s, b.slope * t + b.intercept))
        if len(nxt) > branch_budget:
            raise BranchBudgetExceeded(len(nxt), branch_budget)
        cur = nxt
    cur.sort(key=lambda br: br[0])
    return cur


def _branch_solution(lo, hi, s, t, r, q):
    """Solution interval of |s*x + t - x - q| < r inside [lo, hi), or None."""
    coef = s - 1  # never 0: |s| > 1
    if coef > 0:
        a_ = (q - t - r) / coef
        b_ = (q - t + r) / coef
    else:
        a_ = (q - t + r) / coef
        b_ = (q - t - r) / coef
    xlo = max(lo, a_)
    xhi = min(hi, b_)
    return (xlo, xhi) if xlo < xhi else None


def build_recurrence_set_piecewise(
    sys: SystemSpec,
    n: int,
    r,
    *,
    metric: str = "circle",
    branch_budget: int = DEFAULT_BRANCH_BUDGET,
) -> RecurrenceSetResult:
    """E_n for a piecewise-affine expanding map via exact branch composition.

    On each affine branch of T^n the condition d(T^n x, x) < r is a linear
    inequality, so E_n restricted to a branch is an interval. ``metric``
    selects circle distance (integer offsets enumerated, the torus
    convention) or plain absolute value on [0, 1] (the interval-map
    convention).
    """
    if metric not in ("circle", "line"):
        raise ValueError(f"metric must be 'circle' or 'line', got {metric!r}")
    pw = _as_piecewise(sys)
    r = _check_radius(r)
    branches = compose_branches(pw, n, branch_budget)
    arcs: list[tuple[Fraction, Fraction]] = []
    for lo, hi, s, t in branches:
        if metric == "line":
            qs: Iterable[int] = (0,)
        else:
            v0 = (s - 1) * lo + t
            v1 = (s - 1) * hi + t
            vmin, vmax = (v0, v1) if v0 <= v1 else (v1, v0)
            qs = range(math.ceil(vmin - r), math.floor(vmax + r) + 1)
        for q in qs:
            sol = _branch_solution(lo, hi, s, t, r, q)
            if sol is not None:
                arcs.append(sol)
    iset = IntervalSet.from_arcs(arcs)
    return RecurrenceSetResult(n, r, iset, iset.measure, _circle_arc_count(iset.arcs))


def branch_ratio_check(
    sys: SystemSpec,
    n: int,
    r,
    *,
    branch_budget: int = DEFAULT_BRANCH_BUDGET,
) -> BranchRatioResult:
    """Max over branches I of T^n of (|E_n ∩ I| / |I|) / r, exactly.

    The branch-geometry argument predicts the uniform-in-n bound
    2*lambda/((lambda - 1)*c0), with lambda the minimal slope modulus of T
    and c0 its smallest branch-image length (piecewise-affine maps have
    distortion constant 1). Uses the absolute-value metric on [0, 1], the
    convention of that argument.
    """
    pw = _as_piecewise(sys)
    r = _check_radius(r)
    if r == 0:
        raise ValueError("ratio is normalized by r; r must be positive")
    branches = compose_branches(pw, n, branch_budget)
    best = Fraction(0)
    for lo, hi, s, t in branches:
        sol = _branch_solution(lo, hi, s, t, r, 0)
        if sol is None:
            continue
        xlo, xhi = sol
        ratio = (xhi - xlo) / (hi - lo) / r
        if ratio > best:
            best = ratio
    lam = pw.lam
    bound = 2 * lam / ((lam - 1) * pw.c0)
    return BranchRatioResult(n, r, best, bound, len(branches))


# ---------------------------------------------------------------------------
# Pairwise intersections and the Petrov ratio
# ---------------------------------------------------------------------------

def _np_en_arrays(M: int, sp: int, w: int, L: int):
    """E_n arcs as int64 lo/hi arrays (sorted, disjoint, within [0, L])."""
    ks = np.arange(1, M, dtype=np.int64)
    los = np.concatenate(([0], ks * sp - w, [L - w]))
    his = np.concatenate(([w], ks * sp + w, [np.int64(L)]))
    return los, his


def _np_intersection_measure(losA, hisA, losB, hisB) -> int:
    """|A ∩ B| = |A| + |B| - |A ∪ B| for disjoint-within-list int arcs."""
    lo = np.concatenate([losA, losB])
    hi = np.concatenate([hisA, hisB])
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = hi[order]
    run = np.maximum.accumulate(np.concatenate(([np.int64(0)], hi[:-1])))
    contrib = hi - np.maximum(lo, run)
    union = int(np.maximum(contrib, 0).sum())
    mA = int((hisA - losA).sum())
    mB = int((hisB - losB).sum())
    return mA + mB - union


def _en_intersection_measure(a: int, i: int, j: int, r_i: Fraction, r_j: Fraction) -> Fraction:
    """mu(E_i ∩ E_j) for T x = a x mod 1, exactly."""
    if r_i == 0 or r_j == 0:
        return Fraction(0)
    Mi = _fixed_point_count(a, i)
    Mj = _fixed_point_count(a, j)
    L = math.lcm(Mi * r_i.denominator, Mj * r_j.denominator)
    wi = r_i.numerator * (L // (r_i.denominator * Mi))
    wj = r_j.numerator * (L // (r_j.denominator * Mj))
    if 2 * r_i == 1:
        return 2 * r_j
    if 2 * r_j == 1:
        return 2 * r_i
    if L < _NP_LIMIT:
        A = _np_en_arrays(Mi, L // Mi, wi, L)
        B = _np_en_arrays(Mj, L // Mj, wj, L)
        inter = _np_intersection_measure(*A, *B)
    else:
        A = _en_scaled_arcs(Mi, wi, L)
        B = _en_scaled_arcs(Mj, wj, L)
        inter = scaled_measure(intersect_scaled_arcs(A, B))
    return Fraction(inter, L)


def pair_correlation(a: int, i: int, j: int, r_i, r_j) -> PairCorrelation:
    """Exact mu(E_i ∩ E_j), its excess over mu(E_i)mu(E_j), and the
    2*a^(2p-(i+j)) bound with p = gcd(i, j)."""
    _check_multiplier(a)
    if i == j:
        raise ValueError("pair correlation needs distinct indices i != j")
    if min(i, j) < 1:
        raise ValueError("indices must be >= 1")
    r_i = _check_radius(r_i)
    r_j = _check_radius(r_j)
    mu_i = 2 * r_i
    mu_j = 2 * r_j
    inter = _en_intersection_measure(a, i, j, r_i, r_j)
    excess = inter - mu_i * mu_j
    p = math.gcd(i, j)
    bound = 2 * Fraction(abs(a)) ** (2 * p - (i + j))
    return PairCorrelation(a, i, j, mu_i, mu_j, inter, excess, bound, excess <= bound)


def _exact_radii(seq: RadiusSequence, N: int) -> list[Fraction]:
    radii = []
    for n in range(1, N + 1):
        e = seq.exact(n)
        if e is None:
            raise ValueError(
                f"exact computation needs an exact radius sequence; "
                f"{seq.describe()} has no exact value at n={n}"
            )
        radii.append(_check_radius(e))
    return radii


def petrov_profile(
    a: int,
    seq: RadiusSequence,
    horizons: Sequence[int],
    H,
    *,
    arc_budget: int = DEFAULT_ARC_BUDGET,
) -> list[PetrovSummary]:
    """S_N = sum over i<j<=N of (mu(E_i∩E_j) - H mu_i mu_j) and
    R_N = (sum mu_i)^2, exactly, at each requested horizon in one sweep.

    liminf S_N/R_N <= 0 is the quasi-independence criterion forcing
    mu(limsup E_n) >= 1/H.
    """
    _check_multiplier(a)
    H = Fraction(H)
    horizons = sorted(set(horizons))
    if not horizons or horizons[0] < 1:
        raise ValueError("horizons must be positive")
    N = horizons[-1]
    need = abs(a) ** N + 1
    if need > arc_budget:
        raise ArcBudgetExceeded(need, arc_budget)
    radii = _exact_radii(seq, N)
    mus = [2 * r for r in radii]
    out = []
    S = Fraction(0)
    mu_sum = Fraction(0)
    marks = set(horizons)
    for j in range(1, N + 1):
        for i in range(1, j):
            inter = _en_intersection_measure(a, i, j, radii[i - 1], radii[j - 1])
            S += inter - H * mus[i - 1] * mus[j - 1]
        mu_sum += mus[j - 1]
        if j in marks:
            R = mu_sum * mu_sum
            ratio = float(S / R) if R > 0 else math.nan
            out.append(PetrovSummary(j, S, R, ratio))
    return out


def petrov_ratio(
    a: int,
    seq: RadiusSequence,
    N: int,
    H,
    *,
    arc_budget: int = DEFAULT_ARC_BUDGET,
) -> PetrovSummary:
    """The quasi-independence summary at a single horizon N."""
    return petrov_profile(a, seq, [N], H, arc_budget=arc_budget)[0]


# ---------------------------------------------------------------------------
# Eventually-always sets (exact, doubling-style circle maps)
# ---------------------------------------------------------------------------

def _ear_scaled_cover(a: int, m: int, r: Fraction, L: int) -> list[tuple[int, int]]:
    """Scaled canonical arcs of C_m = union over k<=m of E_{k,m} (radius r)."""
    if r == 0:
        return []
    if 2 * r >= 1:
        return [(0, L)]
    arcs: list[tuple[int, int]] = []
    for k in range(1, m + 1):
        Mk = _fixed_point_count(a, k)
        w = r.numerator * (L // (r.denominator * Mk))
        sp = L // Mk
        arcs.extend((c * sp - w, c * sp + w) for c in range(Mk))
    return merge_scaled_arcs(arcs, L)


def _ear_denominator(a: int, m: int, dens: Iterable[int]) -> int:
    # arc endpoints of E_{k,m} have denominator den(r) * M_k, so the common
    # scale must be divisible by every such product
    return math.lcm(*(
        d * _fixed_point_count(a, k) for d in dens for k in range(1, m + 1)
    ))


def _ear_budget_check(a: int, m: int, arc_budget: int) -> None:
    total = sum(_fixed_point_count(a, k) for k in range(1, m + 1))
    if total > arc_budget:
        raise ArcBudgetExceeded(total, arc_budget)


def _materialize(scaled: list[tuple[int, int]], L: int) -> IntervalSet:
    return IntervalSet(tuple((Fraction(lo, L), Fraction(hi, L)) for lo, hi in scaled))


def build_ear_sets(
    a: int,
    m: int,
    seq: RadiusSequence,
    *,
    materialize: bool = True,
    arc_budget: int = DEFAULT_ARC_BUDGET,
) -> EarCoverResult:
    """C_m = {x : some iterate T^k x, k <= m, lies within r_m of x}, exactly.

    Each E_{k,m} has measure 2 r_m, so mu(C_m) <= 2 m r_m; the complement
    bound mu(complement of C_m) >= 1 - 2 m r_m follows.
    """
    _check_multiplier(a)
    if m < 1:
        raise ValueError("m must be >= 1")
    r = seq.exact(m)
    if r is None:
        raise ValueError(f"{seq.describe()} has no exact value at m={m}")
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    _ear_budget_check(a, m, arc_budget)
    L = _ear_denominator(a, m, [r.denominator])
    scaled = _ear_scaled_cover(a, m, r, L)
    measure = Fraction(scaled_measure(scaled), L)
    iset = _materialize(scaled, L) if materialize else None
    return EarCoverResult(m, r, iset, measure, _circle_arc_count(scaled, top=L))


def ear_truncated_A(
    a: int,
    n0: int,
    M: int,
    seq: RadiusSequence,
    *,
    materialize: bool = True,
    arc_budget: int = DEFAULT_ARC_BUDGET,
) -> EarTruncationResult:
    """A_{n0,M} = intersection of C_m over n0 <= m <= M, exactly.

    The profile records the measure after each successive intersection; it
    is non-increasing and upper-bounds the eventually-always limit set's
    measure at every truncation.
    """
    _check_multiplier(a)
    if not 1 <= n0 <= M:
        raise ValueError("need 1 <= n0 <= M")
    radii = {}
    for m in range(n0, M + 1):
        r = seq.exact(m)
        if r is None:
            raise ValueError(f"{seq.describe()} has no exact value at m={m}")
        if r < 0:
            raise ValueError(f"radius must be non-negative, got {r}")
        radii[m] = r
    _ear_budget_check(a, M, arc_budget)
    L = _ear_denominator(a, M, [r.denominator for r in radii.values()])
    cur: list[tuple[int, int]] = [(0, L)]
    profile = []
    for m in range(n0, M + 1):
        cover = _ear_scaled_cover(a, m, radii[m], L)
        cur = intersect_scaled_arcs(cur, cover)
        profile.append((m, Fraction(scaled_measure(cur), L)))
        if not cur:
            break
    measure = profile[-1][1] if profile else Fraction(0)
    iset = _materialize(cur, L) if materialize else None
    return EarTruncationResult(n0, M, iset, measure, tuple(profile))


# ---------------------------------------------------------------------------
# Fourier coefficients of the symmetric indicator
# ---------------------------------------------------------------------------

def fourier_indicator_coeff(r, l: int):
    """Fourier coefficient c_l of the indicator of {x : circle_dist(x,0) < r}.

    c_l = sin(2 pi l r) / (pi l) for l != 0, so |c_l| <= 1/(pi |l|); l = 0
    gives the mean value 2r (returned exactly).
    """
    r = Fraction(r)
    if not 0 < r <= Fraction(1, 2):
        raise ValueError(f"radius must lie in (0, 1/2], got {r}")
    if l == 0:
        return 2 * r
    x = 2 * l * r
    x -= 2 * math.floor(x / 2)  # reduce mod 2 so sinpi stays accurate
    s = mpmath.sinpi(mpmath.mpf(x.numerator) / x.denominator)
    return s / (mpmath.pi * l)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

PAIR_CSV_COLUMNS = [
    "a", "i", "j", "p",
    "mu_i_num", "mu_i_den", "mu_j_num", "mu_j_den",
    "inter_num", "inter_den", "excess_num", "excess_den",
    "bound_num", "bound_den",
    "inter_decimal", "excess_decimal", "bound_decimal", "bound_ok",
]


def write_pair_correlation_csv(fileobj, pairs: Iterable[PairCorrelation]) -> int:
    """One row per (i, j) pair: exact numerator/denominator columns plus
    decimal renderings. Returns the number of rows written."""
    writer = csv.writer(fileobj)
    writer.writerow(PAIR_CSV_COLUMNS)
    count = 0
    for pc in pairs:
        writer.writerow([
            pc.a, pc.i, pc.j, math.gcd(pc.i, pc.j),
            pc.mu_i.numerator, pc.mu_i.denominator,
            pc.mu_j.numerator, pc.mu_j.denominator,
            pc.intersection.numerator, pc.intersection.denominator,
            pc.excess.numerator, pc.excess.denominator,
            pc.bound.numerator, pc.bound.denominator,
            f"{float(pc.intersection):.12g}",
            f"{float(pc.excess):.12g}",
            f"{float(pc.bound):.12g}",
            int(pc.bound_ok),
        ])
        count += 1
    return count
