"""Precision-budgeted orbit computation and orbit-level return statistics.

Two regimes:

* Exact orbits (integer circle maps, rational piecewise-affine maps, toral
  integer matrices, rational rotations): points are Fractions (or tuples of
  them) and every distance is an exact rational.

* Fixed-point orbits (beta-maps, irrational rotations): points are integers
  X ~ x * 2**P. The per-step error in ulps is tracked explicitly (multiply
  by the slope modulus, add truncation); a run whose guaranteed accuracy
  would drop below 2**-64 raises instead of silently degrading.

For the map T x = a x mod 1 a dyadic starting point X0/2**P is special: T is
exact integer arithmetic, and for a = 2 the whole orbit is a bit shift of
X0, so distances at time n are read from a 64-bit window of X0's bytes in
O(1) without iterating.
"""

from __future__ import annotations

import csv
import hashlib
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .circle import circle_dist
from .errors import PrecisionBudgetError
from .systems import (
    BetaMap,
    IntegerCircleMap,
    PiecewiseLinear,
    Rotation,
    SystemSpec,
    ToralLinear,
)

GUARD_BITS = 64
_W = 64
_MASK64 = (1 << _W) - 1


# ---------------------------------------------------------------------------
# Metrics and exact iteration
# ---------------------------------------------------------------------------

def uses_circle_metric(sys: SystemSpec) -> bool:
    """Torus-type systems measure distance around the circle; interval maps
    (piecewise-affine, beta) use plain absolute value on [0, 1]."""
    return isinstance(sys, (IntegerCircleMap, Rotation, ToralLinear))


def point_distance(sys: SystemSpec, x, y):
    """d(x, y) in the system's metric, exact for rational inputs."""
    if isinstance(sys, ToralLinear):
        return max(circle_dist(a, b) for a, b in zip(x, y))
    if uses_circle_metric(sys):
        return circle_dist(x, y)
    return abs(Fraction(x) - Fraction(y))


def _exact_step(sys: SystemSpec, x):
    if isinstance(sys, (IntegerCircleMap, PiecewiseLinear, ToralLinear)):
        return sys.apply(x)
    if isinstance(sys, Rotation):
        alpha = sys.alpha.exact()
        if alpha is None:
            raise ValueError("exact iteration needs a rational rotation angle")
        y = Fraction(x) + alpha
        return y - math.floor(y)
    raise ValueError(f"{sys.describe()} has no exact orbit; use a fixed-point orbit")


def iterate(sys: SystemSpec, x, n: int):
    """T^n x exactly, for systems with exact rational dynamics."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(sys, ToralLinear):
        pt = tuple(Fraction(v) for v in x)
    else:
        pt = Fraction(x)
    for _ in range(n):
        pt = _exact_step(sys, pt)
    return pt


# ---------------------------------------------------------------------------
# Fixed-point orbits
# ---------------------------------------------------------------------------

def required_bits(sys: SystemSpec, horizon: int) -> int:
    """Fractional bits needed so step-``horizon`` values are accurate to
    2**-64: the forward error grows by the slope modulus per step."""
    if isinstance(sys, BetaMap):
        growth = math.ceil(horizon * math.log2(float(sys.beta))) + 1
    elif isinstance(sys, Rotation):
        growth = math.ceil(math.log2(horizon + 1)) + 1  # additive ulp drift
    elif isinstance(sys, IntegerCircleMap):
        growth = horizon * math.ceil(math.log2(abs(sys.a)))
    else:
        raise ValueError(f"no fixed-point orbit for {sys.describe()}")
    return growth + GUARD_BITS


class FixedPointOrbit:
    """Orbit of x ~ X0 / 2**P under a beta-map or rotation, with explicit
    error accounting in ulps of 2**-P."""

    def __init__(self, sys: SystemSpec, X0: int, P: int, horizon: int):
        need = required_bits(sys, horizon)
        if P < need:
            raise PrecisionBudgetError(need, P)
        self.sys = sys
        self.P = P
        self.horizon = horizon
        self.X0 = X0 % (1 << P)
        self.X = self.X0
        self.step_count = 0
        self.err_ulp = 1.0  # X0 itself rounds the true point
        if isinstance(sys, BetaMap):
            self._mult = sys.beta.scaled(P)
            self._slope = float(sys.beta)
            self._shift = None
        elif isinstance(sys, Rotation):
            self._shift = sys.alpha.scaled(P)
            self._slope = 1.0
            self._mult = None
        else:
            raise ValueError(f"no fixed-point orbit for {sys.describe()}")

    def step(self) -> int:
        if self.step_count >= self.horizon:
            raise PrecisionBudgetError(
                required_bits(self.sys, self.step_count + 1), self.P
            )
        mask = (1 << self.P) - 1
        if self._mult is not None:
            self.X = ((self.X * self._mult) >> self.P) & mask
            self.err_ulp = self._slope * self.err_ulp + 2.0
        else:
            self.X = (self.X + self._shift) & mask
            self.err_ulp += 1.0
        self.step_count += 1
        return self.X

    def dist_to_start(self) -> float:
        """d(T^k x, x) in the system's metric; error bounded by err_bound."""
        if uses_circle_metric(self.sys):
            t = (self.X - self.X0) % (1 << self.P)
            t = min(t, (1 << self.P) - t)
        else:
            t = abs(self.X - self.X0)
        return t / (1 << self.P)

    @property
    def err_bound(self) -> float:
        return 2.0 * self.err_ulp / (1 << self.P)


# ---------------------------------------------------------------------------
# Dyadic doubling-map orbits: the whole orbit is a window of X0
# ---------------------------------------------------------------------------

class DyadicOrbitView:
    """Orbit of X0 / 2**P under x -> 2x mod 1, read from X0's bytes.

    T^n x = (X0 << n mod 2**P) / 2**P exactly, so the top 64 bits of the
    time-n point are the bits of X0 at positions P-1-n downward. ``window``
    returns that 64-bit approximation in O(1); callers resolve comparisons
    that fall within its +-2 ulp (of 2**-64) uncertainty via ``exact_dist``.

    Requires P >= horizon + 64 so every window is fully inside X0.
    """

    def __init__(self, X0: int, P: int, horizon: int):
        if P < horizon + _W:
            raise PrecisionBudgetError(horizon + _W, P)
        self.P = P
        self.horizon = horizon
        self.X0 = X0 % (1 << P)
        nbytes = (P + 7) // 8
        # 8 zero bytes of padding on the left so every 9-byte slice exists
        self._buf = b"\x00" * 8 + self.X0.to_bytes(nbytes, "big")
        self._nbytes = nbytes
        self._w0 = self.window(0)

    def window(self, n: int) -> int:
        """floor(T^n x * 2**64) up to -0/+1: bits P-1-n .. P-64-n of X0."""
        s = self.P - _W - n  # right-shift amount
        if s < 0:
            raise PrecisionBudgetError(n + _W, self.P)
        byte_lo = s >> 3
        end = 8 + self._nbytes - byte_lo  # slice end in the padded buffer
        v = int.from_bytes(self._buf[end - 9 : end], "big")
        return (v >> (s & 7)) & _MASK64

    def circle_dist64(self, n: int) -> int:
        """circle_dist(T^n x, x) * 2**64, accurate to +-2."""
        t = (self.window(n) - self._w0) & _MASK64
        return min(t, (1 << _W) - t)

    def exact_point(self, n: int) -> Fraction:
        return Fraction((self.X0 << n) % (1 << self.P), 1 << self.P)

    def exact_dist(self, n: int) -> Fraction:
        t = ((self.X0 << n) - self.X0) % (1 << self.P)
        return Fraction(min(t, (1 << self.P) - t), 1 << self.P)

    def dist_below(self, n: int, threshold: Fraction, thr64: int) -> bool:
        """Is circle_dist(T^n x, x) < threshold?  thr64 = floor(threshold*2**64);
        decided from the window except in its uncertainty band."""
        d = self.circle_dist64(n)
        if d + 2 < thr64:
            return True
        if d > thr64 + 2:
            return False
        return self.exact_dist(n) < threshold

    def windows_batch(self, n_lo: int, n_hi: int) -> np.ndarray:
        """``window(n)`` for every n in [n_lo, n_hi], vectorized (uint64).

        Each window is assembled from an aligned 8-byte read plus the byte
        above it, so the whole orbit segment costs a few numpy passes.
        """
        if n_lo < 0 or n_hi > self.horizon or self.P < n_hi + _W:
            raise PrecisionBudgetError(n_hi + _W, self.P)
        arr = np.frombuffer(self._buf, dtype=np.uint8)
        L = arr.shape[0]
        # big-endian uint64 at every byte offset t: bytes t..t+7
        sw = np.lib.stride_tricks.sliding_window_view(arr, 8).astype(np.uint64)
        weights = (np.uint64(1) << (np.uint64(8) * np.arange(7, -1, -1, dtype=np.uint64)))
        w64 = sw @ weights  # wraps mod 2**64, but windows never overflow 64 bits
        ns = np.arange(n_lo, n_hi + 1)
        s = self.P - _W - ns          # right-shift amounts, all >= 0
        q, r = s >> 3, (s & 7).astype(np.uint64)
        t = L - 8 - q                 # aligned read covering bits 8q..8q+63
        a = w64[t]
        b = arr[t - 1].astype(np.uint64)
        out = a >> r
        nz = r > 0
        out[nz] |= (b[nz] & ((np.uint64(1) << r[nz]) - np.uint64(1))) << (np.uint64(_W) - r[nz])
        return out

    def circle_dist64_batch(self, n_lo: int, n_hi: int) -> np.ndarray:
        """circle_dist(T^n x, x) * 2**64 for n in [n_lo, n_hi], each +-2."""
        w = self.windows_batch(n_lo, n_hi)
        t = w - np.uint64(self._w0)   # wraps mod 2**64, as intended
        return np.minimum(t, -t)


# ---------------------------------------------------------------------------
# Deterministic sampling
# ---------------------------------------------------------------------------

def derive_seed(master_seed: int, index: int) -> int:
    """Per-sample seed from (master seed, sample index), scheduler-independent."""
    h = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(h[:16], "big")


def sample_bits(master_seed: int, index: int, bits: int) -> int:
    """Deterministic uniform integer in [0, 2**bits)."""
    return random.Random(derive_seed(master_seed, index)).getrandbits(bits)


def sample_fraction(master_seed: int, index: int, bits: int = 128) -> Fraction:
    return Fraction(sample_bits(master_seed, index, bits), 1 << bits)


# ---------------------------------------------------------------------------
# Return statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReturnDistance:
    """rho_m(x) = min over 1 <= k <= m of d(T^k x, x), with the argmin."""

    m: int
    rho: Fraction | float
    argmin: int


def min_return_distance(sys: SystemSpec, x, m: int) -> ReturnDistance:
    """Exact rho_m(x) for systems with exact orbits."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if isinstance(sys, ToralLinear):
        start = tuple(Fraction(v) for v in x)
    else:
        start = Fraction(x)
    pt = start
    best = None
    arg = 0
    for k in range(1, m + 1):
        pt = _exact_step(sys, pt)
        d = point_distance(sys, pt, start)
        if best is None or d < best:
            best, arg = d, k
            if best == 0:
                break
    return ReturnDistance(m, best, arg)


def return_time(sys: SystemSpec, x, r, horizon: int) -> int | None:
    """tau_r(x) = first n <= horizon with d(T^n x, x) < r; None past horizon
    (an explicit marker, never a fake value)."""
    r = Fraction(r)
    if r <= 0:
        return None
    start = tuple(Fraction(v) for v in x) if isinstance(sys, ToralLinear) else Fraction(x)
    pt = start
    for n in range(1, horizon + 1):
        pt = _exact_step(sys, pt)
        if point_distance(sys, pt, start) < r:
            return n
    return None


@dataclass(frozen=True)
class ReturnExponents:
    """Regression of log tau_r against -log r over a geometric radius grid.

    ``lower``/``upper`` are the min/max per-point exponents over the finer
    half of the grid (the liminf/limsup proxies); ``excluded`` lists radii
    whose return time exceeded the horizon.
    """

    slope: float
    residual: float
    lower: float
    upper: float
    points: tuple[tuple[float, int], ...]  # (r, tau)
    excluded: tuple[float, ...]


def return_exponents(sys: SystemSpec, x, r_grid: Sequence, horizon: int) -> ReturnExponents:
    if len(r_grid) < 8:
        raise ValueError("need a geometric grid of at least 8 radii")
    points = []
    excluded = []
    for r in r_grid:
        tau = return_time(sys, x, Fraction(r), horizon)
        if tau is None:
            excluded.append(float(r))
        else:
            points.append((float(r), tau))
    if len(points) < 2:
        return ReturnExponents(math.nan, math.nan, math.nan, math.nan,
                               tuple(points), tuple(excluded))
    xs = np.array([-math.log(r) for r, _ in points])
    ys = np.array([math.log(t) for _, t in points])
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    # per-point exponents on the finer (smaller-radius) half of the grid
    fine = sorted(points)[: max(2, len(points) // 2)]
    exps = [math.log(t) / -math.log(r) if r < 1 and t > 1 else 0.0 for r, t in fine]
    return ReturnExponents(float(slope), residual, min(exps), max(exps),
                           tuple(points), tuple(excluded))


def boshernitzan_statistic(sys: SystemSpec, x, alpha: float, N: int) -> float:
    """min over 1 <= n <= N of n**(1/alpha) * d(T^n x, x) (exact orbits)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    start = tuple(Fraction(v) for v in x) if isinstance(sys, ToralLinear) else Fraction(x)
    pt = start
    best = math.inf
    inv = 1.0 / alpha
    for n in range(1, N + 1):
        pt = _exact_step(sys, pt)
        val = n ** inv * float(point_distance(sys, pt, start))
        if val < best:
            best = val
            if best == 0:
                break
    return best


def doubling_boshernitzan_checkpoints(
    view: DyadicOrbitView, alpha: float, checkpoints: Sequence[int]
) -> list[float]:
    """Running minima of n**(1/alpha) * circle_dist(T^n x, x) for the
    doubling map at each checkpoint N, in one pass over the orbit windows."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    checkpoints = sorted(checkpoints)
    inv = 1.0 / alpha
    best = math.inf
    out = []
    ci = 0
    for n in range(1, checkpoints[-1] + 1):
        d64 = view.circle_dist64(n)
        if d64 <= 4:
            d = float(view.exact_dist(n))
        else:
            d = d64 / 2.0 ** 64
        val = n ** inv * d
        if val < best:
            best = val
        while ci < len(checkpoints) and n == checkpoints[ci]:
            out.append(best)
            ci += 1
    return out


# ---------------------------------------------------------------------------
# Orbit trace export
# ---------------------------------------------------------------------------

def write_orbit_csv(fileobj, sys: SystemSpec, x, n: int) -> int:
    """Rows (step, point, distance-to-start) for plotting; exact orbits only."""
    writer = csv.writer(fileobj)
    writer.writerow(["step", "point", "dist_to_start"])
    start = tuple(Fraction(v) for v in x) if isinstance(sys, ToralLinear) else Fraction(x)
    pt = start
    for k in range(n + 1):
        if isinstance(sys, ToralLinear):
            rendered = ";".join(f"{float(v):.15g}" for v in pt)
        else:
            rendered = f"{float(pt):.15g}"
        d = 0.0 if k == 0 else float(point_distance(sys, pt, start))
        writer.writerow([k, rendered, f"{d:.15g}"])
        if k < n:
            pt = _exact_step(sys, pt)
    return n + 1
