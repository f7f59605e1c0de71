"""Dynamical system definitions shared by the exact, spectral and orbit modules.

A system is a small immutable description; the heavy machinery (exact set
construction, Ulam matrices, precision-budgeted orbits) lives elsewhere and
dispatches on these types.

Irrational constants (the golden ratio, rotation angles) are stored
symbolically and rendered on demand either as mpmath values at the current
working precision or as exact floor(value * 2**P) integers for fixed-point
orbit arithmetic, so no precision is baked in at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import ConfigError, NonExpandingSystemError


def _scaled_sqrt(k: int, P: int) -> int:
    """floor(sqrt(k) * 2**P) exactly, for integer k >= 0."""
    return math.isqrt(k << (2 * P))


class IrrationalConstant:
    """A positive real constant with exact fixed-point rendering.

    ``kind`` is one of:
      - "rational": value = frac
      - "quadratic": value = (p + q*sqrt(s)) / t with integer p, q >= 0, s, t
      - "decimal": value parsed from a decimal literal (exact as a Fraction)
    """

    __slots__ = ("kind", "params", "label")

    def __init__(self, kind: str, params: tuple, label: str):
        self.kind = kind
        self.params = params
        self.label = label

    @staticmethod
    def parse(text) -> "IrrationalConstant":
        if isinstance(text, IrrationalConstant):
            return text
        if isinstance(text, (int, Fraction)):
            f = Fraction(text)
            return IrrationalConstant("rational", (f,), str(f))
        s = str(text).strip()
        if s in ("golden", "phi"):
            # (1 + sqrt(5)) / 2
            return IrrationalConstant("quadratic", (1, 1, 5, 2), "golden")
        if s.startswith("sqrt"):
            k = int(s[4:])
            if k <= 0:
                raise ValueError(f"sqrt argument must be positive, got {k}")
            return IrrationalConstant("quadratic", (0, 1, k, 1), s)
        f = Fraction(s)  # handles "3/2", "1.618", "2"
        return IrrationalConstant("rational", (f,), s)

    def exact(self) -> Fraction | None:
        if self.kind == "rational":
            return self.params[0]
        p, q, s, t = self.params
        r = math.isqrt(s)
        if r * r == s:
            return Fraction(p + q * r, t)
        return None

    def scaled(self, P: int) -> int:
        """floor(value * 2**P) exactly."""
        e = self.exact()
        if e is not None:
            return (e.numerator << P) // e.denominator
        p, q, s, t = self.params
        return ((p << P) + q * _scaled_sqrt(s, P)) // t

    def mp(self):
        e = self.exact()
        if e is not None:
            return mpmath.mpf(e.numerator) / e.denominator
        p, q, s, t = self.params
        return (p + q * mpmath.sqrt(s)) / t

    def __float__(self) -> float:
        return float(self.mp())

    def __repr__(self) -> str:
        return f"IrrationalConstant({self.label!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IrrationalConstant)
            and self.kind == other.kind
            and self.params == other.params
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.params))


@dataclass(frozen=True)
class Branch:
    """One affine branch x -> slope*x + intercept on the domain [lo, hi)."""

    lo: Fraction
    hi: Fraction
    slope: Fraction
    intercept: Fraction

    def __post_init__(self):
        for name in ("lo", "hi", "slope", "intercept"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if not self.lo < self.hi:
            raise ValueError(f"empty branch domain [{self.lo}, {self.hi})")

    def apply(self, x: Fraction) -> Fraction:
        return self.slope * x + self.intercept

    @property
    def image(self) -> tuple[Fraction, Fraction]:
        a, b = self.apply(self.lo), self.apply(self.hi)
        return (a, b) if a <= b else (b, a)

    @property
    def image_length(self) -> Fraction:
        return abs(self.slope) * (self.hi - self.lo)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-affine expanding map of [0, 1) with rational data.

    Branch domains must partition [0, 1); every slope modulus must exceed 1
    and every branch image must stay inside [0, 1].
    """

    branches: tuple[Branch, ...]

    def __post_init__(self):
        br = tuple(sorted(self.branches, key=lambda b: b.lo))
        object.__setattr__(self, "branches", br)
        problems = []
        if not br:
            problems.append("no branches")
        else:
            if br[0].lo != 0:
                problems.append("branch domains must start at 0")
            if br[-1].hi != 1:
                problems.append("branch domains must end at 1")
            for left, right in zip(br, br[1:]):
                if left.hi != right.lo:
                    problems.append(
                        f"gap or overlap between branch ending at {left.hi} "
                        f"and branch starting at {right.lo}"
                    )
            for b in br:
                if abs(b.slope) <= 1:
                    raise NonExpandingSystemError(
                        f"branch on [{b.lo}, {b.hi}) has slope {b.slope}; "
                        f"|slope| > 1 required"
                    )
                lo_im, hi_im = b.image
                if lo_im < 0 or hi_im > 1:
                    problems.append(
                        f"branch on [{b.lo}, {b.hi}) maps outside [0, 1]: "
                        f"image [{lo_im}, {hi_im}]"
                    )
        if problems:
            raise ConfigError(problems)

    @property
    def d(self) -> int:
        return 1

    @property
    def lam(self) -> Fraction:
        """Minimal expansion rate (min over branches of |slope|)."""
        return min(abs(b.slope) for b in self.branches)

    @property
    def Lam(self) -> Fraction:
        return max(abs(b.slope) for b in self.branches)

    @property
    def c0(self) -> Fraction:
        """Smallest branch-image length (large-image constant for n = 1)."""
        return min(b.image_length for b in self.branches)

    def branch_at(self, x: Fraction) -> Branch:
        for b in self.branches:
            if b.lo <= x < b.hi:
                return b
        raise ValueError(f"{x} outside [0, 1)")

    def apply(self, x: Fraction) -> Fraction:
        y = self.branch_at(x).apply(x)
        # Images may touch 1 at a branch endpoint; fold back onto [0, 1).
        return y if y < 1 else y - 1

    def describe(self) -> str:
        parts = [f"[{b.lo},{b.hi}):{b.slope}x+{b.intercept}" for b in self.branches]
        return "piecewise:" + ";".join(parts)


@dataclass(frozen=True)
class IntegerCircleMap:
    """T x = a x mod 1 on the circle, |a| >= 2."""

    a: int

    def __post_init__(self):
        if abs(self.a) < 2:
            raise ValueError(f"multiplier must satisfy |a| >= 2, got {self.a}")

    @property
    def d(self) -> int:
        return 1

    def apply(self, x: Fraction) -> Fraction:
        y = self.a * Fraction(x)
        return y - math.floor(y)

    def as_piecewise(self) -> PiecewiseLinear:
        """The same map written as |a| affine branches on [0, 1)."""
        a = self.a
        if a < 2:
            raise ValueError("piecewise form implemented for a >= 2 only")
        br = [
            Branch(Fraction(k, a), Fraction(k + 1, a), Fraction(a), Fraction(-k))
            for k in range(a)
        ]
        return PiecewiseLinear(tuple(br))

    def describe(self) -> str:
        return f"circle:{self.a}"


@dataclass(frozen=True)
class BetaMap:
    """T x = beta * x mod 1 on [0, 1), beta > 1 (possibly irrational)."""

    beta: IrrationalConstant

    def __post_init__(self):
        object.__setattr__(self, "beta", IrrationalConstant.parse(self.beta))
        if float(self.beta) <= 1:
            raise NonExpandingSystemError(f"beta must exceed 1, got {self.beta.label}")

    @property
    def d(self) -> int:
        return 1

    def describe(self) -> str:
        return f"beta:{self.beta.label}"


@dataclass(frozen=True)
class ToralLinear:
    """T x = A x mod 1 on the d-torus, A an integer matrix with det != 0."""

    A: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.A)
        object.__setattr__(self, "A", rows)
        d = len(rows)
        if d == 0 or any(len(row) != d for row in rows):
            raise ConfigError(["matrix must be square and non-empty"])
        if _int_det(rows) == 0:
            raise ConfigError(["matrix must be invertible (det != 0)"])

    @property
    def d(self) -> int:
        return len(self.A)

    def apply(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        out = []
        for row in self.A:
            y = sum(Fraction(c) * Fraction(v) for c, v in zip(row, x))
            out.append(y - math.floor(y))
        return tuple(out)

    def describe(self) -> str:
        return "toral:" + ";".join(",".join(str(v) for v in row) for row in self.A)


@dataclass(frozen=True)
class Rotation:
    """T x = x + alpha mod 1; the isometric contrast system."""

    alpha: IrrationalConstant

    def __post_init__(self):
        object.__setattr__(self, "alpha", IrrationalConstant.parse(self.alpha))

    @property
    def d(self) -> int:
        return 1

    def describe(self) -> str:
        return f"rotation:{self.alpha.label}"


SystemSpec = IntegerCircleMap | BetaMap | PiecewiseLinear | ToralLinear | Rotation


def _int_det(rows: tuple[tuple[int, ...], ...]) -> int:
    """Integer determinant by fraction-free expansion (matrices are small)."""
    d = len(rows)
    if d == 1:
        return rows[0][0]
    total = 0
    first = rows[0]
    minors = rows[1:]
    for col in range(d):
        sub = tuple(tuple(r[c] for c in range(d) if c != col) for r in minors)
        term = first[col] * _int_det(sub)
        total += term if col % 2 == 0 else -term
    return total
