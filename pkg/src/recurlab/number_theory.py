"""Arithmetic behind the exact correlation estimates.

Three ingredients: the gcd identity gcd(a^m - 1, a^n - 1) = a^gcd(m,n) - 1,
the integer solution lattices of k(a^m - 1) + l(a^n - 1) = 0 and of its
matrix analogue (B^m - I)k = (B^n - I)l, and the Bezout-polynomial identity
u(x)(1 + ... + x^(m-1)) + v(x)(1 + ... + x^(n-1)) = 1 for coprime m, n that
underlies the matrix lattice proof.

All integer matrix work is exact (unbounded Python ints / Fractions);
brute-force enumerators double as completeness oracles in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EigenvalueLocationError, RootOfUnityError

Matrix = tuple[tuple[int, ...], ...]
Vector = tuple[int, ...]


# ---------------------------------------------------------------------------
# gcd identity
# ---------------------------------------------------------------------------

def gcd_mersenne(a: int, m: int, n: int) -> int:
    """gcd(a^m - 1, a^n - 1), which always equals a^gcd(m,n) - 1."""
    if a < 2:
        raise ValueError(f"base must be >= 2, got {a}")
    if m < 1 or n < 1:
        raise ValueError("exponents must be positive")
    g = math.gcd(a ** m - 1, a ** n - 1)
    expected = a ** math.gcd(m, n) - 1
    if g != expected:
        raise AssertionError(
            f"gcd identity violated at a={a}, m={m}, n={n}: {g} != {expected}"
        )
    return g


# ---------------------------------------------------------------------------
# Scalar solution lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarLattice:
    """All integer solutions of k(a^m - 1) + l(a^n - 1) = 0.

    They form the rank-1 lattice {(k0*j, l0*j) : j integer} with primitive
    generator k0 = (a^n - 1)/(a^p - 1), l0 = -(a^m - 1)/(a^p - 1), where
    p = gcd(m, n) so the common factor a^p - 1 is exactly the gcd.
    """

    a: int
    m: int
    n: int
    p: int
    k0: int
    l0: int

    def pair(self, j: int) -> tuple[int, int]:
        return (self.k0 * j, self.l0 * j)

    def is_solution(self, k: int, l: int) -> bool:
        return k * (self.a ** self.m - 1) + l * (self.a ** self.n - 1) == 0

    def solve_j(self, k: int, l: int) -> int | None:
        """The j with (k, l) = (k0*j, l0*j), or None if off the lattice."""
        if k % self.k0 != 0:
            return None
        j = k // self.k0
        return j if self.l0 * j == l else None


def scalar_lattice(a: int, m: int, n: int) -> ScalarLattice:
    if a < 2:
        raise ValueError(f"base must be >= 2, got {a}")
    if m == n:
        raise ValueError("degenerate equation: m and n must differ")
    if m < 1 or n < 1:
        raise ValueError("exponents must be positive")
    p = math.gcd(m, n)
    g = a ** p - 1
    k0 = (a ** n - 1) // g
    l0 = -((a ** m - 1) // g)
    lat = ScalarLattice(a, m, n, p, k0, l0)
    assert lat.is_solution(k0, l0)
    return lat


def scalar_lattice_bruteforce(a: int, m: int, n: int, bound: int) -> list[tuple[int, int]]:
    """All (k, l) with |k|, |l| <= bound solving k(a^m-1) + l(a^n-1) = 0."""
    if 2 * bound + 1 > 10 ** 6:
        raise ValueError(f"brute-force bound {bound} too large")
    A = a ** m - 1
    B = a ** n - 1
    out = []
    for k in range(-bound, bound + 1):
        num = -k * A
        if num % B == 0:
            l = num // B
            if abs(l) <= bound:
                out.append((k, l))
    return out


# ---------------------------------------------------------------------------
# Bezout polynomials for geometric sums
# ---------------------------------------------------------------------------

Poly = tuple[int, ...]  # coefficient c_i of x^i


def poly_trim(c: Sequence[int]) -> Poly:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_add(p: Poly, q: Poly) -> Poly:
    out = [0] * max(len(p), len(q))
    for i, v in enumerate(p):
        out[i] += v
    for i, v in enumerate(q):
        out[i] += v
    return poly_trim(out)


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [0] * (len(p) + len(q) - 1)
    for i, pv in enumerate(p):
        if pv:
            for k, qv in enumerate(q):
                out[i + k] += pv * qv
    return poly_trim(out)


def poly_shift(p: Poly, d: int) -> Poly:
    """Multiply by x^d."""
    return poly_trim((0,) * d + tuple(p)) if p else ()


def geometric_sum_poly(m: int) -> Poly:
    """1 + x + ... + x^(m-1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return (1,) * m


def bezout_polynomials(m: int, n: int) -> tuple[Poly, Poly]:
    """Integer polynomials (u, v) with u*S_m + v*S_n = 1 for coprime m, n,
    where S_m = 1 + x + ... + x^(m-1).

    Built by the Euclidean descent S_m = x^(m-n) * S_n + S_(m-n): a Bezout
    pair for (m - n, n) pulls back via v -> v - x^(m-n) * u.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if math.gcd(m, n) != 1:
        raise ValueError(f"m={m} and n={n} must be coprime")

    def descend(m: int, n: int) -> tuple[Poly, Poly]:
        if m == n:  # both 1
            return ((1,), ())
        if m < n:
            v, u = descend(n, m)
            return (u, v)
        u, v = descend(m - n, n)
        return (u, poly_add(v, tuple(-c for c in poly_shift(u, m - n))))

    u, v = descend(m, n)
    check = poly_add(poly_mul(u, geometric_sum_poly(m)), poly_mul(v, geometric_sum_poly(n)))
    if check != (1,):
        raise AssertionError(f"Bezout identity failed for m={m}, n={n}: got {check}")
    return u, v


# ---------------------------------------------------------------------------
# Exact integer matrix helpers
# ---------------------------------------------------------------------------

def mat_identity(d: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    cols = tuple(zip(*B))
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in A)


def mat_pow(A: Matrix, e: int) -> Matrix:
    result = mat_identity(len(A))
    base = A
    while e:
        if e & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        e >>= 1
    return result


def mat_vec(A: Matrix, v: Sequence) -> tuple:
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def mat_det(A: Matrix):
    """Exact determinant by cofactor expansion (matrices here are tiny)."""
    d = len(A)
    if d == 1:
        return A[0][0]
    total = 0
    for col in range(d):
        sub = tuple(tuple(r[c] for c in range(d) if c != col) for r in A[1:])
        term = A[0][col] * mat_det(sub)
        total += term if col % 2 == 0 else -term
    return total


def solve_exact(A: Matrix, b: Sequence) -> tuple[Fraction, ...] | None:
    """Solve A x = b over the rationals (Gaussian elimination); None if singular."""
    d = len(A)
    aug = [[Fraction(v) for v in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    for col in range(d):
        pivot = next((r for r in range(col, d) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(d):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [v - factor * w for v, w in zip(aug[r], aug[col])]
    return tuple(row[-1] for row in aug)


def check_no_root_of_unity(B: Matrix, q_bound: int | None = None) -> None:
    """Raise if some eigenvalue of B is a root of unity.

    A degree-d integer matrix can only have primitive k-th roots of unity
    with Euler phi(k) <= d, hence k <= 2*d^2; testing det(B^q - I) != 0 for
    all q up to that bound is therefore a complete check.
    """
    d = len(B)
    if q_bound is None:
        q_bound = 2 * d * d
    I = mat_identity(d)
    P = I
    for q in range(1, q_bound + 1):
        P = mat_mul(P, B)
        if mat_det(mat_sub(P, I)) == 0:
            raise RootOfUnityError(q)


# ---------------------------------------------------------------------------
# Matrix solution lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixLattice:
    """All integer-vector solutions of (B^m - I)k = (B^n - I)l.

    They are parametrized by a free integer vector j:
    k = (I + B^p + ... + B^(n-p)) j and l = (I + B^p + ... + B^(m-p)) j,
    with p = gcd(m, n) -- both generators are geometric sums in B^p.
    """

    B: Matrix
    m: int
    n: int
    p: int
    K_gen: Matrix
    L_gen: Matrix

    @property
    def d(self) -> int:
        return len(self.B)

    def pair(self, j: Sequence[int]) -> tuple[Vector, Vector]:
        return (mat_vec(self.K_gen, j), mat_vec(self.L_gen, j))

    def is_solution(self, k: Sequence[int], l: Sequence[int]) -> bool:
        I = mat_identity(self.d)
        lhs = mat_vec(mat_sub(mat_pow(self.B, self.m), I), k)
        rhs = mat_vec(mat_sub(mat_pow(self.B, self.n), I), l)
        return lhs == rhs

    def solve_j(self, k: Sequence[int]) -> Vector | None:
        """The integer j with k = K_gen j, or None if there is none."""
        x = solve_exact(self.K_gen, k)
        if x is None or any(f.denominator != 1 for f in x):
            return None
        return tuple(int(f) for f in x)


def _geometric_sum_matrix(B: Matrix, p: int, top: int) -> Matrix:
    """I + B^p + B^(2p) + ... + B^top (top a multiple of p, possibly 0)."""
    acc = mat_identity(len(B))
    Bp = mat_pow(B, p)
    P = mat_identity(len(B))
    for _ in range(top // p):
        P = mat_mul(P, Bp)
        acc = mat_add(acc, P)
    return acc


def matrix_lattice(B, m: int, n: int) -> MatrixLattice:
    B = tuple(tuple(int(v) for v in row) for row in B)
    if m == n:
        raise ValueError("degenerate equation: m and n must differ")
    if m < 1 or n < 1:
        raise ValueError("exponents must be positive")
    check_no_root_of_unity(B)
    p = math.gcd(m, n)
    K = _geometric_sum_matrix(B, p, n - p)
    Lg = _geometric_sum_matrix(B, p, m - p)
    I = mat_identity(len(B))
    lhs = mat_mul(mat_sub(mat_pow(B, m), I), K)
    rhs = mat_mul(mat_sub(mat_pow(B, n), I), Lg)
    if lhs != rhs:
        raise AssertionError(f"lattice generator identity failed for m={m}, n={n}")
    return MatrixLattice(B, m, n, p, K, Lg)


def _box_vectors(d: int, box: int):
    if (2 * box + 1) ** d > 10 ** 6:
        raise ValueError(f"box {box} too large for dimension {d}")
    if d == 1:
        for v in range(-box, box + 1):
            yield (v,)
    else:
        for v in range(-box, box + 1):
            for rest in _box_vectors(d - 1, box):
                yield (v,) + rest


def matrix_lattice_bruteforce(B, m: int, n: int, box: int) -> list[tuple[Vector, Vector]]:
    """All (k, l) with entries in [-box, box] solving (B^m - I)k = (B^n - I)l.

    Enumerates k only and solves for l exactly, so the work is (2box+1)^d,
    not squared.
    """
    B = tuple(tuple(int(v) for v in row) for row in B)
    d = len(B)
    I = mat_identity(d)
    Am = mat_sub(mat_pow(B, m), I)
    An = mat_sub(mat_pow(B, n), I)
    out = []
    for k in _box_vectors(d, box):
        rhs = mat_vec(Am, k)
        l = solve_exact(An, rhs)
        if l is None or any(f.denominator != 1 for f in l):
            continue
        l = tuple(int(f) for f in l)
        if all(abs(v) <= box for v in l):
            out.append((k, l))
    return out


# ---------------------------------------------------------------------------
# Generator growth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthEstimate:
    """Empirical lower bound on the expansion of the K-generator: every
    sampled nonzero integer j satisfied ||K j|| >= c * lam^(n-p) * ||j||."""

    n: int
    p: int
    min_ratio: float
    lam: float
    c: float
    samples: int


def generator_growth(B, n: int, p: int, sample_count: int, *, seed: int = 0,
                     box: int = 50) -> GrowthEstimate:
    """Minimum of ||K_gen j|| / ||j|| over sampled nonzero integer vectors.

    Requires B hyperbolic (no eigenvalue on the unit circle, at least one
    outside); lam is the smallest expanding eigenvalue modulus, and c is
    fitted so the growth bound c * lam^(n-p) is tight at the sampled
    minimum.
    """
    B = tuple(tuple(int(v) for v in row) for row in B)
    if n < p or n % p != 0:
        raise ValueError("n must be a positive multiple of p")
    moduli = np.abs(np.linalg.eigvals(np.array(B, dtype=float)))
    if np.any(np.abs(moduli - 1.0) < 1e-9):
        raise EigenvalueLocationError("matrix has an eigenvalue on the unit circle")
    expanding = moduli[moduli > 1.0]
    if expanding.size == 0:
        raise EigenvalueLocationError("matrix has no expanding eigenvalue")
    lam = float(expanding.min())
    K = _geometric_sum_matrix(B, p, n - p)
    d = len(B)
    rng = np.random.default_rng(seed)
    min_ratio = math.inf
    seen = 0
    while seen < sample_count:
        j = tuple(int(v) for v in rng.integers(-box, box + 1, size=d))
        if all(v == 0 for v in j):
            continue
        seen += 1
        kj = mat_vec(K, j)
        ratio = math.sqrt(sum(v * v for v in kj) / sum(v * v for v in j))
        min_ratio = min(min_ratio, ratio)
    c = min_ratio / lam ** (n - p)
    return GrowthEstimate(n, p, min_ratio, lam, c, sample_count)
