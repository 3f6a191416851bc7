"""Stirling numbers, Bell polynomials, Schur functions and power matrices."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import prod
from typing import Sequence

from .numkernel import DescendingTuple, KernelMatrix, PrecisionContext, det, det_exact

__all__ = [
    "Partition",
    "StirlingTriangle",
    "stirling2",
    "bell_poly",
    "bell_eval",
    "bell_eval_poisson",
    "btilde",
    "schur",
    "power_matrix",
    "binet_cauchy_discrete_check",
]

K_MAX_DEFAULT = 64


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if any(p < 0 for p in parts):
            raise ValueError("partition parts must be nonnegative")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"partition parts must be weakly decreasing: {parts}")

    def __len__(self):
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)


class StirlingTriangle:
    """Table of S(k, m), 0 <= m <= k <= k_max, built eagerly at construction."""

    def __init__(self, k_max: int = K_MAX_DEFAULT):
        if k_max < 0:
            raise ValueError("k_max must be nonnegative")
        self.k_max = k_max
        rows = [(1,)]
        for k in range(1, k_max + 1):
            prev = rows[-1]
            row = [0] * (k + 1)
            for m in range(1, k + 1):
                above = prev[m] if m < len(prev) else 0
                row[m] = m * above + prev[m - 1]
            rows.append(tuple(row))
        self._rows = tuple(rows)

    def __call__(self, k: int, m: int) -> int:
        if k < 0 or m < 0:
            raise ValueError("Stirling indices must be nonnegative")
        if k > self.k_max:
            raise IndexError(f"k={k} beyond table size {self.k_max}")
        return self._rows[k][m] if m <= k else 0

    def row(self, k: int) -> tuple[int, ...]:
        return self._rows[k]


@lru_cache(maxsize=8)
def _triangle(k_max: int) -> StirlingTriangle:
    return StirlingTriangle(k_max)


def stirling2(k: int, m: int) -> int:
    """Stirling number of the second kind S(k, m) as an exact integer."""
    size = K_MAX_DEFAULT
    while size < k:
        size *= 2
    return _triangle(size)(k, m)


def bell_poly(k: int) -> tuple[int, ...]:
    """Coefficients ``(c_0, ..., c_k)`` of the Bell polynomial B_k(u)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return tuple(stirling2(k, m) for m in range(k + 1))


def _horner(coeffs: Sequence[int], u, mp):
    acc = mp.zero
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def bell_eval(ctx: PrecisionContext, k: int, u):
    return _horner(bell_poly(k), ctx.big(u), ctx.mp)


def bell_eval_poisson(ctx: PrecisionContext, k: int, u, terms: int | None = None):
    """``sum_m e^{-u} u^m m^k / m!``, the k-th moment of a Poisson(u) variable.

    With ``terms=None`` the sum runs until the terms, past their peak, fall
    below working precision relative to the partial sum.
    """
    mp = ctx.mp
    u = ctx.big(u)
    if not u > 0:
        raise ValueError("u must be positive")
    total = mp.zero
    weight = mp.exp(-u)  # e^{-u} u^m / m!
    m = 0
    while True:
        term = weight * m**k if m or k == 0 else mp.zero
        total += term
        m += 1
        if terms is not None:
            if m >= terms:
                return total
        elif m > k + u and term < mp.eps * total * mp.mpf(2) ** -10:
            return total
        weight = weight * u / m


def btilde(ctx: PrecisionContext, k: int, lam):
    """``lambda^k B_k(1/lambda) = sum_{m<k} S(k, k-m) lambda^m``; ``B~_0 = 1``."""
    lam = ctx.big(lam)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if k == 0:
        return ctx.mp.one
    return _horner([stirling2(k, k - m) for m in range(k)], lam, ctx.mp)


def schur(ctx: PrecisionContext, theta: Partition | Sequence[int], t: Sequence):
    """Schur function by the bialternant quotient ``det(t_j^(theta_i+m-i)) / prod(t_i - t_j)``."""
    if not isinstance(theta, Partition):
        theta = Partition(tuple(theta))
    m = len(theta)
    if len(t) != m:
        raise ValueError(f"need {m} arguments, got {len(t)}")
    mp = ctx.mp
    ts = [ctx.big(v) for v in t]
    if any(not v > 0 for v in ts):
        raise ValueError("Schur arguments must be positive")
    floor = ctx.eps(-(ctx.digits // 4))
    for a, b in combinations(ts, 2):
        if abs(a - b) < floor * max(abs(a), abs(b)):
            raise ValueError("Schur arguments must be pairwise distinct")
    if m == 0:
        return mp.one
    exps = [theta.parts[i] + m - 1 - i for i in range(m)]
    num = det([[mp.power(tj, e) for tj in ts] for e in exps])
    den = mp.one
    for i, j in combinations(range(m), 2):
        den *= ts[i] - ts[j]
    return num / den


def power_matrix(lams: DescendingTuple, xs: DescendingTuple) -> KernelMatrix:
    """Kernel matrix with entries ``lambda_i ** x_j`` (lambdas positive)."""
    if any(not v > 0 for v in lams):
        raise ValueError("power_matrix needs positive lambdas")
    entries = [[lam ** x for x in xs] for lam in lams]
    return KernelMatrix(lams, xs, entries)


def binet_cauchy_discrete_check(A, B, nu) -> bool:
    """Exact check of ``det(A diag(nu) B) = sum_S det(A[:,S]) det(B[S,:]) prod nu[S]``."""
    A = [[Fraction(x) for x in row] for row in A]
    B = [[Fraction(x) for x in row] for row in B]
    nu = [Fraction(x) for x in nu]
    n, p = len(A), len(nu)
    if any(len(r) != p for r in A) or len(B) != p or any(len(r) != n for r in B):
        raise ValueError("need A n x p, B p x n and p weights")
    if p < n:
        raise ValueError("Binet-Cauchy needs p >= n")
    lhs = det_exact(
        [[sum(A[i][m] * B[m][j] * nu[m] for m in range(p)) for j in range(n)] for i in range(n)]
    )
    rhs = Fraction(0)
    for S in combinations(range(p), n):
        a = det_exact([[A[i][m] for m in S] for i in range(n)])
        if a:
            b = det_exact([[B[m][j] for j in range(n)] for m in S])
            rhs += a * b * prod((nu[m] for m in S), start=Fraction(1))
    return lhs == rhs
