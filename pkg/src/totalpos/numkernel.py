"""Arbitrary-precision scalars, determinants, minors and sign classification.

Every numeric routine in the package takes a :class:`PrecisionContext`.  The
context is a plain value; the mpmath context backing it is created per thread
and per digit count, so no routine ever mutates shared precision state.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import mpmath
from mpmath.ctx_mp import MPContext

__all__ = [
    "PrecisionContext",
    "PrecisionMismatchError",
    "DescendingTuple",
    "KernelMatrix",
    "Sign",
    "det",
    "det_exact",
    "minor",
    "minor_exact",
    "sign_classify",
    "iter_minor_indices",
    "row_norm_product",
]

_local = threading.local()


def _mp_for(digits: int) -> MPContext:
    cache = getattr(_local, "contexts", None)
    if cache is None:
        cache = _local.contexts = {}
    ctx = cache.get(digits)
    if ctx is None:
        ctx = MPContext()
        ctx.dps = digits
        cache[digits] = ctx
    return ctx


class PrecisionMismatchError(ValueError):
    """Two big scalars carry different working precisions."""


@dataclass(frozen=True)
class PrecisionContext:
    digits: int = 120
    sign_tol_exponent: int | None = None

    def __post_init__(self):
        if self.digits < 50:
            raise ValueError(f"digits must be >= 50, got {self.digits}")
        if self.sign_tol_exponent is None:
            object.__setattr__(self, "sign_tol_exponent", self.digits // 2)
        if not 0 < self.sign_tol_exponent < self.digits:
            raise ValueError("sign_tol_exponent must lie in (0, digits)")

    @property
    def mp(self) -> MPContext:
        """The thread-local mpmath context at this precision."""
        return _mp_for(self.digits)

    def guarded(self, extra: int) -> PrecisionContext:
        """Same context with ``extra`` more digits (tolerance exponent kept)."""
        return PrecisionContext(self.digits + extra, self.sign_tol_exponent)

    @property
    def zero_threshold(self):
        return self.mp.mpf(10) ** (-self.sign_tol_exponent)

    def eps(self, exponent: int):
        """``10**exponent`` at working precision."""
        return self.mp.mpf(10) ** exponent

    def big(self, value):
        """Convert ``value`` into a scalar of this context.

        Strings are parsed as exact decimals, Fractions divided at working
        precision.  Big scalars from a context of a different digit count are
        rejected; use :meth:`rebind` to change precision deliberately.
        """
        if hasattr(value, "_mpf_"):
            other = getattr(value, "context", None)
            if other is not None and other.dps != self.digits:
                raise PrecisionMismatchError(
                    f"scalar at {other.dps} digits used in a {self.digits}-digit context"
                )
            return self.mp.mpf(value)
        if isinstance(value, Fraction):
            return self.mp.mpf(value.numerator) / value.denominator
        if isinstance(value, bool):
            raise TypeError("booleans are not scalars")
        if isinstance(value, (int, float, str)):
            return self.mp.mpf(value)
        raise TypeError(f"cannot convert {type(value).__name__} to a big scalar")

    def rebind(self, value):
        """Round a big scalar of any precision into this context."""
        if hasattr(value, "_mpf_"):
            return self.mp.mpf(value)
        return self.big(value)

    def fmt(self, value, digits: int | None = None) -> str:
        return mpmath.nstr(value, digits or self.digits, min_fixed=-5, max_fixed=8)


def _digits_of(x) -> int | None:
    ctx = getattr(x, "context", None)
    return None if ctx is None else ctx.dps


class Sign(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    ZERO = 0

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class DescendingTuple:
    """Strictly decreasing finite sequence of big scalars."""

    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        for a, b in zip(vals, vals[1:]):
            if not a > b:
                raise ValueError(f"values must be strictly decreasing: {a} !> {b}")

    @classmethod
    def of(cls, ctx: PrecisionContext, values: Iterable) -> DescendingTuple:
        return cls(tuple(ctx.big(v) for v in values))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class KernelMatrix:
    """Grid ``entries[i][j] = w(rows[i], cols[j])`` on descending grids."""

    rows: DescendingTuple
    cols: DescendingTuple
    entries: tuple = field(repr=False)

    def __post_init__(self):
        entries = tuple(tuple(r) for r in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) != len(self.rows) or any(len(r) != len(self.cols) for r in entries):
            raise ValueError("entries do not match rows x cols")

    @property
    def shape(self):
        return len(self.rows), len(self.cols)


def _grid(m) -> list[list]:
    entries = m.entries if isinstance(m, KernelMatrix) else m
    return [list(r) for r in entries]


def _check_square(grid) -> int:
    n = len(grid)
    if n == 0 or any(len(r) != n for r in grid):
        raise ValueError("determinant needs a non-empty square matrix")
    return n


def _common_mp(grid, ctx: PrecisionContext | None) -> MPContext:
    seen = {_digits_of(x) for row in grid for x in row} - {None}
    if ctx is not None:
        seen.add(ctx.digits)
    if len(seen) > 1:
        raise PrecisionMismatchError(f"matrix mixes precisions {sorted(seen)}")
    if not seen:
        raise TypeError("matrix entries must be big scalars (use det_exact for rationals)")
    return _mp_for(seen.pop())


def det(m, ctx: PrecisionContext | None = None):
    """Determinant by Gaussian elimination with partial pivoting.

    Entries must all come from one precision context.  The pivot rule (largest
    magnitude, lowest index on ties) makes the result reproducible bit for bit.
    """
    grid = _grid(m)
    n = _check_square(grid)
    mp = _common_mp(grid, ctx)
    a = [[mp.mpf(x) for x in row] for row in grid]
    result = mp.one
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        if a[p][k] == 0:
            return mp.zero
        if p != k:
            a[k], a[p] = a[p], a[k]
            result = -result
        pivot = a[k][k]
        result *= pivot
        for i in range(k + 1, n):
            factor = a[i][k] / pivot
            if factor:
                row_i, row_k = a[i], a[k]
                for j in range(k + 1, n):
                    row_i[j] -= factor * row_k[j]
    return result


def det_exact(m) -> Fraction:
    """Exact determinant of a rational matrix (fraction elimination)."""
    a = [[Fraction(x) for x in row] for row in _grid(m)]
    n = _check_square(a)
    result = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if a[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            a[k], a[p] = a[p], a[k]
            result = -result
        pivot = a[k][k]
        result *= pivot
        for i in range(k + 1, n):
            factor = a[i][k] / pivot
            if factor:
                for j in range(k + 1, n):
                    a[i][j] -= factor * a[k][j]
    return result


def _submatrix(m, row_indices: Sequence[int], col_indices: Sequence[int]):
    grid = _grid(m)
    if len(row_indices) != len(col_indices):
        raise ValueError("row and column index lists differ in length")
    if not row_indices:
        raise ValueError("empty index list")
    for idx, bound in ((row_indices, len(grid)), (col_indices, len(grid[0]) if grid else 0)):
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("index lists must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= bound:
            raise IndexError(f"index out of range 0..{bound - 1}")
    return [[grid[i][j] for j in col_indices] for i in row_indices]


def minor(m, row_indices: Sequence[int], col_indices: Sequence[int], ctx: PrecisionContext | None = None):
    return det(_submatrix(m, row_indices, col_indices), ctx)


def minor_exact(m, row_indices: Sequence[int], col_indices: Sequence[int]) -> Fraction:
    return det_exact(_submatrix(m, row_indices, col_indices))


def iter_minor_indices(nrows: int, ncols: int, max_order: int | None = None) -> Iterator[tuple]:
    """All (rows, cols) index pairs, smallest minors first."""
    top = min(nrows, ncols) if max_order is None else min(max_order, nrows, ncols)
    for s in range(1, top + 1):
        for rows in combinations(range(nrows), s):
            for cols in combinations(range(ncols), s):
                yield rows, cols


def row_norm_product(grid, mp: MPContext):
    """Hadamard bound: product of Euclidean row norms (|det| never exceeds it)."""
    scale = mp.one
    for row in grid:
        scale *= mp.sqrt(mp.fsum(x * x for x in row))
    return scale


def sign_classify(v, scale, ctx: PrecisionContext) -> Sign:
    """Sign of ``v``; zero when ``|v| < 10**-sign_tol_exponent * scale``."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    if abs(v) < ctx.zero_threshold * scale:
        return Sign.ZERO
    return Sign.POSITIVE if v > 0 else Sign.NEGATIVE
