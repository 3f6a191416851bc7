"""Slow exact oracles used only by the tests."""

from functools import lru_cache
from itertools import combinations

import sympy


def partitions(total: int, parts: int):
    """Weakly decreasing tuples of ``parts`` nonnegative ints summing to ``total``."""

    def rec(remaining, slots, cap):
        if slots == 0:
            if remaining == 0:
                yield ()
            return
        for first in range(min(remaining, cap), -1, -1):
            for rest in rec(remaining - first, slots - 1, first):
                yield (first,) + rest

    return list(rec(total, parts, total))


@lru_cache(maxsize=None)
def schur_monomials(theta: tuple):
    """Monomial expansion of the Schur function as {exponent tuple: coefficient}."""
    m = len(theta)
    t = sympy.symbols(f"t0:{m}")
    num = sympy.Matrix(m, m, lambda i, j: t[j] ** (theta[i] + m - 1 - i)).det()
    den = sympy.prod([t[i] - t[j] for i, j in combinations(range(m), 2)])
    poly = sympy.Poly(sympy.cancel(num / den), *t) if m else sympy.Poly(1, sympy.Symbol("z"))
    return {exps: int(c) for exps, c in poly.terms()}, t


def eval_monomials(expansion: dict, point):
    total = 0
    for exps, c in expansion.items():
        term = c
        for x, e in zip(point, exps):
            term *= x**e
        total += term
    return total


def set_partitions(n: int, blocks: int) -> int:
    """Count set partitions of {0..n-1} into ``blocks`` nonempty blocks by enumeration."""

    def rec(i, labels, used):
        if i == n:
            return int(used == blocks)
        count = 0
        for b in range(min(used + 1, blocks)):
            count += rec(i + 1, labels + [b], max(used, b + 1))
        return count

    return rec(0, [], 0)
