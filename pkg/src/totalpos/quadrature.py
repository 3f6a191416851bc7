"""Adaptive Gauss-Legendre quadrature at arbitrary precision.

Integrands are vector valued: ``fn(x)`` returns a list, so several moments that
share expensive weight and density evaluations are integrated together.  A
panel is accepted when the 48- and 96-point rules agree for every component.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath.calculus.quadrature import GaussLegendre

from .numkernel import PrecisionContext

__all__ = [
    "QuadratureError",
    "Panel",
    "QuadResult",
    "gl_nodes",
    "integrate",
    "integrate_semi_infinite",
    "tensor_on_triangle",
]

DEGREE = 5  # mpmath degree d means 3 * 2**(d-1) nodes: 48 here, 96 for the check
MAX_DEPTH = 220


class QuadratureError(ArithmeticError):
    """An integral could not be resolved to the requested tolerance."""


def gl_nodes(mp, degree: int = DEGREE):
    """Cached ``(node, weight)`` pairs on [-1, 1] for a given mpmath context."""
    cache = mp.__dict__.setdefault("_totalpos_gl", {})
    nodes = cache.get(degree)
    if nodes is None:
        nodes = GaussLegendre(mp).calc_nodes(degree, mp.prec)
        nodes.sort(key=lambda t: t[0])
        cache[degree] = nodes = tuple(nodes)
    return nodes


@dataclass(frozen=True)
class Panel:
    a: object
    b: object


@dataclass(frozen=True)
class QuadResult:
    values: tuple
    panels: tuple
    upper: object  # truncation point actually used


def _rule(fn, a, b, nodes, dim):
    half = (b - a) / 2
    mid = (a + b) / 2
    acc = [0] * dim
    for t, w in nodes:
        vals = fn(mid + half * t)
        for k in range(dim):
            acc[k] += w * vals[k]
    return [half * v for v in acc]


def _adapt(fn, a, b, dim, mp, abs_tol, out_panels, depth=0):
    coarse = _rule(fn, a, b, gl_nodes(mp, DEGREE), dim)
    fine = _rule(fn, a, b, gl_nodes(mp, DEGREE + 1), dim)
    if all(abs(f - c) <= t for f, c, t in zip(fine, coarse, abs_tol)):
        out_panels.append(Panel(a, b))
        return fine
    if depth >= MAX_DEPTH:
        raise QuadratureError(f"panel [{mp.nstr(a, 8)}, {mp.nstr(b, 8)}] did not converge")
    m = (a + b) / 2
    left = _adapt(fn, a, m, dim, mp, abs_tol, out_panels, depth + 1)
    right = _adapt(fn, m, b, dim, mp, abs_tol, out_panels, depth + 1)
    return [x + y for x, y in zip(left, right)]


def _cuts(a, b, breakpoints):
    inner = sorted({p for p in breakpoints if a < p < b})
    return [a, *inner, b]


def integrate(fn, a, b, ctx: PrecisionContext, rel_tol=None, breakpoints=(), dim: int = 1,
              scale=None) -> QuadResult:
    """Integrate a vector-valued ``fn`` over ``[a, b]``.

    ``breakpoints`` become panel boundaries so jumps never sit inside a panel.
    Each component is resolved to ``rel_tol`` times its own magnitude, or times
    ``scale`` when given.
    """
    mp = ctx.mp
    a, b = ctx.big(a), ctx.big(b)
    rel_tol = ctx.eps(-(ctx.digits // 2)) if rel_tol is None else ctx.big(rel_tol)
    cuts = _cuts(a, b, [ctx.big(p) for p in breakpoints])
    pieces = list(zip(cuts, cuts[1:]))
    rough = [_rule(fn, lo, hi, gl_nodes(mp, DEGREE), dim) for lo, hi in pieces]
    if scale is None:
        scale = [sum(abs(r[k]) for r in rough) for k in range(dim)]
    # a component whose rough size is zero gets an absolute target
    abs_tol = [rel_tol * (s if s > 0 else 1) / 8 for s in scale]
    panels: list = []
    total = [mp.zero] * dim
    for lo, hi in pieces:
        part = _adapt(fn, lo, hi, dim, mp, abs_tol, panels)
        total = [t + p for t, p in zip(total, part)]
    return QuadResult(tuple(total), tuple(panels), b)


def integrate_semi_infinite(fn, a, ctx: PrecisionContext, rel_tol=None, breakpoints=(),
                            dim: int = 1, first_width=1, max_doublings: int = 64) -> QuadResult:
    """Integrate over ``[a, inf)`` by appending panels ``[T, 2T]`` until the tail is negligible.

    The truncation stops once the latest block contributes less than
    ``rel_tol/100`` of every component and has shrunk relative to the block
    before it.  Failing that within ``max_doublings`` the integral is reported
    as non-convergent.
    """
    mp = ctx.mp
    rel_tol = ctx.eps(-(ctx.digits // 2)) if rel_tol is None else ctx.big(rel_tol)
    a = ctx.big(a)
    bps = sorted(p for p in map(ctx.big, breakpoints) if p > a)
    upper = max([a + ctx.big(first_width), *(p * 2 for p in bps)])
    head = integrate(fn, a, upper, ctx, rel_tol, bps, dim)
    total = list(head.values)
    panels = list(head.panels)
    prev = [abs(v) for v in total]
    for _ in range(max_doublings):
        nxt = upper * 2 - a
        scale = [abs(t) if t else mp.one for t in total]
        block = integrate(fn, upper, nxt, ctx, rel_tol, bps, dim, scale=scale)
        total = [t + v for t, v in zip(total, block.values)]
        panels.extend(block.panels)
        upper = nxt
        size = [abs(v) for v in block.values]
        small = all(s <= rel_tol * (abs(t) if t else 1) / 100 for s, t in zip(size, total))
        shrinking = all(s <= p for s, p in zip(size, prev))
        if small and shrinking:
            return QuadResult(tuple(total), tuple(panels), upper)
        prev = size
    raise QuadratureError("integral over [a, inf) did not settle; the integrand may not decay")


def tensor_on_triangle(kernel, panels, ctx: PrecisionContext):
    """``int int_{x1 > x2} kernel(x1, x2) dx2 dx1`` over the union of panels.

    Off-diagonal cells ``P_i x P_j`` (i > j) use the tensor 48-point rule.  A
    diagonal cell's triangle ``a < x2 < x1 < b`` is mapped to a square by
    ``x2 = a + (x1 - a) t`` with Jacobian ``x1 - a``.  ``kernel`` takes lists of
    nodes and returns the matrix of values, so callers can vectorize.
    """
    mp = ctx.mp
    nodes = gl_nodes(mp, DEGREE)
    mapped = []
    for p in panels:
        half, mid = (p.b - p.a) / 2, (p.a + p.b) / 2
        mapped.append(([mid + half * t for t, _ in nodes], [half * w for _, w in nodes]))
    total = mp.zero
    for i, (xi, wi) in enumerate(mapped):
        for j in range(i):
            xj, wj = mapped[j]
            vals = kernel(xi, xj)
            for r, row in enumerate(vals):
                total += wi[r] * mp.fdot(wj, row)
        a = panels[i].a
        unit = [((t + 1) / 2, w / 2) for t, w in nodes]
        for r, x1 in enumerate(xi):
            x2s = [a + (x1 - a) * t for t, _ in unit]
            row = kernel([x1], x2s)[0]
            total += wi[r] * (x1 - a) * mp.fdot([w for _, w in unit], row)
    return total
