"""Upper incomplete gamma, its normalized survival form Q and inverse, and the
actuarial ratios R_c(u, v) = Gamma(c+u, v)/Gamma(u, v) and
C_c(u, v) = Q(c+u, Q^{-1}(u, v)), with determinant sign tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .numkernel import DescendingTuple, KernelMatrix, PrecisionContext, Sign, det
from .tpcheck import SignReport, sign_report

__all__ = [
    "GammaPoint",
    "upper_gamma",
    "lower_gamma_regularized",
    "q",
    "q_inverse",
    "gamma_cdf_inverse",
    "ratio_R",
    "ratio_C",
    "ratio_C_cdf_route",
    "DetResult",
    "r_det",
    "r_det_cv",
    "r_det_uv",
    "c_det",
    "c_det_cu",
    "gamma_c_det_cu",
    "scan_c_uv",
]

GUARD = 20


@dataclass(frozen=True)
class GammaPoint:
    u: object
    v: object

    def __post_init__(self):
        if not self.u > 0:
            raise ValueError("shape u must be positive")
        if self.v < 0:
            raise ValueError("truncation point v must be nonnegative")


def _check(u, v):
    if not u > 0:
        raise ValueError(f"shape u must be positive, got {u}")
    if v < 0:
        raise ValueError(f"truncation point v must be nonnegative, got {v}")


def _lower_series(mp, u, v):
    # gamma(u, v) = v^u e^{-v} sum_n v^n / (u (u+1) ... (u+n))
    term = 1 / u
    total = term
    n = 0
    while True:
        n += 1
        term = term * v / (u + n)
        total += term
        if term < mp.eps * total:
            break
    return mp.exp(u * mp.log(v) - v) * total


def _upper_cf(mp, u, v):
    # Legendre continued fraction, modified Lentz
    tiny = mp.mpf(2) ** (-10 * mp.prec)
    b = v + 1 - u
    c = 1 / tiny
    d = 1 / b if b else 1 / tiny
    h = d
    i = 0
    while True:
        i += 1
        an = -i * (i - u)
        b += 2
        d = an * d + b
        if not d:
            d = tiny
        c = b + an / c
        if not c:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < mp.eps:
            break
    return mp.exp(u * mp.log(v) - v) * h


def upper_gamma(ctx: PrecisionContext, u, v):
    """Gamma(u, v) = integral_v^inf x^(u-1) e^(-x) dx.

    Series for v < u + 1, continued fraction otherwise, both at +20 digits.
    """
    u, v = ctx.big(u), ctx.big(v)
    _check(u, v)
    g = ctx.guarded(GUARD)
    mp = g.mp
    ug, vg = g.rebind(u), g.rebind(v)
    if vg == 0:
        out = mp.gamma(ug)
    elif vg < ug + 1:
        out = mp.gamma(ug) - _lower_series(mp, ug, vg)
    else:
        out = _upper_cf(mp, ug, vg)
    return ctx.rebind(out)


def _q_guarded(g: PrecisionContext, u, v):
    mp = g.mp
    if v == 0:
        return mp.one
    if v < u + 1:
        return 1 - _lower_series(mp, u, v) / mp.gamma(u)
    return _upper_cf(mp, u, v) / mp.gamma(u)


def q(ctx: PrecisionContext, u, v):
    """Q(u, v) = Gamma(u, v) / Gamma(u), the gamma survival function."""
    u, v = ctx.big(u), ctx.big(v)
    _check(u, v)
    g = ctx.guarded(GUARD)
    return ctx.rebind(_q_guarded(g, g.rebind(u), g.rebind(v)))


def lower_gamma_regularized(ctx: PrecisionContext, u, x):
    """F_u(x) = gamma(u, x)/Gamma(u), the gamma CDF, from the power series alone."""
    u, x = ctx.big(u), ctx.big(x)
    _check(u, x)
    g = ctx.guarded(GUARD)
    mp = g.mp
    if x == 0:
        return ctx.mp.zero
    ug, xg = g.rebind(u), g.rebind(x)
    return ctx.rebind(_lower_series(mp, ug, xg) / mp.gamma(ug))


def _density(mp, u, v):
    return mp.exp((u - 1) * mp.log(v) - v - mp.loggamma(u))


def _invert(ctx, u, p, evaluate, decreasing: bool):
    """Root of evaluate(u, v) = p on [0, inf): bracket, bisect, then Newton."""
    g = ctx.guarded(GUARD)
    mp = g.mp
    ug, pg = g.rebind(u), g.rebind(p)
    sgn = -1 if decreasing else 1

    def resid(v):
        return sgn * (evaluate(g, ug, v) - pg)  # increasing in v

    lo, hi = mp.zero, mp.one
    while resid(hi) < 0:
        lo, hi = hi, hi * 2
    while hi - lo > hi * mp.mpf(10) ** -3:
        mid = (lo + hi) / 2
        if resid(mid) < 0:
            lo = mid
        else:
            hi = mid
    v = (lo + hi) / 2
    tol = ctx.eps(-ctx.digits + 15) * mp.mpf(10) ** -5
    for _ in range(200):
        r = resid(v)
        if abs(r) < tol:
            break
        if r < 0:
            lo = v
        else:
            hi = v
        dens = _density(mp, ug, v)
        step = r / dens if dens else mp.zero
        cand = v - step
        v = cand if lo < cand < hi else (lo + hi) / 2
    return ctx.rebind(v)


def q_inverse(ctx: PrecisionContext, u, p):
    """v >= 0 with Q(u, v) = p, for 0 < p <= 1."""
    u, p = ctx.big(u), ctx.big(p)
    if not u > 0:
        raise ValueError("shape u must be positive")
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if p == 1:
        return ctx.mp.zero
    return _invert(ctx, u, p, _q_guarded, decreasing=True)


def _cdf_guarded(g, u, x):
    if x == 0:
        return g.mp.zero
    return _lower_series(g.mp, u, x) / g.mp.gamma(u)


def gamma_cdf_inverse(ctx: PrecisionContext, u, p):
    """x >= 0 with F_u(x) = p, for 0 <= p < 1 (series-only CDF)."""
    u, p = ctx.big(u), ctx.big(p)
    if not u > 0:
        raise ValueError("shape u must be positive")
    if not 0 <= p < 1:
        raise ValueError(f"p must lie in [0, 1), got {p}")
    if p == 0:
        return ctx.mp.zero
    return _invert(ctx, u, p, _cdf_guarded, decreasing=False)


def ratio_R(ctx: PrecisionContext, c, u, v):
    """R_c(u, v) = Gamma(c+u, v) / Gamma(u, v); R_0 = 1 exactly."""
    c, u, v = ctx.big(c), ctx.big(u), ctx.big(v)
    if c < 0:
        raise ValueError("c must be positive")
    _check(u, v)
    if c == 0:
        return ctx.mp.one
    g = ctx.guarded(GUARD)
    cg, ug, vg = g.rebind(c), g.rebind(u), g.rebind(v)
    num = upper_gamma(g, cg + ug, vg)
    den = upper_gamma(g, ug, vg)
    return ctx.rebind(num / den)


def ratio_C(ctx: PrecisionContext, c, u, v):
    """C_c(u, v) = Q(c+u, Q^{-1}(u, v)); C_c(u, 0) = 0 by the limit v -> 0+."""
    return _CCache(ctx)(c, u, v)


def ratio_C_cdf_route(ctx: PrecisionContext, c, u, v):
    """C_c(u, v) as 1 - F_{c+u}(F_u^{-1}(1 - v)), through the CDF series only."""
    c, u, v = ctx.big(c), ctx.big(u), ctx.big(v)
    if not c > 0 or not u > 0:
        raise ValueError("c and u must be positive")
    if not 0 <= v <= 1:
        raise ValueError(f"v must lie in [0, 1], got {v}")
    if v == 0:
        return ctx.mp.zero
    g = ctx.guarded(GUARD)
    x = gamma_cdf_inverse(g, g.rebind(u), 1 - g.rebind(v))
    return ctx.rebind(1 - lower_gamma_regularized(g, g.rebind(c) + g.rebind(u), x))


@dataclass(frozen=True)
class DetResult:
    """Full determinant of a ratio matrix plus the sign report of all its minors.

    ``expected`` is the sign the theory predicts for the full determinant, or
    ``None`` when nothing is asserted.
    """

    value: object
    report: SignReport
    expected: Sign | None = None

    @property
    def sign(self) -> Sign:
        return self.report.top_sign

    @property
    def matches(self) -> bool | None:
        return None if self.expected is None else self.sign is self.expected


def _result(ctx, rows, cols, fn, expected=None, rr_signed=False) -> DetResult:
    entries = [[fn(a, b) for b in cols] for a in rows]
    m = KernelMatrix(rows, cols, entries)
    report = sign_report(m, ctx, rr_signed=rr_signed)
    return DetResult(det(m, ctx), report, expected)


def _tuple(ctx, values) -> DescendingTuple:
    if isinstance(values, DescendingTuple):
        return DescendingTuple.of(ctx, values.values)
    return DescendingTuple.of(ctx, values)


def r_det(ctx: PrecisionContext, c_tuple, u_tuple, v) -> DetResult:
    """det(R_{c_i}(u_j, v)); strictly positive for descending c, u."""
    cs, us = _tuple(ctx, c_tuple), _tuple(ctx, u_tuple)
    if len(cs) != len(us):
        raise ValueError("c and u tuples differ in length")
    return _result(ctx, cs, us, lambda c, u: ratio_R(ctx, c, u, v), Sign.POSITIVE)


def r_det_cv(ctx: PrecisionContext, c_tuple, u, v_tuple) -> DetResult:
    """det(R_{c_i}(u, v_j)); strictly positive for descending c, v."""
    cs, vs = _tuple(ctx, c_tuple), _tuple(ctx, v_tuple)
    if len(cs) != len(vs):
        raise ValueError("c and v tuples differ in length")
    return _result(ctx, cs, vs, lambda c, v: ratio_R(ctx, c, u, v), Sign.POSITIVE)


def r_det_uv(ctx: PrecisionContext, c, u_tuple, v_tuple) -> DetResult:
    """det(R_c(u_i, v_j)) for r <= 3: negative at r = 2, reported only at r = 3."""
    us, vs = _tuple(ctx, u_tuple), _tuple(ctx, v_tuple)
    if len(us) != len(vs):
        raise ValueError("u and v tuples differ in length")
    r = len(us)
    if r > 3:
        raise ValueError("only orders 1 to 3 are supported in (u, v)")
    expected = {1: Sign.POSITIVE, 2: Sign.NEGATIVE}.get(r)
    return _result(ctx, us, vs, lambda u, v: ratio_R(ctx, c, u, v), expected, rr_signed=True)


class _CCache:
    """C_c(u, v) with Q^{-1}(u, v) computed once per (u, v) pair."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.g = ctx.guarded(GUARD)
        self._t = {}

    def __call__(self, c, u, v):
        ctx, g = self.ctx, self.g
        c, u, v = ctx.big(c), ctx.big(u), ctx.big(v)
        if not c > 0 or not u > 0:
            raise ValueError("c and u must be positive")
        if not 0 <= v <= 1:
            raise ValueError(f"v must lie in [0, 1], got {v}")
        if v == 0:
            return ctx.mp.zero
        key = (u, v)
        t = self._t.get(key)
        if t is None:
            t = self._t[key] = q_inverse(g, g.rebind(u), g.rebind(v))
        return ctx.rebind(q(g, g.rebind(c) + g.rebind(u), t))


def c_det(ctx: PrecisionContext, c_tuple, u, v_tuple) -> DetResult:
    """det(C_{c_i}(u, v_j)); its sign is (-1)^(r(r-1)/2)."""
    cs, vs = _tuple(ctx, c_tuple), _tuple(ctx, v_tuple)
    if len(cs) != len(vs):
        raise ValueError("c and v tuples differ in length")
    r = len(cs)
    expected = Sign.NEGATIVE if (r * (r - 1) // 2) % 2 else Sign.POSITIVE
    C = _CCache(ctx)
    return _result(ctx, cs, vs, lambda c, v: C(c, u, v), expected, rr_signed=True)


def c_det_cu(ctx: PrecisionContext, c_tuple, u_tuple, v) -> DetResult:
    """2x2 det(C_{c_i}(u_j, v)); both signs occur, nothing is asserted."""
    cs, us = _tuple(ctx, c_tuple), _tuple(ctx, u_tuple)
    if len(cs) != 2 or len(us) != 2:
        raise ValueError("c_det_cu is defined for 2x2 grids only")
    C = _CCache(ctx)
    return _result(ctx, cs, us, lambda c, u: C(c, u, v))


def gamma_c_det_cu(ctx: PrecisionContext, c_tuple, u_tuple, v) -> DetResult:
    """2x2 det(Gamma(c_i+u_j) C_{c_i}(u_j, v)); strictly positive."""
    cs, us = _tuple(ctx, c_tuple), _tuple(ctx, u_tuple)
    if len(cs) != 2 or len(us) != 2:
        raise ValueError("gamma_c_det_cu is defined for 2x2 grids only")
    mp = ctx.mp
    C = _CCache(ctx)
    return _result(ctx, cs, us, lambda c, u: mp.gamma(c + u) * C(c, u, v), Sign.POSITIVE)


def scan_c_uv(ctx: PrecisionContext, c, r: int, samples: int, seed: int,
              u_range=(0.1, 6.0), v_range=(0.02, 0.98)) -> list[DetResult]:
    """Sample det(C_c(u_i, v_j)) on random descending grids.

    Total positivity of (u, v) -> C_c(u, v) is unresolved; this only collects
    evidence and asserts nothing.
    """
    rng = random.Random(seed)
    C = _CCache(ctx)
    out = []
    for _ in range(samples):
        us = sorted((rng.uniform(*u_range) for _ in range(r)), reverse=True)
        vs = sorted((rng.uniform(*v_range) for _ in range(r)), reverse=True)
        out.append(_result(ctx, DescendingTuple.of(ctx, us), DescendingTuple.of(ctx, vs),
                           lambda u, v: C(c, u, v)))
    return out
