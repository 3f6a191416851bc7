"""Weighted premiums H[lambda, f(X)] = E[w(lambda, X) f(X)] / E[w(lambda, X)].

Expectations are adaptive Gauss-Legendre integrals against the loss density.
On unbounded support the truncation point grows until the neglected tail is
below the working tolerance; an integrand whose weight grows at least as fast
as the density decays is refused up front with :class:`DivergenceError`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .numkernel import DescendingTuple, KernelMatrix, PrecisionContext
from .quadrature import integrate, integrate_semi_infinite, tensor_on_triangle
from .tpcheck import SignReport, sign_report
from .weights import DomainError, Family, WeightFunctionSpec, eval_weight, growth_rate

__all__ = [
    "DivergenceError",
    "Exponential",
    "GammaDist",
    "UniformDist",
    "Identity",
    "Power",
    "CappedLinear",
    "IntegratedCDF",
    "PremiumReport",
    "PremiumMatrix",
    "LipschitzGap",
    "PrelipschitzCheck",
    "expectation",
    "premium_H",
    "loading_check",
    "premium_matrix",
    "vmr_curve",
    "monotone_summary",
    "lipschitz_gap",
    "prelipschitz_identity_check",
    "loss_from_config",
    "utility_from_config",
]


class DivergenceError(DomainError):
    """The requested expectation is infinite for this weight and loss."""


# -- loss models -------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    rate: object = 1

    def __post_init__(self):
        if not float(self.rate) > 0:
            raise ValueError("Exponential rate must be positive")

    lower = 0
    upper = None

    @property
    def decay(self) -> float:
        return float(self.rate)

    breakpoints = ()

    def density(self, ctx, x):
        rate = ctx.big(self.rate)
        return rate * ctx.mp.exp(-rate * x)


@dataclass(frozen=True)
class GammaDist:
    """Gamma(shape, rate) loss; shape >= 1 keeps the density bounded at 0."""

    shape: object
    rate: object = 1

    def __post_init__(self):
        if not float(self.shape) >= 1:
            raise ValueError("GammaDist needs shape >= 1")
        if not float(self.rate) > 0:
            raise ValueError("GammaDist rate must be positive")

    lower = 0
    upper = None
    breakpoints = ()

    @property
    def decay(self) -> float:
        return float(self.rate)

    def density(self, ctx, x):
        mp = ctx.mp
        s, rate = ctx.big(self.shape), ctx.big(self.rate)
        if x == 0:
            return rate if s == 1 else mp.zero
        return mp.exp(s * mp.log(rate) + (s - 1) * mp.log(x) - rate * x - mp.loggamma(s))


@dataclass(frozen=True)
class UniformDist:
    a: object
    b: object

    def __post_init__(self):
        if not 0 <= float(self.a) < float(self.b):
            raise ValueError("UniformDist needs 0 <= a < b")

    decay = math.inf

    @property
    def lower(self):
        return self.a

    @property
    def upper(self):
        return self.b

    breakpoints = ()

    def density(self, ctx, x):
        return 1 / (ctx.big(self.b) - ctx.big(self.a))


# -- utilities ---------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    lipschitz_1 = True
    breakpoints = ()

    def __call__(self, ctx, x):
        return x


@dataclass(frozen=True)
class Power:
    p: object

    def __post_init__(self):
        if not float(self.p) >= 1:
            raise ValueError("Power utility needs p >= 1")

    @property
    def lipschitz_1(self) -> bool:
        return float(self.p) == 1

    breakpoints = ()

    def __call__(self, ctx, x):
        return ctx.mp.power(x, ctx.big(self.p))


@dataclass(frozen=True)
class CappedLinear:
    c: object

    def __post_init__(self):
        if not float(self.c) >= 0:
            raise ValueError("cap must be nonnegative")

    lipschitz_1 = True

    @property
    def breakpoints(self):
        return (self.c,) if float(self.c) > 0 else ()

    def __call__(self, ctx, x):
        c = ctx.big(self.c)
        return x if x < c else c


@dataclass(frozen=True)
class IntegratedCDF:
    """``f(x) = int_0^x (1 - e^{-a t}) dt = x - (1 - e^{-a x})/a``."""

    rate: object = 1

    def __post_init__(self):
        if not float(self.rate) > 0:
            raise ValueError("IntegratedCDF rate must be positive")

    lipschitz_1 = True
    breakpoints = ()

    def __call__(self, ctx, x):
        a = ctx.big(self.rate)
        return x + ctx.mp.expm1(-a * x) / a


# -- expectations ------------------------------------------------------------


def _check_inputs(spec: WeightFunctionSpec, loss, lam, max_power: int, ctx):
    lam_f = float(lam)
    lo = float(loss.lower)
    probe = lo + 1e-3 if loss.upper is None else (lo + float(loss.upper)) / 2
    if not spec.domain.contains(lam_f, probe):
        raise DomainError(f"lambda={lam} is outside the domain of {spec.name}")
    if spec.domain.product_below_one:
        if loss.upper is None or not lam_f * float(loss.upper) <= 1:
            raise DomainError(f"{spec.name} on lambda*x < 1 needs loss support inside x <= 1/lambda")
    if loss.upper is None:
        rate, superexp = growth_rate(spec, lam_f)
        if superexp or rate >= loss.decay:
            raise DivergenceError(
                f"E[w(lambda, X) f(X)^{max_power}] diverges: {spec.name} grows at rate "
                f"{rate if not superexp else 'super-exponential'} against loss decay {loss.decay}"
            )


def _breaks(spec, u, loss, lam):
    pts = list(loss.breakpoints) + list(getattr(u, "breakpoints", ()))
    if spec.family is Family.CTE_W2:
        pts.append(lam)
    return pts


def _first_width(loss) -> float:
    return max(1.0, 4.0 / loss.decay)


def _integrate(fn, spec, u, loss, lams, ctx, dim):
    pts = []
    for lam in lams:
        pts += _breaks(spec, u, loss, lam)
    if loss.upper is None:
        return integrate_semi_infinite(fn, loss.lower, ctx, breakpoints=pts, dim=dim,
                                       first_width=_first_width(loss))
    return integrate(fn, loss.lower, loss.upper, ctx, breakpoints=pts, dim=dim)


def _moments(spec, u, loss, lam, powers, ctx: PrecisionContext):
    """``E[w(lam, X) f(X)^p]`` for every p in ``powers`` from one quadrature pass."""
    lam = ctx.big(lam)
    _check_inputs(spec, loss, lam, max(powers), ctx)

    def fn(x):
        base = eval_weight(spec, ctx, lam, x) * loss.density(ctx, x)
        if not base:
            return [base] * len(powers)
        fx = u(ctx, x)
        return [base * fx**p if p else base for p in powers]

    return _integrate(fn, spec, u, loss, [lam], ctx, len(powers)).values


def expectation(spec: WeightFunctionSpec, power: int, u, loss, lam, ctx: PrecisionContext | None = None):
    """``E[w(lambda, X) f(X)^power]`` to relative accuracy ``10**(-digits/2)``."""
    if power < 0:
        raise ValueError("power must be nonnegative")
    ctx = ctx or PrecisionContext()
    return _moments(spec, u, loss, lam, [power], ctx)[0]


def _ratio(num, den, spec, lam):
    if not den > 0:
        raise DomainError(f"E[w(lambda, X)] = 0 at lambda={lam}: {spec.name} annihilates the loss support")
    return num / den


def premium_H(spec: WeightFunctionSpec, u, loss, lam, ctx: PrecisionContext | None = None, power: int = 1):
    """``H[lambda, f(X)^power]``; ``power=1`` is the premium itself."""
    ctx = ctx or PrecisionContext()
    den, num = _moments(spec, u, loss, lam, [0, power], ctx)
    return _ratio(num, den, spec, lam)


def loading_check(spec, u, loss, lam, ctx: PrecisionContext | None = None):
    """``(H, E[f(X)], H >= E[f(X)])`` with the net premium taken at weight 1."""
    from .weights import weight

    ctx = ctx or PrecisionContext()
    h = premium_H(spec, u, loss, lam, ctx)
    net = premium_H(weight("w1"), u, loss, 0, ctx)
    return h, net, h >= net - ctx.eps(-(ctx.digits // 4)) * abs(net)


@dataclass(frozen=True)
class PremiumMatrix:
    lambdas: DescendingTuple
    grid: tuple
    report: SignReport


def premium_matrix(spec: WeightFunctionSpec, u, loss, lams, ctx: PrecisionContext | None = None) -> PremiumMatrix:
    """``grid[i][j] = H[lambda_i, f(X)^(k-1-j)]`` with every minor sign-classified.

    Columns run from the highest power down to the constant column of ones.
    """
    ctx = ctx or PrecisionContext()
    lams = lams if isinstance(lams, DescendingTuple) else DescendingTuple.of(ctx, lams)
    k = len(lams)
    powers = list(range(k - 1, -1, -1))
    grid = []
    for lam in lams:
        mom = _moments(spec, u, loss, lam, [0] + powers, ctx)
        grid.append(tuple(_ratio(m, mom[0], spec, lam) for m in mom[1:]))
    cols = DescendingTuple.of(ctx, powers)
    m = KernelMatrix(lams, cols, grid)
    return PremiumMatrix(lams, m.entries, sign_report(m, ctx))


@dataclass(frozen=True)
class PremiumReport:
    lam: object
    H: object
    mu: object
    sigma2: object
    vmr: object

    @property
    def second_over_first(self):
        """``H[lambda, f^2] / H[lambda, f]``, which equals ``vmr + mu``."""
        return self.vmr + self.mu

    def to_json(self, ctx: PrecisionContext, digits: int = 40) -> dict:
        return {k: ctx.fmt(getattr(self, k), digits) for k in ("lam", "H", "mu", "sigma2", "vmr")} | {
            "second_over_first": ctx.fmt(self.second_over_first, digits)
        }


def _report(spec, u, loss, lam, ctx):
    lam = ctx.big(lam)
    den, m1, m2 = _moments(spec, u, loss, lam, [0, 1, 2], ctx)
    h = _ratio(m1, den, spec, lam)
    h2 = _ratio(m2, den, spec, lam)
    sigma2 = h2 - h * h
    return PremiumReport(lam, h, h, sigma2, sigma2 / h)


def vmr_curve(spec: WeightFunctionSpec, u, loss, lams, ctx: PrecisionContext | None = None,
              workers: int = 1) -> list[PremiumReport]:
    """One report per lambda (ascending), computed independently and kept in grid order."""
    ctx = ctx or PrecisionContext()
    lams = [ctx.big(v) for v in lams]
    if any(not a < b for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be strictly ascending")

    def one(lam):
        return _report(spec, u, loss, ctx.rebind(lam), ctx)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, lams))
    return [one(lam) for lam in lams]


def monotone_summary(reports, ctx: PrecisionContext) -> dict:
    tol = ctx.eps(-(ctx.digits // 4))

    def nondecreasing(vals):
        return all(b >= a - tol * max(abs(a), 1) for a, b in zip(vals, vals[1:]))

    return {
        "H_nondecreasing": nondecreasing([r.H for r in reports]),
        "ratio_nondecreasing": nondecreasing([r.second_over_first for r in reports]),
    }


@dataclass(frozen=True)
class LipschitzGap:
    lhs: object
    rhs: object
    holds: bool

    @property
    def margin(self):
        return self.rhs - self.lhs


def lipschitz_gap(spec: WeightFunctionSpec, u, loss, lam1, lam2, ctx: PrecisionContext | None = None) -> LipschitzGap:
    """``H[l1, f] - H[l2, f]`` against ``H[l1, X] - H[l2, X]`` for a 1-Lipschitz f."""
    if not getattr(u, "lipschitz_1", False):
        raise ValueError(f"{u} is not 1-Lipschitz; the gap bound does not apply")
    ctx = ctx or PrecisionContext()
    lam1, lam2 = ctx.big(lam1), ctx.big(lam2)
    if not lam1 > lam2:
        raise ValueError("need lambda1 > lambda2")
    ident = Identity()
    lhs = premium_H(spec, u, loss, lam1, ctx) - premium_H(spec, u, loss, lam2, ctx)
    rhs = premium_H(spec, ident, loss, lam1, ctx) - premium_H(spec, ident, loss, lam2, ctx)
    return LipschitzGap(lhs, rhs, lhs <= rhs + ctx.eps(-(ctx.digits // 4)))


@dataclass(frozen=True)
class PrelipschitzCheck:
    left: object
    right: object

    @property
    def residual(self):
        return abs(self.left - self.right)

    @property
    def relative(self):
        return self.residual / abs(self.left) if self.left else self.residual


def prelipschitz_identity_check(spec: WeightFunctionSpec, u, loss, lam1, lam2,
                                ctx: PrecisionContext | None = None) -> PrelipschitzCheck:
    """Both sides of the two-point difference representation.

    Left: ``E[w(l1,X)] E[w(l2,X)] (H[l1,f] - H[l2,f])`` from one-dimensional
    moments.  Right: the double integral over ``x1 > x2`` of
    ``(f(x1) - f(x2)) det[[w(l1,x1), w(l1,x2)], [w(l2,x1), w(l2,x2)]] g(x1) g(x2)``.
    """
    ctx = ctx or PrecisionContext()
    lams = DescendingTuple.of(ctx, [lam1, lam2])
    l1, l2 = lams
    d1, n1 = _moments(spec, u, loss, l1, [0, 1], ctx)
    d2, n2 = _moments(spec, u, loss, l2, [0, 1], ctx)
    left = d1 * d2 * (_ratio(n1, d1, spec, l1) - _ratio(n2, d2, spec, l2))

    cache: dict = {}

    def point(x):
        v = cache.get(x)
        if v is None:
            g = loss.density(ctx, x)
            v = cache[x] = (u(ctx, x), eval_weight(spec, ctx, l1, x) * g, eval_weight(spec, ctx, l2, x) * g)
        return v

    def marginals(x):
        f, a, b = point(x)
        return [a, b, a * f, b * f]

    # panel layout resolved on the one-dimensional marginals of the integrand
    panels = _integrate(marginals, spec, u, loss, [l1, l2], ctx, 4).panels

    def kernel(x1s, x2s):
        out = []
        for x1 in x1s:
            f1, a1, b1 = point(x1)
            out.append([(f1 - f2) * (a1 * b2 - a2 * b1) for f2, a2, b2 in map(point, x2s)])
        return out

    right = tensor_on_triangle(kernel, panels, ctx)
    return PrelipschitzCheck(left, right)


# -- config helpers ----------------------------------------------------------

_LOSSES = {"exponential": Exponential, "gamma": GammaDist, "uniform": UniformDist}
_UTILITIES = {"identity": Identity, "power": Power, "capped": CappedLinear, "integrated_cdf": IntegratedCDF}


def loss_from_config(cfg: dict):
    cfg = dict(cfg)
    kind = cfg.pop("family", "exponential")
    try:
        return _LOSSES[kind](**cfg)
    except KeyError:
        raise ValueError(f"unknown loss family {kind!r}; known: {', '.join(_LOSSES)}") from None


def utility_from_config(cfg: dict):
    cfg = dict(cfg)
    kind = cfg.pop("family", "identity")
    try:
        return _UTILITIES[kind](**cfg)
    except KeyError:
        raise ValueError(f"unknown utility {kind!r}; known: {', '.join(_UTILITIES)}") from None
