"""Catalog of weight functions w(lambda, x) used to build weighted premiums.

Families are addressed by stable names (``w1`` ... ``w7``, ``w1_tilde``,
``w3_k``, ``w4_tilde``, ``size_biased``, ``cte``).  Every evaluation checks the
family's domain and raises :class:`DomainError` outside it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .numkernel import PrecisionContext

__all__ = [
    "DomainError",
    "Family",
    "Domain",
    "Region",
    "WeightFunctionSpec",
    "weight",
    "eval_weight",
    "eval_w3k",
    "f_lambda_x",
    "w6_kernel",
    "w6_theta",
    "w6_series_coefficient",
    "w6_series_eval",
    "WEIGHT_NAMES",
]


class DomainError(ValueError):
    """Evaluation point lies outside a weight family's domain."""


class Family(enum.Enum):
    ESSCHER_W1 = "w1"
    AUMANN_SHAPLEY_W1TILDE = "w1_tilde"
    SIZE_BIASED = "size_biased"
    CTE_W2 = "w2"
    KAMPS_W3 = "w3"
    KAMPS_K_W3K = "w3_k"
    PSEUDO_POISSON_W4 = "w4"
    PSEUDO_POISSON_RAW_W4TILDE = "w4_tilde"
    W5 = "w5"
    W6 = "w6"
    W7 = "w7"


@dataclass(frozen=True)
class Domain:
    """Open/closed rectangle in (lambda, x), optionally cut by ``lambda*x < 1``.

    ``None`` bounds are infinite.  ``lam_lo_closed`` lets a family accept its
    lower lambda bound itself (w4 at lambda = 0).
    """

    lam_lo: float | None = None
    x_lo: float | None = None
    lam_lo_closed: bool = False
    x_lo_closed: bool = False
    product_below_one: bool = False

    def contains(self, lam, x) -> bool:
        if self.lam_lo is not None:
            if lam < self.lam_lo or (lam == self.lam_lo and not self.lam_lo_closed):
                return False
        if self.x_lo is not None:
            if x < self.x_lo or (x == self.x_lo and not self.x_lo_closed):
                return False
        if self.product_below_one and not lam * x < 1:
            return False
        return True


REALS = Domain()
QUADRANT = Domain(lam_lo=0, x_lo=0)


@dataclass(frozen=True)
class Region:
    """Sampling rectangle ``[lam_lo, lam_hi] x [x_lo, x_hi]``.

    With ``log_scale`` the coordinates are drawn log-uniformly (both bounds must
    be positive).  ``product_below_one`` restricts draws to ``lambda*x < 1``.
    """

    lam_lo: float
    lam_hi: float
    x_lo: float
    x_hi: float
    log_scale: bool = False
    product_below_one: bool = False

    def __post_init__(self):
        if not (self.lam_lo < self.lam_hi and self.x_lo < self.x_hi):
            raise ValueError("region bounds must satisfy lo < hi")
        if self.log_scale and (self.lam_lo <= 0 or self.x_lo <= 0):
            raise ValueError("log-scaled regions need positive bounds")

    def within(self, domain: Domain) -> bool:
        if domain.lam_lo is not None and self.lam_lo < domain.lam_lo:
            return False
        if domain.x_lo is not None and self.x_lo < domain.x_lo:
            return False
        if domain.product_below_one and not self.product_below_one:
            return False
        return True


@dataclass(frozen=True)
class WeightFunctionSpec:
    family: Family
    params: tuple = ()
    domain: Domain = field(default=QUADRANT)

    @property
    def name(self) -> str:
        return self.family.value

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def __call__(self, ctx: PrecisionContext, lam, x):
        return eval_weight(self, ctx, lam, x)


# Closed-form growth of x -> w(lambda, x) used for divergence checks in premium.
# Returns (exponential rate, super-exponential flag).
def growth_rate(spec: WeightFunctionSpec, lam: float) -> tuple[float, bool]:
    fam = spec.family
    if fam is Family.ESSCHER_W1:
        return lam, False
    if fam is Family.AUMANN_SHAPLEY_W1TILDE:
        return (lam, False) if spec.param("F", "identity") == "identity" else (0.0, False)
    if fam is Family.SIZE_BIASED:
        return math.log(lam), False
    if fam is Family.PSEUDO_POISSON_W4:
        return (0.0, False) if lam == 0 else (math.inf, True)
    if fam is Family.PSEUDO_POISSON_RAW_W4TILDE:
        if lam < 1:
            return 0.0, False
        return (1.0, False) if lam == 1 else (math.inf, True)
    if fam is Family.W5:
        return math.log1p(lam), False
    return 0.0, False


_DOMAINS = {
    Family.ESSCHER_W1: REALS,
    Family.CTE_W2: REALS,
    Family.PSEUDO_POISSON_W4: Domain(lam_lo=0, x_lo=0, lam_lo_closed=True),
}

WEIGHT_NAMES = tuple(f.value for f in Family) + ("cte",)


def weight(name: str, **params) -> WeightFunctionSpec:
    """Look up a catalog family by its stable name.

    ``w3_k`` takes ``k`` (default 0); ``w1_tilde`` takes ``F`` in
    {"identity", "log1p"}; ``w6`` takes ``restricted=True`` to carry the
    ``lambda*x < 1`` region in its domain.
    """
    if name == "cte":
        name = "w2"
    try:
        fam = Family(name)
    except ValueError:
        raise KeyError(f"unknown weight family {name!r}; known: {', '.join(WEIGHT_NAMES)}") from None
    domain = _DOMAINS.get(fam, QUADRANT)
    if fam is Family.KAMPS_K_W3K:
        k = int(params.pop("k", 0))
        if k < 0:
            raise ValueError("w3_k needs k >= 0")
        params["k"] = k
    if fam is Family.AUMANN_SHAPLEY_W1TILDE:
        F = params.pop("F", "identity")
        if F not in ("identity", "log1p"):
            raise ValueError("w1_tilde supports F='identity' or F='log1p' only")
        params["F"] = F
    if fam is Family.W6 and params.pop("restricted", False):
        domain = Domain(lam_lo=0, x_lo=0, product_below_one=True)
    if params and fam not in (Family.KAMPS_K_W3K, Family.AUMANN_SHAPLEY_W1TILDE):
        raise ValueError(f"{name} takes no parameters, got {sorted(params)}")
    return WeightFunctionSpec(fam, tuple(sorted(params.items())), domain)


def f_lambda_x(ctx: PrecisionContext, lam, x):
    """``(exp(lambda*x) - 1)/lambda``, equal to ``x`` at ``lambda = 0``."""
    mp = ctx.mp
    lam, x = ctx.big(lam), ctx.big(x)
    if lam == 0:
        return x
    u = lam * x
    if abs(u) < ctx.eps(-(ctx.digits // 4)):
        return x * _expm1_over_u(mp, u)
    return mp.expm1(u) / lam


def _expm1_over_u(mp, u):
    # sum_{n>=0} u^n/(n+1)!
    total, term, n = mp.one, mp.one, 1
    while True:
        term = term * u / (n + 1)
        if abs(term) < mp.eps * abs(total):
            return total
        total += term
        n += 1


def _f_minus_x(ctx, lam, x):
    # f(lambda, x) - x without cancellation for small lambda*x
    mp = ctx.mp
    u = lam * x
    if abs(u) < 1:
        total, term, n = mp.zero, mp.one, 1
        while True:
            term = term * u / (n + 1)
            if abs(term) <= mp.eps * abs(total):
                return x * total
            total += term
            n += 1
    return (mp.expm1(u) - u) / lam


def w6_kernel(ctx: PrecisionContext, u):
    """``u / log(1 + u)`` with its removable value 1 at ``u = 0``."""
    mp = ctx.mp
    u = ctx.big(u)
    if u == 0:
        return mp.one
    if u <= -1:
        raise DomainError("w6 kernel needs u > -1")
    return u / mp.log1p(u)


def eval_weight(spec: WeightFunctionSpec, ctx: PrecisionContext, lam, x):
    """Evaluate ``w(lambda, x)`` for a catalog family at working precision."""
    mp = ctx.mp
    lam, x = ctx.big(lam), ctx.big(x)
    if not spec.domain.contains(lam, x):
        raise DomainError(f"({ctx.fmt(lam, 10)}, {ctx.fmt(x, 10)}) outside the domain of {spec.name}")
    fam = spec.family
    if fam is Family.ESSCHER_W1:
        return mp.exp(lam * x)
    if fam is Family.AUMANN_SHAPLEY_W1TILDE:
        F = x if spec.param("F") == "identity" else mp.log1p(x)
        return mp.exp(lam * F)
    if fam is Family.SIZE_BIASED:
        return mp.power(lam, x)
    if fam is Family.CTE_W2:
        return mp.one if x > lam else mp.zero
    if fam is Family.KAMPS_W3:
        return -mp.expm1(-x / lam)
    if fam is Family.KAMPS_K_W3K:
        return _w3k(ctx, spec.param("k"), lam, x)
    if fam is Family.PSEUDO_POISSON_W4:
        if lam == 0:
            return mp.one
        return 1 + mp.exp(x) * mp.expm1(_f_minus_x(ctx, lam, x))
    if fam is Family.PSEUDO_POISSON_RAW_W4TILDE:
        return mp.exp(mp.expm1(lam * mp.log1p(x)) / lam) - x
    if fam is Family.W5:
        return mp.expm1(x * mp.log1p(lam)) / (lam * x)
    if fam is Family.W6:
        return w6_kernel(ctx, lam * x)
    if fam is Family.W7:
        s = lam + x
        return mp.log1p(s) / s * x / mp.log1p(x)
    raise AssertionError(fam)


def _w3k(ctx, k, lam, x):
    mp = ctx.mp
    y = x / lam
    if k == 0:
        return -mp.expm1(-y)
    if y > k + 1:
        partial = mp.fsum(mp.power(y, j) / mp.factorial(j) for j in range(k + 1))
        return mp.factorial(k) * (1 - mp.exp(-y) * partial)
    # tail form e^{-y} sum_{j>k} y^j/j! avoids the cancellation in 1 - e^{-y}(...)
    term = mp.power(y, k + 1) / mp.factorial(k + 1)
    total, j = mp.zero, k + 1
    while term > mp.eps * total:
        total += term
        j += 1
        term = term * y / j
    return mp.factorial(k) * mp.exp(-y) * total


def eval_w3k(ctx: PrecisionContext, k: int, lam, x):
    """Truncated-exponential Kamps weight ``w_{3,k}``; ``k = 0`` is ``w3``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    lam, x = ctx.big(lam), ctx.big(x)
    if not lam > 0:
        raise DomainError("w3_k needs lambda > 0")
    if not x > 0:
        raise DomainError("w3_k needs x > 0")
    return _w3k(ctx, k, lam, x)


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


_THETA_POLYS = [[Fraction(0), Fraction(1)]]  # t(1-t)...(k-1-t) for k = 1, 2, ...


def _theta_poly(k: int) -> list:
    while len(_THETA_POLYS) < k:
        j = len(_THETA_POLYS)
        _THETA_POLYS.append(_poly_mul(_THETA_POLYS[-1], [Fraction(j), Fraction(-1)]))  # (j - t)
    return _THETA_POLYS[k - 1]


@lru_cache(maxsize=None)
def w6_theta(k: int) -> Fraction:
    """``(1/k!) * integral_0^1 t(1-t)(2-t)...(k-1-t) dt`` as an exact rational."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return Fraction(1)
    integral = sum(c / (n + 1) for n, c in enumerate(_theta_poly(k)))
    return integral / math.factorial(k)


def w6_series_coefficient(k: int) -> Fraction:
    """Taylor coefficient of ``u/log(1+u)`` at ``u^k``: ``(-1)^(k-1) * theta_k`` for k >= 1."""
    theta = w6_theta(k)
    return theta if k <= 1 or k % 2 == 1 else -theta


def w6_series_eval(ctx: PrecisionContext, lam, x, terms: int):
    """Partial sum of the power series of ``w6`` in ``u = lambda*x`` (needs ``u < 1``)."""
    mp = ctx.mp
    lam, x = ctx.big(lam), ctx.big(x)
    if lam < 0 or x < 0:
        raise DomainError("w6 series needs lambda, x >= 0")
    u = lam * x
    if not u < 1:
        raise DomainError("w6 series diverges for lambda*x >= 1")
    total, power = mp.zero, mp.one
    for k in range(terms):
        c = w6_series_coefficient(k)
        total += power * c.numerator / c.denominator
        power *= u
    return total
