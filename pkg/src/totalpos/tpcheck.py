"""Sampled total-positivity checks of weight functions and counterexample search.

A passing check means "no violation found at N samples"; nothing here proves a
kernel totally positive.
"""

from __future__ import annotations

import enum
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .numkernel import (
    DescendingTuple,
    KernelMatrix,
    PrecisionContext,
    Sign,
    det,
    iter_minor_indices,
    row_norm_product,
    sign_classify,
)
from .weights import DomainError, Family, Region, WeightFunctionSpec, eval_weight

__all__ = [
    "Property",
    "MinorRecord",
    "SignReport",
    "Witness",
    "TPVerdict",
    "rr_sign",
    "sign_report",
    "build_matrix",
    "draw_grid",
    "check_order",
    "search_counterexample",
    "default_region",
    "full_region",
]

GUARD_DIGITS = 40
MIN_SPREAD = 1e-6


class Property(enum.Enum):
    TP = "tp"
    STP = "stp"
    RR = "rr"
    SRR = "srr"

    @property
    def reverse_rule(self) -> bool:
        return self in (Property.RR, Property.SRR)

    @property
    def strict(self) -> bool:
        return self in (Property.STP, Property.SRR)


def rr_sign(s: int) -> int:
    """(-1)^(s(s-1)/2), the sign a reverse-rule kernel gives an s x s minor."""
    return -1 if (s * (s - 1) // 2) % 2 else 1


def _violates(prop: Property, size: int, sign: Sign) -> bool:
    signed = sign.value * (rr_sign(size) if prop.reverse_rule else 1)
    return signed <= 0 if prop.strict else signed < 0


@dataclass(frozen=True)
class MinorRecord:
    rows: tuple
    cols: tuple
    value: object
    scale: object
    sign: Sign

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def normalized(self):
        return self.value / self.scale


@dataclass(frozen=True)
class SignReport:
    """Every minor of a kernel matrix with its sign classification.

    ``rr_signed`` records whether the caller judges the signs against
    (-1)^(s(s-1)/2) (reverse-rule) rather than against +1.
    """

    matrix: KernelMatrix
    minors: tuple
    rr_signed: bool = False

    @property
    def top_sign(self) -> Sign:
        top = max(m.size for m in self.minors)
        return next(m.sign for m in self.minors if m.size == top)

    def violations(self, prop: Property) -> list[MinorRecord]:
        return [m for m in self.minors if _violates(prop, m.size, m.sign)]

    def signed_score(self, prop: Property):
        """Smallest normalized minor after applying the property's sign rule."""
        return min(
            m.normalized * (rr_sign(m.size) if prop.reverse_rule else 1) for m in self.minors
        )

    def to_json(self, ctx: PrecisionContext, digits: int = 30) -> dict:
        return {
            "rows": [ctx.fmt(v, digits) for v in self.matrix.rows],
            "cols": [ctx.fmt(v, digits) for v in self.matrix.cols],
            "rr_signed": self.rr_signed,
            "minors": [
                {
                    "rows": list(m.rows),
                    "cols": list(m.cols),
                    "value": ctx.fmt(m.value, digits),
                    "sign": m.sign.name.lower(),
                }
                for m in self.minors
            ],
        }


def _classify(sub, ctx: PrecisionContext):
    value = det(sub, ctx)
    scale = row_norm_product(sub, ctx.mp)
    if not scale > 0:  # a zero row: the minor is exactly zero
        scale = ctx.mp.one
    return value, scale, sign_classify(value, scale, ctx)


def sign_report(m: KernelMatrix, ctx: PrecisionContext, rr_signed: bool = False,
                max_order: int | None = None) -> SignReport:
    grid = m.entries
    records = []
    for rows, cols in iter_minor_indices(len(grid), len(grid[0]), max_order):
        sub = [[grid[i][j] for j in cols] for i in rows]
        value, scale, sign = _classify(sub, ctx)
        records.append(MinorRecord(rows, cols, value, scale, sign))
    return SignReport(m, tuple(records), rr_signed)


def build_matrix(spec: WeightFunctionSpec, ctx: PrecisionContext, lams, xs) -> KernelMatrix:
    lams = lams if isinstance(lams, DescendingTuple) else DescendingTuple.of(ctx, lams)
    xs = xs if isinstance(xs, DescendingTuple) else DescendingTuple.of(ctx, xs)
    entries = [[eval_weight(spec, ctx, lam, x) for x in xs] for lam in lams]
    return KernelMatrix(lams, xs, entries)


@dataclass(frozen=True)
class Witness:
    lambdas: tuple
    xs: tuple
    rows: tuple
    cols: tuple
    value: object
    normalized: object
    sign: Sign
    reproduced: bool

    def to_json(self, ctx: PrecisionContext, digits: int = 30) -> dict:
        return {
            "lambdas": [ctx.fmt(v, digits) for v in self.lambdas],
            "xs": [ctx.fmt(v, digits) for v in self.xs],
            "rows": list(self.rows),
            "cols": list(self.cols),
            "minor": ctx.fmt(self.value, digits),
            "normalized": ctx.fmt(self.normalized, 12),
            "sign": self.sign.name.lower(),
            "reproduced_at_guard_digits": self.reproduced,
        }


@dataclass(frozen=True)
class TPVerdict:
    order_r: int
    property: Property
    samples: int
    witness: Witness | None = None
    reports: tuple = field(default=(), repr=False, compare=False)

    @property
    def consistent(self) -> bool:
        return self.witness is None

    @property
    def status(self) -> str:
        return "consistent" if self.consistent else "violated"

    def describe(self) -> str:
        label = f"{self.property.name}_{self.order_r}"
        if self.consistent:
            return f"{label}: no violation found at {self.samples} samples"
        w = self.witness
        return (f"{label}: violated by a {len(w.rows)}x{len(w.rows)} minor "
                f"(sign {w.sign.name.lower()}, normalized {float(w.normalized):.6g})")


_DEFAULT_REGIONS = {
    Family.ESSCHER_W1: Region(-2, 2, -2, 2),
    Family.AUMANN_SHAPLEY_W1TILDE: Region(0.05, 2, 0.05, 4),
    Family.SIZE_BIASED: Region(0.1, 4, 0.1, 4),
    Family.CTE_W2: Region(0, 4, 0, 4),
    Family.KAMPS_W3: Region(0.5, 4, 0.1, 4),
    Family.KAMPS_K_W3K: Region(0.5, 4, 0.1, 4),
    Family.PSEUDO_POISSON_W4: Region(0.05, 1.5, 0.05, 1.5),
    Family.PSEUDO_POISSON_RAW_W4TILDE: Region(0.05, 1.5, 0.05, 3),
    Family.W5: Region(0.1, 4, 0.1, 4),
    Family.W6: Region(0.02, 2, 0.02, 2, product_below_one=True),
    Family.W7: Region(0.1, 4, 0.1, 4),
}

_FULL_REGIONS = {
    Family.ESSCHER_W1: Region(-5, 5, -5, 5),
    Family.CTE_W2: Region(-10, 10, -10, 10),
    Family.W6: Region(0.01, 10, 0.01, 1e5, log_scale=True),
}


def default_region(spec: WeightFunctionSpec) -> Region:
    """Moderate sampling rectangle for a family (w6: the lambda*x < 1 region)."""
    return _DEFAULT_REGIONS[spec.family]


def full_region(spec: WeightFunctionSpec) -> Region:
    """Wide, log-scaled sampling rectangle over the whole domain of a family."""
    return _FULL_REGIONS.get(spec.family, Region(0.01, 50, 0.01, 50, log_scale=True))


def _draw_tuple(rng: random.Random, lo: float, hi: float, r: int, log_scale: bool) -> list[float]:
    width = math.log(hi / lo) if log_scale else hi - lo
    while True:
        if log_scale:
            vals = sorted((math.exp(rng.uniform(math.log(lo), math.log(hi))) for _ in range(r)), reverse=True)
            gaps = [math.log(a / b) for a, b in zip(vals, vals[1:])]
        else:
            vals = sorted((rng.uniform(lo, hi) for _ in range(r)), reverse=True)
            gaps = [a - b for a, b in zip(vals, vals[1:])]
        if all(g >= MIN_SPREAD * width for g in gaps):
            return vals


def _grid_ok(spec, region, lams, xs) -> bool:
    if region.product_below_one and not lams[0] * xs[0] < 1:
        return False
    dom = spec.domain
    return all(dom.contains(l, x) for l in (lams[0], lams[-1]) for x in (xs[0], xs[-1]))


def draw_grid(spec: WeightFunctionSpec, region: Region, r: int, rng: random.Random):
    """Independent descending r-tuples (sorted uniform draws) inside the region."""
    while True:
        lams = _draw_tuple(rng, region.lam_lo, region.lam_hi, r, region.log_scale)
        xs = _draw_tuple(rng, region.x_lo, region.x_hi, r, region.log_scale)
        if _grid_ok(spec, region, lams, xs):
            return lams, xs


def _witness(spec, ctx, prop, report: SignReport) -> Witness | None:
    bad = report.violations(prop)
    if not bad:
        return None
    sgn = lambda m: m.normalized * (rr_sign(m.size) if prop.reverse_rule else 1)
    worst = min(bad, key=sgn)
    m = report.matrix
    g = ctx.guarded(GUARD_DIGITS)
    gm = build_matrix(spec, g, [g.rebind(v) for v in m.rows], [g.rebind(v) for v in m.cols])
    sub = [[gm.entries[i][j] for j in worst.cols] for i in worst.rows]
    again = _classify(sub, g)[2]
    return Witness(m.rows.values, m.cols.values, worst.rows, worst.cols, worst.value,
                   worst.normalized, worst.sign, again is worst.sign)


def _sample_rng(seed: int, index: int) -> random.Random:
    return random.Random(seed * 1_000_003 + index)


def _evaluate(spec, ctx, prop, r, lams, xs):
    report = sign_report(build_matrix(spec, ctx, lams, xs), ctx, rr_signed=prop.reverse_rule, max_order=r)
    return report, _witness(spec, ctx, prop, report)


def check_order(spec: WeightFunctionSpec, region: Region, prop: Property | str, r: int,
                samples: int, rng_seed: int, ctx: PrecisionContext | None = None,
                extra_points=(), workers: int = 1, keep_reports: bool = False) -> TPVerdict:
    """Check every minor of order 1..r on ``samples`` random descending grids.

    ``extra_points`` (pairs of lambda- and x-tuples) are evaluated before the
    random draws.  Sample ``i`` uses its own generator seeded from
    ``(rng_seed, i)``, so the verdict does not depend on ``workers``.  Only
    violations that reproduce at +40 guard digits are reported as witnesses.
    """
    ctx = ctx or PrecisionContext()
    prop = Property(prop) if not isinstance(prop, Property) else prop
    if r < 1:
        raise ValueError("order r must be >= 1")
    if not region.within(spec.domain):
        raise ValueError(f"region {region} is not inside the domain of {spec.name}")

    grids = [(list(l), list(x)) for l, x in extra_points]
    for i in range(samples):
        grids.append(draw_grid(spec, region, r, _sample_rng(rng_seed, i)))

    def run(grid):
        return _evaluate(spec, ctx, prop, r, *grid)

    reports = []
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, grids))
    else:
        results = []
        for grid in grids:
            results.append(run(grid))
            if results[-1][1] is not None and results[-1][1].reproduced and not keep_reports:
                break
    for n, (report, witness) in enumerate(results, start=1):
        reports.append(report)
        if witness is not None and witness.reproduced:
            return TPVerdict(r, prop, n, witness, tuple(reports) if keep_reports else ())
    return TPVerdict(r, prop, len(results), None, tuple(reports) if keep_reports else ())


def search_counterexample(spec: WeightFunctionSpec, region: Region, prop: Property | str, r: int,
                          budget: int, rng_seed: int, ctx: PrecisionContext | None = None) -> Witness | None:
    """Random search plus coordinatewise refinement around near-violations.

    ``budget`` counts kernel-matrix evaluations.  Three quarters go to random
    grids; the rest refine the lowest-scoring grids by moving one coordinate
    at a time.  Returns the most negative reproduced violation, if any.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ctx = ctx or PrecisionContext()
    prop = Property(prop) if not isinstance(prop, Property) else prop
    if not region.within(spec.domain):
        raise ValueError(f"region {region} is not inside the domain of {spec.name}")
    rng = random.Random(rng_seed)
    used = 0
    pool: list = []  # (score, lams, xs, report)

    def score(lams, xs):
        report = sign_report(build_matrix(spec, ctx, lams, xs), ctx, max_order=r)
        return report.signed_score(prop), report

    n_random = max(1, (3 * budget) // 4)
    for _ in range(n_random):
        lams, xs = draw_grid(spec, region, r, rng)
        s, rep = score(lams, xs)
        used += 1
        pool.append((s, lams, xs, rep))
        pool.sort(key=lambda t: t[0])
        del pool[8:]

    lam_w = math.log(region.lam_hi / region.lam_lo) if region.log_scale else region.lam_hi - region.lam_lo
    x_w = math.log(region.x_hi / region.x_lo) if region.log_scale else region.x_hi - region.x_lo

    def moved(vals, i, delta, lo, hi, width):
        out = list(vals)
        out[i] = out[i] * math.exp(delta) if region.log_scale else out[i] + delta
        if not lo <= out[i] <= hi:
            return None
        gaps = [(math.log(a / b) if region.log_scale else a - b) for a, b in zip(out, out[1:])]
        return out if all(g >= MIN_SPREAD * width for g in gaps) else None

    best = list(pool)
    step = 0.1
    k = 0
    while used < budget and best:
        s, lams, xs, rep = best[k % len(best)]
        improved = False
        for axis in range(2 * r):
            if used >= budget:
                break
            for sign in (1, -1):
                if axis < r:
                    cand_l = moved(lams, axis, sign * step * lam_w, region.lam_lo, region.lam_hi, lam_w)
                    cand = (cand_l, xs) if cand_l else None
                else:
                    cand_x = moved(xs, axis - r, sign * step * x_w, region.x_lo, region.x_hi, x_w)
                    cand = (lams, cand_x) if cand_x else None
                if cand is None or not _grid_ok(spec, region, *cand):
                    continue
                s2, rep2 = score(*cand)
                used += 1
                if s2 < s:
                    s, lams, xs, rep = s2, cand[0], cand[1], rep2
                    improved = True
                    break
        best[k % len(best)] = (s, lams, xs, rep)
        k += 1
        if k % len(best) == 0 and not improved:
            step /= 2
            if step < 1e-7:
                break

    candidates = sorted(best + pool, key=lambda t: t[0])
    for s, lams, xs, rep in candidates:
        w = _witness(spec, ctx, prop, rep)
        if w is not None and w.reproduced:
            return w
    return None
