"""Acceptance suite: twelve criteria, each run at its stated tolerance.

Run under pytest for one PASS/FAIL line per criterion in the terminal summary,
or directly with ``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import eval_monomials, partitions, schur_monomials  # noqa: E402
from totalpos import gammaratios as gr  # noqa: E402
from totalpos.numkernel import PrecisionContext, Sign, det, row_norm_product, sign_classify  # noqa: E402
from totalpos.premium import (  # noqa: E402
    CappedLinear,
    Exponential,
    Identity,
    lipschitz_gap,
    premium_matrix,
    prelipschitz_identity_check,
    vmr_curve,
)
from totalpos.symfunc import bell_eval, binet_cauchy_discrete_check, btilde, schur  # noqa: E402
from totalpos.tpcheck import Property, build_matrix, check_order, default_region, draw_grid, sign_report  # noqa: E402
from totalpos.weights import f_lambda_x, weight  # noqa: E402

RESULTS: dict = {}
CTX = PrecisionContext(120)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def criterion_1():
    value, secs = _timed(lambda: gr.r_det_uv(CTX, "3.5", ("4", "3", "2"), ("6", "5", "4")).value)
    ok = abs(value - CTX.big("7.04")) <= CTX.big("0.005") and secs < 5
    return ok, f"R-det c=3.5 u=(4,3,2) v=(6,5,4): computed {CTX.fmt(value, 12)}, target 7.04 +/- 0.005, {secs:.2f} s"


def criterion_2():
    value, secs = _timed(lambda: gr.c_det_cu(CTX, ("4.047", "1.210"), ("3.203", "0.189"), "0.211").value)
    ok = abs(value - CTX.big("-0.026")) <= CTX.big("0.0005") and secs < 10
    return ok, f"C-det v=0.211: computed {CTX.fmt(value, 12)}, target -0.026 +/- 0.0005, {secs:.2f} s"


def criterion_3():
    def compute():
        return det(build_matrix(weight("w6"), CTX, ("3", "0.4", "0.1"), ("20000", "0.3", "0.1")), CTX)

    value, secs = _timed(compute)
    printed = CTX.fmt(value, 6)
    ok = printed == "-5.17488" and secs < 5
    return ok, f"w6-det: computed {CTX.fmt(value, 15)}, 6 figures {printed} vs -5.17488, {secs:.2f} s"


def criterion_4():
    cases = [("w1", {}), ("w3", {}), ("w3_k", {"k": 2}), ("w5", {}), ("w7", {}), ("w6", {"restricted": True})]
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, params in cases:
        spec = weight(name, **params)
        verdict = check_order(spec, default_region(spec), Property.STP, 4, 200, 2024, CTX)
        ok &= verdict.consistent
        label = name + ("(k=2)" if params.get("k") else "") + ("(lx<1)" if params.get("restricted") else "")
        parts.append(f"{label}: {verdict.describe()}")
    secs = time.perf_counter() - t0
    ok &= secs < 300
    return ok, "; ".join(parts) + f"; {secs:.1f} s"


def _chain(lams, xs):
    seq = [v for pair in zip(xs, lams) for v in pair]
    return int(all(a > b for a, b in zip(seq, seq[1:])))


def criterion_5():
    spec = weight("w2")
    rng = random.Random(5)
    region = default_region(spec)
    checked = bad = 0
    for _ in range(500):
        r = rng.randint(1, 4)
        lams, xs = draw_grid(spec, region, r, rng)
        for rec in sign_report(build_matrix(spec, CTX, lams, xs), CTX).minors:
            checked += 1
            expected = _chain([lams[i] for i in rec.rows], [xs[j] for j in rec.cols])
            if rec.value != expected:
                bad += 1
    return bad == 0, f"w2 indicator minors: {checked} checked on 500 grids, {bad} differ from the chain value"


def criterion_6():
    pm = premium_matrix(weight("w1"), Identity(), Exponential(1), ["0.5", "0.3", "0.1"], CTX)
    all_pos = all(m.sign is Sign.POSITIVE for m in pm.report.minors)
    # columns are (X^2, X, 1); rows {0,1} x cols {1,2} is H[l1,X] - H[l2,X]
    lead = next(m for m in pm.report.minors if m.rows == (0, 1) and m.cols == (1, 2))
    oracle = 1 / (1 - CTX.big("0.5")) - 1 / (1 - CTX.big("0.3"))
    err = abs(lead.value - oracle)
    exact_ok = abs(oracle - (2 - CTX.big(10) / 7)) < CTX.eps(-110)
    ok = all_pos and exact_ok and err < CTX.eps(-40)
    return ok, (f"premium matrix k=3: {len(pm.report.minors)} minors all positive={all_pos}; "
                f"2x2 case error vs 2 - 10/7 = {CTX.fmt(err, 3)}")


def criterion_7():
    lams = ["0.1", "0.2", "0.3", "0.4", "0.5"]
    e = vmr_curve(weight("w1"), Identity(), Exponential(1), lams, CTX)
    c = vmr_curve(weight("cte"), Identity(), Exponential(1), lams, CTX)
    err_e = max(abs(r.second_over_first - 2 / (1 - r.lam)) for r in e)
    err_c = max(abs(r.second_over_first - (r.lam + 1 + 1 / (r.lam + 1))) for r in c)
    inc = all(a.second_over_first < b.second_over_first for a, b in zip(e, e[1:]))
    ok = err_e < CTX.eps(-40) and err_c < CTX.eps(-40) and inc
    return ok, f"VMR: Esscher max error {CTX.fmt(err_e, 3)}, strictly increasing={inc}; CTE max error {CTX.fmt(err_c, 3)}"


def criterion_8():
    w1, loss = weight("w1"), Exponential(1)
    pairs = [("0.25", "0.1"), ("0.4", "0.1"), ("0.4", "0.25")]
    ok, margins = True, []
    for c in ("0.5", "1", "2"):
        for hi, lo in pairs:
            gap = lipschitz_gap(w1, CappedLinear(c), loss, hi, lo, CTX)
            ok &= gap.holds
            margins.append(gap.margin)
    eq_err = max(abs(lipschitz_gap(w1, Identity(), loss, hi, lo, CTX).margin) for hi, lo in pairs)
    ok &= eq_err < CTX.eps(-30)
    return ok, (f"Lipschitz: 9 capped cases hold={ok}, smallest margin {CTX.fmt(min(margins), 6)}; "
                f"identity equality error {CTX.fmt(eq_err, 3)}")


def criterion_9():
    rng = random.Random(9)

    def q():
        return Fraction(rng.randint(-30, 30), rng.randint(1, 12))

    results = []
    for _ in range(50):
        A = [[q() for _ in range(5)] for _ in range(3)]
        B = [[q() for _ in range(3)] for _ in range(5)]
        nu = [Fraction(rng.randint(1, 30), rng.randint(1, 12)) for _ in range(5)]
        results.append(binet_cauchy_discrete_check(A, B, nu))
    return all(results), f"Binet-Cauchy: {sum(results)}/50 exact equalities (n=3, p=5)"


def criterion_10():
    chk = prelipschitz_identity_check(weight("w1"), Identity(), Exponential(1), "0.5", "0.25", CTX)
    return chk.relative < CTX.eps(-30), f"two-point difference identity: relative residual {CTX.fmt(chk.relative, 3)}"


def criterion_11():
    rng = random.Random(11)
    schur_ok, n_theta = True, 0
    for m in (1, 2, 3):
        for size in range(7):
            for theta in partitions(size, m):
                n_theta += 1
                expansion, _ = schur_monomials(theta)
                schur_ok &= all(c >= 0 for c in expansion.values())
                pt = [Fraction(v, 7) for v in rng.sample(range(1, 60), m)]
                exact = CTX.big(eval_monomials(expansion, pt))
                schur_ok &= abs(schur(CTX, theta, pt) - exact) < CTX.eps(-100) * exact
    bell_ok = True
    for _ in range(100):
        r = rng.randint(1, 4)
        ks = sorted(rng.sample(range(0, 15), r), reverse=True)
        us = sorted((rng.uniform(0.05, 6) for _ in range(r)), reverse=True)
        grid = [[bell_eval(CTX, k, u) for u in us] for k in ks]
        bell_ok &= sign_classify(det(grid), row_norm_product(grid, CTX.mp), CTX) is Sign.POSITIVE
    mp = CTX.mp
    gf_err = mp.zero
    for _ in range(10):
        lam = rng.uniform(0.1, 2)
        x = CTX.big(rng.uniform(0.01, 0.5 / lam))
        series = mp.fsum(btilde(CTX, k, lam) * x**k / mp.factorial(k) for k in range(81))
        gf_err = max(gf_err, abs(series - mp.exp(f_lambda_x(CTX, lam, x))))
    ok = schur_ok and bell_ok and gf_err < CTX.eps(-20)
    return ok, (f"Schur: {n_theta} partitions nonnegative and matching={schur_ok}; Bell dets positive={bell_ok}; "
                f"generating function max error {CTX.fmt(gf_err, 3)} at K=80")


def criterion_12():
    rng = random.Random(12)
    worst = CTX.mp.zero
    for _ in range(100):
        u, p = rng.uniform(0.05, 25), rng.uniform(1e-8, 1)
        worst = max(worst, abs(gr.q(CTX, u, gr.q_inverse(CTX, u, p)) - CTX.big(p)))
    ordered = 0
    for _ in range(50):
        u2 = rng.uniform(0.05, 10)
        u1 = u2 + rng.uniform(0.01, 5)
        v = rng.uniform(0.001, 0.999)
        ordered += gr.q_inverse(CTX, u1, v) > gr.q_inverse(CTX, u2, v)
    ok = worst < CTX.eps(-105) and ordered == 50
    return ok, f"Q inverse: worst roundtrip residual {CTX.fmt(worst, 3)}; ordering held on {ordered}/50 draws"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def _line(n, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"


@pytest.mark.parametrize("n", range(1, 13))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    RESULTS[n] = (ok, detail)
    print(_line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, fn in enumerate(CRITERIA, start=1):
        ok, detail = fn()
        failed += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
