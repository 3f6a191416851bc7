import math
import random
from fractions import Fraction

import mpmath
import pytest

from totalpos.weights import (
    WEIGHT_NAMES,
    DomainError,
    Family,
    Region,
    eval_w3k,
    eval_weight,
    f_lambda_x,
    growth_rate,
    w6_kernel,
    w6_series_coefficient,
    w6_series_eval,
    w6_theta,
    weight,
)


def test_catalog_names_resolve():
    for name in WEIGHT_NAMES:
        params = {"k": 2} if name == "w3_k" else {}
        assert weight(name, **params).name in {f.value for f in Family}
    assert weight("cte") == weight("w2")
    with pytest.raises(KeyError):
        weight("w8")
    with pytest.raises(ValueError):
        weight("w1", k=3)
    with pytest.raises(ValueError):
        weight("w1_tilde", F="sqrt")


def test_spec_examples(ctx, mp):
    assert eval_weight(weight("w1"), ctx, 0, 7) == 1
    assert eval_weight(weight("w2"), ctx, 2, 3) == 1
    assert eval_weight(weight("w2"), ctx, 3, 2) == 0
    assert abs(eval_weight(weight("w3"), ctx, 1, mp.log(2)) - mp.mpf(1) / 2) < ctx.eps(-115)
    e1 = mp.e - 1
    assert abs(eval_weight(weight("w6"), ctx, 1, e1) - e1) < ctx.eps(-115)


def test_domains_are_hard_errors(ctx):
    with pytest.raises(DomainError):
        eval_weight(weight("w3"), ctx, 0, 1)
    with pytest.raises(DomainError):
        eval_weight(weight("w5"), ctx, 1, -1)
    with pytest.raises(DomainError):
        eval_weight(weight("w6"), ctx, 0, 1)
    with pytest.raises(DomainError):
        eval_weight(weight("w6", restricted=True), ctx, 2, 1)
    # w1 and w2 live on the whole plane
    eval_weight(weight("w1"), ctx, -1, -2)
    eval_weight(weight("w2"), ctx, -1, -2)


def test_families_positive_on_interior(ctx):
    rng = random.Random(5)
    for name in WEIGHT_NAMES:
        spec = weight(name, **({"k": 3} if name == "w3_k" else {}))
        for _ in range(20):
            lam, x = rng.uniform(0.01, 3), rng.uniform(0.01, 3)
            v = eval_weight(spec, ctx, lam, x)
            if spec.family is Family.CTE_W2:
                assert v in (0, 1)
            else:
                assert v > 0, (name, lam, x)


def test_f_lambda_x_continuity(ctx, mp):
    assert f_lambda_x(ctx, 0, 3) == 3
    for lam in ("1e-40", "1e-80", "1e-20"):
        v = f_lambda_x(ctx, lam, 2)
        exact = mp.expm1(ctx.big(lam) * 2) / ctx.big(lam)
        assert abs(v - exact) < ctx.eps(-110) * exact
    assert abs(f_lambda_x(ctx, "1e-50", 2) - 2) < ctx.eps(-45)


def test_w4_is_one_at_zero_and_matches_direct_form(ctx, mp):
    w4 = weight("w4")
    for x in (0.1, 1, 5):
        assert eval_weight(w4, ctx, 0, x) == 1
    for lam, x in ((0.5, 1.5), (2, 0.3)):
        direct = mp.exp(f_lambda_x(ctx, lam, x)) - mp.exp(x) + 1
        assert abs(eval_weight(w4, ctx, lam, x) - direct) < ctx.eps(-100) * mp.exp(x)


def test_w4_tilde_form(ctx, mp):
    lam, x = ctx.big("0.7"), ctx.big("1.3")
    expected = mp.exp((mp.power(1 + x, lam) - 1) / lam) - x
    assert abs(eval_weight(weight("w4_tilde"), ctx, lam, x) - expected) < ctx.eps(-110)


def test_w3k_reduces_to_w3(ctx):
    rng = random.Random(11)
    w3 = weight("w3")
    for _ in range(20):
        lam, x = rng.uniform(0.1, 5), rng.uniform(0.01, 10)
        assert eval_w3k(ctx, 0, lam, x) == eval_weight(w3, ctx, lam, x)


def test_w3k_examples(ctx, mp):
    assert abs(eval_w3k(ctx, 1, 1, 400) - 1) < ctx.eps(-110)
    expected = 2 * (1 - mp.exp(-1) * (1 + 1 + mp.mpf(1) / 2))
    assert abs(eval_w3k(ctx, 2, 1, 1) - expected) < ctx.eps(-110)
    oracle = mp.quad(lambda t: t**2 * mp.exp(-t), [0, 1])
    assert abs(eval_w3k(ctx, 2, 1, 1) - oracle) < ctx.eps(-100)
    with pytest.raises(DomainError):
        eval_w3k(ctx, 2, 0, 1)
    with pytest.raises(ValueError):
        eval_w3k(ctx, -1, 1, 1)


@pytest.mark.parametrize("k,lam,x", [(3, 0.5, 0.5), (5, 2, 7), (4, 1, 30)])
def test_w3k_against_quadrature(ctx, mp, k, lam, x):
    lam_b = ctx.big(lam)
    oracle = mp.quad(lambda t: t**k * mp.exp(-t / lam_b), [0, x]) / lam_b ** (k + 1)
    assert abs(eval_w3k(ctx, k, lam, x) - oracle) < ctx.eps(-90) * oracle


def test_w6_theta_values():
    assert [w6_theta(k) for k in range(5)] == [1, Fraction(1, 2), Fraction(1, 12), Fraction(1, 24), Fraction(19, 720)]
    assert all(w6_theta(k) > 0 for k in range(30))


def test_w6_series_coefficients_match_taylor_expansion(ctx, mp):
    # finite-difference Taylor coefficients of u/log(1+u) just right of u = 0
    with mpmath.workdps(120):
        coeffs = [ctx.rebind(c) for c in mpmath.taylor(lambda u: u / mpmath.log1p(u), mpmath.mpf("1e-30"), 6)]
    for k, c in enumerate(coeffs):
        assert abs(c - ctx.big(w6_series_coefficient(k))) < ctx.eps(-20)
    # theta_2 is the magnitude of the u^2 coefficient
    assert abs(abs(coeffs[2]) - ctx.big(w6_theta(2))) < ctx.eps(-20)


@pytest.mark.parametrize("lam,x,terms", [("0.5", "0.5", 200), ("0.25", "1", 300)])
def test_w6_series_matches_closed_form(ctx, lam, x, terms):
    series = w6_series_eval(ctx, lam, x, terms)
    closed = eval_weight(weight("w6"), ctx, lam, x)
    assert abs(series - closed) < ctx.eps(-50)


def test_w6_series_boundaries(ctx):
    assert w6_series_eval(ctx, 0, 5, 10) == 1
    assert w6_kernel(ctx, 0) == 1
    with pytest.raises(DomainError):
        w6_series_eval(ctx, 2, 1, 10)


def test_w5_integral_form(ctx, mp):
    rng = random.Random(3)
    w5 = weight("w5")
    for _ in range(20):
        lam, x = ctx.big(rng.uniform(0.05, 3)), ctx.big(rng.uniform(0.05, 4))
        integral = mp.quad(lambda t: (1 + t) ** (x - 1), [0, lam]) / lam
        assert abs(eval_weight(w5, ctx, lam, x) - integral) < ctx.eps(-60) * integral


def test_w7_carlson_factor(ctx, mp):
    rng = random.Random(4)
    for _ in range(10):
        s = ctx.big(rng.uniform(0.05, 6))
        integral = mp.quad(lambda t: 1 / ((1 + t) * (1 + s + t)), [0, 1, mp.inf])
        assert abs(mp.log1p(s) / s - integral) < ctx.eps(-30)


def test_growth_rates():
    assert growth_rate(weight("w1"), 0.5) == (0.5, False)
    assert growth_rate(weight("w4"), 0.5)[1] is True
    assert growth_rate(weight("w4"), 0) == (0.0, False)
    assert growth_rate(weight("w3"), 2) == (0.0, False)
    assert math.isclose(growth_rate(weight("size_biased"), 2)[0], math.log(2))


def test_region_within_domain():
    assert Region(0.1, 1, 0.1, 1).within(weight("w3").domain)
    assert not Region(-1, 1, 0.1, 1).within(weight("w3").domain)
    assert not Region(0.1, 1, 0.1, 1).within(weight("w6", restricted=True).domain)
    assert Region(0.1, 1, 0.1, 1, product_below_one=True).within(weight("w6", restricted=True).domain)
    with pytest.raises(ValueError):
        Region(1, 1, 0, 1)
