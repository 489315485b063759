import json
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from pretlab.characters import autocorr_literal, characters_mod, primitive_characters
from pretlab.correlation import (
    SingularSeries,
    archimedean_factor,
    autocorr_G0,
    char_autocorr,
    charshift_prime_power,
    charshift_prime_power_printed,
    correlate_multi,
    g_factor,
    keytotao_value,
    local_corr_poly,
    local_products,
    predict_char_shift,
    predict_linear_corr,
    predict_poly_corr,
    shifted_selfcorr,
)
from pretlab.errors import DegenerateForms, InvalidArgument, ResultantZero
from pretlab.multfun import char_func, liouville, make_mult_func, mobius_sq, nit, one, product
from pretlab.polyarith import parse_polynomial

PERIOD2 = "override(one; 2:*=>-1)"
LOCAL_SPECS = [
    "mobius_sq",
    "liouville",
    PERIOD2,
    "indicator_odd",
    "override(one; 3:^=>-1; 7:1=>0)",
    "override(mobius_sq; 2:1=>-1; 3:2=>0.6+0.8i)",
]


def chi3():
    return [c for c in characters_mod(3) if not c.is_principal][0]


def _vals(f, p, K):
    return [f.rule(p, k) for k in range(K + 1)]


def local_enumeration(f, g, P, Q, p, K):
    """Mean over n mod p^K of f_p(P(n)) g_p(Q(n)); exact when f, g are constant
    from exponent K - 1 on and the valuations never reach K."""
    mod = p**K
    fv, gv = _vals(f, p, K), _vals(g, p, K)
    total = 0j
    for n in range(mod):
        total += fv[min(_vp(P(n), p, K), K)] * gv[min(_vp(Q(n), p, K), K)]
    return total / mod


def _vp(v, p, cap):
    e = 0
    while v % p == 0 and e < cap:
        v //= p
        e += 1
    return e


def test_local_factor_examples():
    x, x1, x2 = (parse_polynomial(s) for s in ("x", "x+1", "x+2"))
    assert all(local_corr_poly(one(), one(), x, x1, p) == pytest.approx(1) for p in (2, 3, 53))
    assert local_corr_poly(mobius_sq(), mobius_sq(), x, x1, 3) == pytest.approx(7 / 9)
    assert local_corr_poly(mobius_sq(), mobius_sq(), x, x2, 2) == pytest.approx(0.5)
    assert Fraction(sum(1 for n in range(8) if n % 4 and (n + 2) % 4), 8) == Fraction(1, 2)
    assert local_corr_poly(mobius_sq(), mobius_sq(), x, x1, 101) == pytest.approx(1 - 2 / 101**2)


def test_local_factors_against_residue_enumeration():
    pairs = [("x", "x+4"), ("2x+1", "x^2+1"), ("x^2+1", "x^2+3"), ("3x+1", "x+5")]
    f = make_mult_func("override(mobius_sq; 2:1=>-1)")
    g = make_mult_func("override(one; 3:1=>0.6+0.8i; 5:1=>-1)")
    for ps, qs in pairs:
        P, Q = parse_polynomial(ps), parse_polynomial(qs)
        for p in (2, 3, 5):
            K = 6 if p == 2 else 4
            assert local_corr_poly(f, g, P, Q, p) == pytest.approx(local_enumeration(f, g, P, Q, p, K), abs=1e-12)


def test_resultant_zero_rejected():
    with pytest.raises(ResultantZero):
        local_corr_poly(one(), one(), parse_polynomial("x^2+1"), parse_polynomial("2x^2+2"), 3)
    with pytest.raises(ResultantZero):
        predict_poly_corr(one(), one(), parse_polynomial("x"), parse_polynomial("3x"), 100)
    with pytest.raises(DegenerateForms):
        correlate_multi([(one(), 0, 1, 1), (one(), 0, 2, 2)], 100)


def test_squarefree_pair():
    rep = predict_linear_corr(mobius_sq(), mobius_sq(), 1, 0, 1, 1, x=10**6)
    assert rep.direct == pytest.approx(322619 / 10**6, abs=1e-12)
    assert rep.gap <= 0.01
    oracle = math.prod(1 - 2 / p**2 for p in sympy.primerange(2, 10**6 + 1))
    assert rep.prediction.real == pytest.approx(oracle, rel=1e-10)
    assert rep.form_gap <= 1e-10
    assert [r for r, _ in rep.singular_series_terms] == [1]


def test_polynomial_route_matches_linear_route():
    a = predict_poly_corr(mobius_sq(), liouville(), parse_polynomial("x"), parse_polynomial("x+1"), 10**4, direct=False)
    b = predict_linear_corr(mobius_sq(), liouville(), 1, 0, 1, 1, x=10**4, direct=False)
    assert a.prediction == pytest.approx(b.prediction, abs=1e-12)


def test_quadratic_pair_against_direct():
    rep = predict_poly_corr(mobius_sq(), mobius_sq(), parse_polynomial("x^2+1"), parse_polynomial("x+1"), 10**5)
    assert rep.gap <= 0.01


def test_alternating_character_mean():
    f = make_mult_func("override(one; 2:^=>-1)")
    rep = predict_linear_corr(f, f, 1, 0, 1, 1, x=10**6)
    assert rep.prediction.real == pytest.approx(-1 / 3, abs=1e-12)
    assert abs(rep.direct + 1 / 3) <= 0.01


def test_period_two_singular_series():
    f = make_mult_func(PERIOD2)
    ss = SingularSeries(f, f, 1, 1, 1000)
    assert [ss.G(r) for r in (1, 2, 4, 8)] == pytest.approx([-1, 4, 0, 0])
    assert ss.zero_primes == frozenset()
    # f(n)f(n+m) is -1 for odd m and +1 for even m, so Σ_{r|m} G(r)/r must be ±1
    for m in range(1, 13):
        rep = shifted_selfcorr(f, m, 10**4)
        assert rep.prediction.real == pytest.approx(-1 if m % 2 else 1, abs=1e-12)
        assert rep.direct.real == pytest.approx(-1 if m % 2 else 1, abs=1e-3)


def test_g_factor_vanishes_on_common_coefficient_divisor():
    assert g_factor(mobius_sq(), mobius_sq(), 6, 2, 4, 100).value == 0
    assert g_factor(mobius_sq(), mobius_sq(), 1, 2, 4, 100).value != 0
    # θ(p) = 0 for the squarefree indicator, so every factor with k = 1 vanishes
    assert g_factor(mobius_sq(), mobius_sq(), 3, 2, 4, 100).value == 0


def test_odd_indicator_g():
    odd = make_mult_func("indicator_odd")
    # n and n+1 are never both odd; n and n+2 are both odd half the time
    assert autocorr_G0(odd, 1) == 0
    assert autocorr_G0(odd, 2) == pytest.approx(1)
    assert shifted_selfcorr(odd, 2, 1000).prediction == pytest.approx(0.5)
    assert odd.trivial_above == 2 and SingularSeries(odd, odd, 1, 1, 100).zero_primes == frozenset({2})


@given(
    st.sampled_from(LOCAL_SPECS),
    st.sampled_from(LOCAL_SPECS),
    st.integers(1, 6),
    st.integers(1, 6),
    st.integers(-6, 6),
    st.integers(-6, 6),
)
def test_form_agreement(fs, gs, a, b, c, d):
    if math.gcd(a, c) != 1 or math.gcd(b, d) != 1 or a * d == b * c:
        return
    rep = predict_linear_corr(make_mult_func(fs), make_mult_func(gs), a, c, b, d, x=3000, direct=False)
    series = sum(v / r for r, v in rep.singular_series_terms)
    prod = np.prod([v for _, v in rep.local_factors])
    assert abs(series - prod) <= 1e-10 * max(1, abs(prod))


def test_linear_forms_against_direct():
    f = make_mult_func("override(mobius_sq; 2:1=>-1)")
    for a, c, b, d in [(1, 0, 1, 2), (2, 1, 1, 0), (3, 1, 2, 1), (1, 0, 3, 1)]:
        rep = predict_linear_corr(f, mobius_sq(), a, c, b, d, x=2 * 10**5)
        assert rep.gap <= 0.01, (a, c, b, d)


def test_archimedean_twist():
    assert archimedean_factor(0, 0, parse_polynomial("x"), parse_polynomial("x+1"), 100) == 1
    t, x = 0.5, 10**6
    rep = predict_linear_corr(nit(t), one(), 1, 0, 1, 1, t=t, x=x)
    assert rep.archimedean == pytest.approx(np.exp(1j * t * np.log(x)) / (1 + 1j * t))
    assert rep.gap <= 0.01
    g = product(mobius_sq(), nit(0.3))
    rep = predict_linear_corr(g, mobius_sq(), 2, 1, 1, 1, t=0.3, x=x)
    assert rep.gap <= 0.01


def test_invalid_linear_inputs():
    with pytest.raises(InvalidArgument):
        predict_linear_corr(one(), one(), 0, 1, 1, 1, x=100)
    with pytest.raises(InvalidArgument):
        predict_linear_corr(one(), one(), 2, 4, 1, 1, x=100)
    with pytest.raises(DegenerateForms):
        predict_linear_corr(one(), one(), 1, 1, 1, 1, x=100)


def test_shifted_selfcorr_squarefree():
    rep = shifted_selfcorr(mobius_sq(), 4, 10**6)
    assert rep.gap <= 0.005


def test_char_autocorr_examples():
    assert char_autocorr(chi3(), 1) == -1
    chi9 = primitive_characters(9)[0]
    assert char_autocorr(chi9, 3) == -3 and char_autocorr(chi9, 1) == 0
    assert char_autocorr(chi9, 3) == pytest.approx(autocorr_literal(chi9, 3))
    with pytest.raises(InvalidArgument):
        char_autocorr(characters_mod(9)[3], 1)  # conductor 3, not primitive mod 9


def test_charshift_factor_against_periodic_sums():
    # for f = χ itself the shift-d mean is exactly autocorr(χ, d)/q
    for q in (3, 4, 5, 8, 9, 25, 27):
        for chi in primitive_characters(q):
            f = char_func(chi)
            for d in range(1, q + 2):
                rep = predict_char_shift(f, chi, 0.0, d, 2000, direct=False)
                assert rep.prediction == pytest.approx(autocorr_literal(chi, d) / q, abs=1e-12), (q, chi.index, d)


def test_charshift_prime_power_corrected_vs_printed():
    f = char_func(chi3())
    assert charshift_prime_power(f, 3, 1, 1) == pytest.approx(-1 / 3)
    assert charshift_prime_power_printed(f, 3, 1, 1) == pytest.approx(2 / 3)
    assert charshift_prime_power(f, 3, 1, 3) == pytest.approx(2 / 3)


def test_charshift_against_direct():
    chi = chi3()
    f = make_mult_func("override(char(3,1); 3:*=>-1)")
    for d in (1, 2, 3, 6, 9):
        rep = predict_char_shift(f, chi, 0.0, d, 10**6)
        assert rep.gap <= 0.01, d
    chi5 = [c for c in primitive_characters(5) if c.order == 4][0]
    rep = predict_char_shift(product(make_mult_func("override(char(5,1); 5:1=>1; 5:2=>-1)"), nit(0.5)), chi5, 0.5, 5, 10**6)
    assert rep.gap <= 0.01


def test_charshift_zero_unless_divisible():
    chi9 = primitive_characters(9)[0]
    rep = predict_char_shift(char_func(chi9), chi9, 0.0, 1, 10**4, direct=False)
    assert rep.prediction == 0


def test_charshift_requires_unimodular_off_q():
    with pytest.raises(InvalidArgument):
        predict_char_shift(mobius_sq(), characters_mod(1)[0], 0.0, 1, 1000)
    with pytest.raises(InvalidArgument):
        predict_char_shift(one(), characters_mod(9)[3], 0.0, 1, 1000)


def test_keytotao():
    chi = chi3()
    assert keytotao_value(char_func(chi), chi, 0.0) == pytest.approx(-1 / 3, abs=1e-12)
    assert keytotao_value(one(), characters_mod(1)[0], 0.0) == pytest.approx(1)
    rep = predict_char_shift(char_func(chi), chi, 0.0, 1, 10**6)
    assert abs(rep.direct + 1 / 3) <= 0.01


def test_multi_point():
    sq = mobius_sq()
    rep = correlate_multi([(sq, 0, 1, 0), (sq, 0, 1, 1), (sq, 0, 1, 2)], 10**6)
    assert rep.gap <= 0.01
    oracle = math.prod(1 - 3 / p**2 for p in sympy.primerange(3, 10**6 + 1)) * 0.25
    assert rep.prediction.real == pytest.approx(oracle, rel=1e-9)
    two = correlate_multi([(liouville(), 0, 2, 1), (sq, 0, 1, 3)], 10**4, direct=False)
    ref = predict_linear_corr(liouville(), sq, 2, 1, 1, 3, x=10**4, direct=False)
    assert two.prediction == pytest.approx(ref.prediction, abs=1e-12)


def test_local_products_single_term_is_mean_factor():
    from pretlab.meanvalue import local_mean_poly

    P = parse_polynomial("x^2+1")
    for p, v in local_products([mobius_sq()], [P], 200):
        assert v == pytest.approx(local_mean_poly(mobius_sq(), P, p).value, abs=1e-13)


def test_report_json():
    rep = predict_linear_corr(mobius_sq(), mobius_sq(), 1, 0, 1, 2, x=1000)
    data = json.loads(json.dumps(rep.to_json(), allow_nan=False))
    assert set(data) >= {"prediction", "archimedean", "direct", "x", "local_factors", "series_terms", "error_budget", "spec", "form_gap"}
    assert data["local_factors"][0][0] == 2


def test_trivial_character_shift_reduces_to_selfcorr():
    trivial = characters_mod(1)[0]
    for spec in ("liouville", "override(liouville; 3:2=>0.6+0.8i; 5:*=>-i)", "nit(0.25)", "override(char(7,2); 7:*=>-1)"):
        f = make_mult_func(spec)
        for d in (1, 2, 6, 12):
            a = predict_char_shift(f, trivial, 0.0, d, 3000, direct=False).prediction
            b = shifted_selfcorr(f, d, 3000, direct=False).prediction
            assert abs(a - b) <= 1e-10, (spec, d)


@pytest.mark.slow
def test_pair_gap_shrinks_with_x():
    gaps = [predict_linear_corr(mobius_sq(), mobius_sq(), 1, 0, 1, 1, x=x).gap for x in (10**4, 10**5, 10**6)]
    assert gaps[1] <= gaps[0] + 0.01 and gaps[2] <= gaps[1] + 0.01
