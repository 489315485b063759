import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from pretlab.applications import (
    brudern_count,
    brudern_predict,
    complexcor_check,
    density,
    density_product,
    discrepancy,
    discrepancy_profile,
    ect_characterize,
    g_properties_check,
    katai_energy,
    katai_report,
    katai_stat,
    second_moment,
    second_moment_empirical,
    second_moment_prediction,
)
from pretlab.characters import characters_mod
from pretlab.correlation import keytotao_value
from pretlab.errors import InvalidArgument
from pretlab.multfun import char_func, liouville, make_mult_func, mobius_sq, nit, one, with_prime_values

PERIOD2 = "override(one; 2:*=>-1)"
ENERGY_THIRD = "override(one; 2:^=>-1)"  # completely multiplicative, f(2) = -1


def trivial():
    return characters_mod(1)[0]


def chi3():
    return characters_mod(3)[1]


def test_ect_examples():
    v = ect_characterize(make_mult_func(PERIOD2))
    assert v.satisfies_characterization and v.period_m == 2 and v.period_sum == 0
    v = ect_characterize(one())
    assert not v.satisfies_characterization and any("2^1" in w for w in v.witnesses)
    v = ect_characterize(liouville())
    assert not v.satisfies_characterization and v.witnesses


def test_ect_period_includes_odd_primes():
    f = make_mult_func("override(one; 2:*=>-1; 3:*=>-1)")
    v = ect_characterize(f, M=50)
    assert v.satisfies_characterization and v.period_m == 6
    assert [f(n) for n in range(1, 7)] == [1, -1, -1, -1, 1, 1]


def test_ect_soundness():
    for spec in (PERIOD2, "override(one; 2:*=>-1; 3:*=>-1)", "override(one; 2:*=>-1; 3:1=>-1; 3:*=>1; 5:1=>-1)"):
        f = make_mult_func(spec)
        v = ect_characterize(f, M=100)
        if v.satisfies_characterization:
            assert discrepancy(f, 10**5) <= v.period_m


def test_ect_completeness_growth():
    f = make_mult_func("override(one; 2:*=>-1; 3:^=>-1)")
    assert not ect_characterize(f, M=100).satisfies_characterization
    prof = discrepancy_profile(f, [10**3, 10**4, 10**5, 10**6])
    assert all(b >= a for a, b in zip(prof, prof[1:])) and prof[-1] > prof[0]


def test_ect_rejects_non_sign_values():
    with pytest.raises(InvalidArgument):
        ect_characterize(mobius_sq())


def test_discrepancy_examples():
    assert discrepancy(make_mult_func(PERIOD2), 12345) == 1
    assert discrepancy(one(), 100) == 100
    assert discrepancy(liouville(), 10**6) >= 100


def test_g_properties_period_two():
    rep = g_properties_check(make_mult_func(PERIOD2), a_max=50)
    assert rep.ok
    assert rep.G[1] == pytest.approx(-1) and rep.G[2] == pytest.approx(4)
    assert all(abs(rep.G[4 * a]) < 1e-12 for a in range(1, 51))
    # exact: only the p = 2 factors are nontrivial, G(1) = -1, G(2) = 4
    assert Fraction(-1, 1) + Fraction(4, 2) == 1 and Fraction(-1, 1) + Fraction(4, 4) == 0
    assert rep.sum_over_a == pytest.approx(1, abs=1e-10) and rep.sum_over_a_sq == pytest.approx(0, abs=1e-10)


def test_g_properties_with_f3_equal_one():
    rep = g_properties_check(make_mult_func("override(one; 2:*=>-1; 5:*=>-1)"), a_max=100)
    assert rep.ok and rep.checks["G(a)<=0 for odd a"]


def test_g_properties_requires_minus_one_at_two():
    rep = g_properties_check(liouville())
    assert not rep.ok and rep.problems


def test_second_moment_examples():
    f = make_mult_func(PERIOD2)
    assert second_moment(f, 4, 10**5) == pytest.approx((0, 0), abs=1e-12)
    assert second_moment(f, 3, 10**5) == pytest.approx((1, 1), abs=1e-12)
    assert second_moment(f, 7, 10**5) == pytest.approx((1, 1), abs=1e-12)


def test_second_moment_window_has_H_terms():
    f = make_mult_func(PERIOD2)
    x, H = 1000, 3
    brute = sum(sum(f(k) for k in range(n + 1, n + H + 1)) ** 2 for n in range(1, x + 1)) / x
    assert second_moment_empirical(f, H, x) == pytest.approx(brute)


@pytest.mark.slow
@pytest.mark.parametrize("spec", [PERIOD2, "override(one; 2:*=>-1; 5:*=>-1)", "override(one; 2:*=>-1; 3:2=>-1)"])
def test_second_moment_identity(spec):
    f = make_mult_func(spec)
    for H in range(1, 17):
        emp, pred = second_moment(f, H, 10**6)
        assert abs(emp - pred) <= 0.05, H


def test_second_moment_prediction_stable_under_range():
    f = make_mult_func("override(one; 2:*=>-1; 5:*=>-1)")
    assert second_moment_prediction(f, 9, 10**4) == pytest.approx(second_moment_prediction(f, 9, 10**5), abs=1e-9)


def test_katai_energy_examples():
    assert katai_energy(nit(0.7), trivial(), 0.7) == pytest.approx(1)
    assert katai_energy(make_mult_func(ENERGY_THIRD), trivial(), 0.0) == pytest.approx(-1 / 3)
    f = char_func(chi3())
    assert katai_energy(f, chi3(), 0.0) == pytest.approx(-1 / 3)
    assert katai_energy(f, chi3(), 0.0) == keytotao_value(f, chi3(), 0.0)


def test_katai_stat_examples():
    assert katai_stat(one(), 10**4) == 0
    assert katai_stat(nit(0.3), 10**6) <= 0.05
    assert abs(katai_stat(liouville(), 10**6) - 2) <= 0.3


def test_katai_stat_against_pointwise():
    f = make_mult_func(ENERGY_THIRD)
    x = 5000
    brute = sum(abs(f(n + 1) - f(n)) ** 2 / n for n in range(1, x + 1)) / math.log(x)
    assert katai_stat(f, x) == pytest.approx(brute, rel=1e-12)


def test_katai_report_branches():
    rep = katai_report(make_mult_func(ENERGY_THIRD), trivial(), 0.0, 10**5)
    assert rep.coefficient_pred == pytest.approx(8 / 3) and not rep.vanishing_branch
    primes = np.array(list(sympy.primerange(2, 10**5 + 1)), dtype=np.int64)
    vanishing = with_prime_values(one(), primes, np.zeros(primes.size))
    rep = katai_report(vanishing, trivial(), 0.0, 10**5)
    assert rep.vanishing_branch and math.isnan(rep.coefficient_pred)


def test_complexcor():
    chi = chi3()
    entries = "; ".join(f"2:{k}=>{(-1) ** (k + 1)}" for k in range(1, 21))
    good = make_mult_func(f"override(char(3,1); {entries})")
    assert complexcor_check(good, chi, 0.0, x=10**4).passed
    assert not complexcor_check(one(), chi, 0.0, x=10**4).passed
    # -χ(2)^k is +1 for odd k and -1 for even k, so f(2^k) = -1 fails exactly at odd k
    rep = complexcor_check(make_mult_func("override(char(3,1); 2:*=>-1)"), chi, 0.0, K=6, x=10**4)
    assert not rep.passed and rep.failures == [1, 3, 5]
    chi4 = characters_mod(4)[1]
    assert not complexcor_check(char_func(chi4), chi4, 0.0, x=10**4).odd_conductor


def test_density_examples():
    assert density(one(), 7, 10**4).prediction == pytest.approx(1)
    assert density(make_mult_func("indicator_odd"), 2, 10**4).prediction == 0
    assert density(make_mult_func("indicator_odd"), 2, 10**4).empirical == 0
    rep = density(mobius_sq(), 1, 10**6)
    assert abs(rep.empirical - 0.6079) <= 0.001 and abs(rep.prediction - 0.6079) <= 0.001


def test_density_along_multiples():
    for d in (2, 3, 4, 6, 10):
        rep = density(mobius_sq(), d, 10**6)
        assert abs(rep.empirical - rep.prediction) <= 0.005
    assert density(mobius_sq(), 4, 10**4).prediction == 0


def test_density_rejects_non_indicators():
    with pytest.raises(InvalidArgument):
        density(liouville(), 1, 100)
    assert density_product(one(), 1000) == 1


def test_brudern_counts():
    odd = make_mult_func("indicator_odd")
    assert brudern_count(one(), one(), 5) == 4
    assert brudern_count(odd, odd, 8) == 4
    sq = [n for n in range(1, 20) if all(n % (p * p) for p in (2, 3))]
    assert brudern_count(mobius_sq(), mobius_sq(), 20) == sum(1 for m in sq if (20 - m) in sq) == 11


def test_brudern_predictions():
    rep = brudern_predict(one(), one(), 10**4)
    assert rep.r_pred_G == 10**4 and rep.r_direct == 9999
    odd = make_mult_func("indicator_odd")
    rep = brudern_predict(odd, odd, 10001)
    assert rep.r_direct == 0 and rep.r_pred_G == 0
    rep = brudern_predict(mobius_sq(), mobius_sq(), 10**4)
    assert abs(rep.r_direct - rep.r_pred_G) <= 0.03 * 10**4
    rep = brudern_predict(odd, mobius_sq(), 10**4)
    assert abs(rep.r_direct - rep.r_pred_G) <= 0.03 * 10**4


def test_brudern_sigma_readings_reported():
    a = brudern_predict(one(), one(), 1000, reading="printed")
    b = brudern_predict(one(), one(), 1000, reading="relative")
    assert a.sigma_reading == "printed" and b.sigma_reading == "relative"
    assert a.r_pred_sigma != pytest.approx(1000, abs=1)  # the printed product does not reproduce r(n) = n - 1
    assert set(a.a_table) == {2, 5}
    with pytest.raises(InvalidArgument):
        brudern_predict(one(), one(), 1000, reading="other")
