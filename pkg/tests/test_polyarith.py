import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from pretlab.arith import factorize, get_sieve
from pretlab.errors import InvalidArgument, MalformedSpec
from pretlab.polyarith import (
    PolynomialZ,
    factor_poly_values,
    joint_density_F,
    joint_omega,
    large_prime_powers,
    omega,
    omega_prime_power,
    padic_expectation,
    parse_polynomial,
    resultant,
    roots_mod_p,
)

X = sympy.Symbol("x")
small_coeffs = st.lists(st.integers(-20, 20), min_size=2, max_size=5).filter(lambda c: c[-1] != 0)


def brute_omega(P, m):
    return sum(1 for r in range(m) if P(r) % m == 0)


def test_parse():
    assert parse_polynomial("x").coeffs == (0, 1)
    assert parse_polynomial(" 3*x^2 - 2x + 7 ").coeffs == (7, -2, 3)
    assert parse_polynomial("x^2+1")(10) == 101
    for bad in ("", "x^", "2y", "x x"):
        with pytest.raises(MalformedSpec):
            parse_polynomial(bad)


def test_resultant_examples():
    assert resultant(parse_polynomial("x"), parse_polynomial("x+1")) == 1
    assert resultant(parse_polynomial("x^2+1"), parse_polynomial("x^2+1")) == 0
    assert resultant(parse_polynomial("2x+1"), parse_polynomial("3x+2")) == 2 * 2 - 3 * 1


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
def test_linear_resultant_sign_convention(a, c, b, d):
    if a == 0 or b == 0:
        return
    assert resultant(PolynomialZ.linear(a, c), PolynomialZ.linear(b, d)) == a * d - b * c


def _root_product_resultant(cp, cq):
    """lead(P)^deg Q · Π Q(α) over the roots α of P, in exact algebraic arithmetic."""
    P = sympy.Poly(list(reversed(cp)), X)
    Q = sympy.Poly(list(reversed(cq)), X)
    value = P.LC() ** Q.degree()
    for root, mult in sympy.roots(P, multiple=False).items():
        value *= Q.as_expr().subs(X, root) ** mult
    return sympy.nsimplify(sympy.simplify(sympy.expand(value)))


@given(
    st.lists(st.integers(-9, 9), min_size=2, max_size=3).filter(lambda c: c[-1] != 0),
    small_coeffs,
)
def test_resultant_matches_root_product(cp, cq):
    P, Q = PolynomialZ(tuple(cp)), PolynomialZ(tuple(cq))
    assert resultant(P, Q) == _root_product_resultant(cp, cq)


@given(small_coeffs, small_coeffs)
def test_resultant_swap_rule(cp, cq):
    P, Q = PolynomialZ(tuple(cp)), PolynomialZ(tuple(cq))
    assert resultant(Q, P) == (-1) ** (P.degree * Q.degree) * resultant(P, Q)


def test_resultant_needs_nonconstant():
    with pytest.raises(InvalidArgument):
        resultant(PolynomialZ((3,)), parse_polynomial("x"))


def test_omega_examples():
    P = parse_polynomial("x^2+1")
    assert [omega_prime_power(P, 5, 1), omega_prime_power(P, 5, 2)] == [2, 2]
    assert [r for r in range(25) if (r * r + 1) % 25 == 0] == [7, 18]
    assert [omega_prime_power(P, 2, 1), omega_prime_power(P, 2, 2), omega_prime_power(P, 3, 1)] == [1, 0, 0]
    assert omega(P, factorize(65)) == 4 == brute_omega(P, 65)
    assert omega(P, []) == 1
    assert omega(parse_polynomial("x"), factorize(360)) == 1


@given(small_coeffs, st.sampled_from([2, 3, 5, 7, 11]), st.integers(1, 4))
def test_omega_prime_power_matches_enumeration(coeffs, p, k):
    P = PolynomialZ(tuple(coeffs))
    if P.degree < 1 or p**k > 3000:
        return
    assert omega_prime_power(P, p, k) == brute_omega(P, p**k)


def test_singular_and_degenerate_cases():
    for s in ("4x^2+4x+1", "x^3", "2x^2+2", "x^4+x+6", "6x^2+5x+1", "9x^3-x"):
        P = parse_polynomial(s)
        for p in (2, 3, 5):
            for k in range(1, 6):
                if p**k <= 5000:
                    assert omega_prime_power(P, p, k) == brute_omega(P, p**k), (s, p, k)


@given(small_coeffs, st.sampled_from(list(sympy.primerange(2, 200))))
def test_roots_mod_p(coeffs, p):
    P = PolynomialZ(tuple(coeffs))
    if P.degree < 1:
        return
    assert sorted(roots_mod_p(P, p)) == [r for r in range(p) if P(r) % p == 0]


@given(st.lists(st.integers(-9, 9), min_size=4, max_size=4).filter(lambda c: c[-1] != 0), st.integers(1, 100), st.integers(1, 100))
def test_omega_multiplicative(coeffs, m1, m2):
    if math.gcd(m1, m2) != 1:
        return
    P = PolynomialZ(tuple(coeffs))
    assert omega(P, factorize(m1 * m2)) == omega(P, factorize(m1)) * omega(P, factorize(m2))


def test_hensel_consistency_at_good_primes():
    for s in ("x^2+1", "x^3-2", "x^2-x-1", "2x^3+x+1"):
        P = parse_polynomial(s)
        disc = int(sympy.discriminant(sum(c * X**i for i, c in enumerate(P.coeffs)), X))
        for p in sympy.primerange(2, 51):
            if (disc * P.lead) % p == 0:
                continue
            w = omega_prime_power(P, p, 1)
            assert all(omega_prime_power(P, p, k) == w for k in range(2, 7))


def test_joint_omega_examples():
    x, x1 = parse_polynomial("x"), parse_polynomial("x+1")
    assert joint_omega(x, x1, 2, 1, 1) == 0
    assert joint_omega(x, x1, 2, 1, 0) == Fraction(1, 4)
    # 4 || n forces 8 | n + 4, so the pair (4 || n, 4 || n+4) never occurs
    assert joint_omega(x, parse_polynomial("x+4"), 2, 2, 2) == 0
    v2 = lambda n: (n & -n).bit_length() - 1
    assert sum(1 for n in range(1, 65) if v2(n) == 2 and v2(n + 4) == 2) == 0


def test_joint_omega_coprime_resultant_and_marginals():
    P, Q = parse_polynomial("x^2+1"), parse_polynomial("x^2+x+3")
    R = resultant(P, Q)
    for p in (2, 3, 5, 7):
        for k in range(3):
            marg = sum(joint_omega(P, Q, p, k, l) for l in range(6))
            single = Fraction(brute_omega(P, p**k), p**k) - Fraction(brute_omega(P, p ** (k + 1)), p ** (k + 1))
            assert abs(marg - single) <= Fraction(1, p**5)
            if R % p:
                for l in range(1, 3):
                    if k:
                        assert joint_omega(P, Q, p, k, l) == 0


def test_joint_density_F():
    x, x1, x2 = (parse_polynomial(s) for s in ("x", "x+1", "x+2"))
    assert joint_density_F(x, x1, factorize(3), factorize(2)) == Fraction(1, 6)
    assert joint_density_F(x, x1, [], []) == 1
    assert joint_density_F(x, x2, factorize(2), factorize(2)) == Fraction(1, 2)
    for d1, d2 in itertools.product(range(1, 30), repeat=2):
        expected = Fraction(1, math.lcm(d1, d2)) if math.gcd(d1, d2) == 1 else 0
        assert joint_density_F(x, x1, factorize(d1), factorize(d2)) == expected


def test_empirical_divisor_density():
    P = parse_polynomial("x^2+x+41")
    vals = np.array([P(n) for n in range(1, 10**5 + 1)], dtype=np.int64)
    for d in range(1, 101):
        emp = np.count_nonzero(vals % d == 0) / 10**5
        assert abs(emp - omega(P, factorize(d)) / d) <= 10 * d / 10**5


def _padic_brute(polys, locs, p, K):
    mod = p**K
    total = 0j
    for n in range(mod):
        term = 1
        for P, loc in zip(polys, locs):
            v = P(n)
            e = 0
            while v % p == 0 and e < K:
                v //= p
                e += 1
            term *= loc(e)
        total += term
    return total / mod


def test_padic_expectation_against_enumeration():
    polys = [parse_polynomial("x^2+1"), parse_polynomial("x+3")]
    locs = [lambda k: [1, 0.5, -0.25, 0, 0, 0, 0][min(k, 6)], lambda k: [1, -1, 1, -1, 1, -1, 1][min(k, 6)]]
    for p in (2, 3, 5):
        # locals are constant from exponent 6 on, so the truncation at K = 7 is exact
        res = padic_expectation(polys, locs, p)
        assert res.value == pytest.approx(_padic_brute(polys, locs, p, 7), abs=1e-12)


def test_large_prime_powers():
    x = parse_polynomial("x")
    assert large_prime_powers(x, 100).members == frozenset()
    assert large_prime_powers(x, 97).members == frozenset({(97, 1)})
    assert (101, 1) in large_prime_powers(parse_polynomial("x^2+1"), 100)
    big = large_prime_powers(parse_polynomial("x^2+1"), 10**4)
    assert len(big) >= 0.4 * 10**4
    assert all(p >= 10**4 for p, _ in big.members)


def test_large_prime_powers_routes_agree():
    P = parse_polynomial("x^2+1")
    dense = large_prime_powers(P, 3000)
    swept = large_prime_powers(P, 3000, bound=6000)
    assert dense.members == swept.members and dense.hits == swept.hits


def test_factor_poly_values():
    sv = get_sieve(10**4)
    for n, v, fac in factor_poly_values(parse_polynomial("x"), 10**4):
        assert v == n and fac == factorize(n, sv)
    P = parse_polynomial("x^2+1")
    rows = list(factor_poly_values(P, 10**4))
    assert rows[9] == (10, 101, [(101, 1)])
    for n, v, fac in rows:
        assert v == n * n + 1 == math.prod(p**e for p, e in fac)
        assert all(sympy.isprime(p) for p, _ in fac[-1:])
