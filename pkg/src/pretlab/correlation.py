"""Correlation predictions: local correlation factors, singular series G(r),
character-twisted shifts and the direct-sum oracles they are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from .arith import divisors, factor_any, get_sieve, mobius, require_within_limit
from .characters import DirichletCharacter, autocorr_closed_form, autocorr_literal
from .errors import DegenerateForms, InsufficientBound, InvalidArgument, OutOfRange, PretlabError, ResultantZero
from .meanvalue import _primes_upto, local_mean_poly, local_means, poly_local_means
from .multfun import MultFunc, conj, distance_poly, nit, one, product, theta_values, twist
from .oracles import func_on_poly
from .polyarith import PolynomialZ, as_poly, padic_expectation, resultant

ENGINE_PRIME_CUTOFF = 50
FORM_TOL = 1e-10
ZERO_FACTOR_TOL = 1e-14
LITERAL_CHECK_MAX_Q = 10**4


def _cjson(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


@dataclass
class CorrelationReport:
    prediction: complex
    archimedean: complex
    direct: complex | None
    x: int
    local_factors: list[tuple[int, complex]] = field(default_factory=list, repr=False)
    singular_series_terms: list[tuple[int, complex]] | None = None
    error_budget: float = float("nan")
    form_gap: float | None = None
    spec: dict = field(default_factory=dict)

    @property
    def gap(self) -> float | None:
        """|direct - prediction| when the oracle was run."""
        return None if self.direct is None else abs(self.direct - self.prediction)

    def to_json(self) -> dict:
        out = {
            "prediction": _cjson(self.prediction),
            "archimedean": _cjson(self.archimedean),
            "direct": None if self.direct is None else _cjson(self.direct),
            "x": self.x,
            "local_factors": [[p, complex(v).real, complex(v).imag] for p, v in self.local_factors],
            "series_terms": None
            if self.singular_series_terms is None
            else [[r, complex(v).real, complex(v).imag] for r, v in self.singular_series_terms],
            "error_budget": None if math.isnan(self.error_budget) else self.error_budget,
            "spec": self.spec,
        }
        if self.form_gap is not None:
            out["form_gap"] = self.form_gap
        return out


@dataclass(frozen=True)
class GFactor:
    r: int
    value: complex
    a: int
    b: int


# local correlation factors


def _engine(funcs: Sequence[MultFunc], polys: Sequence[PolynomialZ], p: int) -> complex:
    def at(f, k):
        return f.rule(p, k)

    return padic_expectation(list(polys), [partial(at, f) for f in funcs], p).value


def local_corr_poly(f: MultFunc, g: MultFunc, P, Q, p: int) -> complex:
    """M_p(f(P), g(Q)): the mean of f_p(P(n))·g_p(Q(n)) over n in Z_p.

    Away from the resultant the events p | P(n) and p | Q(n) are disjoint,
    which gives M_p(f(P)) + M_p(g(Q)) - 1; otherwise the p-adic engine.
    """
    P, Q = as_poly(P), as_poly(Q)
    res = resultant(P, Q)
    if res == 0:
        raise ResultantZero(f"{P} and {Q} share a root")
    if res % p and p > ENGINE_PRIME_CUTOFF:
        return local_mean_poly(f, P, p).value + local_mean_poly(g, Q, p).value - 1
    return _engine([f, g], [P, Q], p)


def _pairwise_resultants(polys: Sequence[PolynomialZ]) -> list[int]:
    out = []
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            r = resultant(polys[i], polys[j])
            if r == 0:
                raise DegenerateForms(f"forms {i} ({polys[i]}) and {j} ({polys[j]}) share a root")
            out.append(r)
    return out


def local_products(funcs: Sequence[MultFunc], polys: Sequence[PolynomialZ], y: int) -> list[tuple[int, complex]]:
    """m-way local factors for every p <= y.

    The engine handles p <= ENGINE_PRIME_CUTOFF and primes dividing a pairwise
    resultant; at the other primes at most one polynomial can be divisible by
    p, so the factor is Σ_j M_p(f_j(P_j)) - (m - 1).
    """
    polys = [as_poly(P) for P in polys]
    res = _pairwise_resultants(polys)
    primes = np.asarray(_primes_upto(y), dtype=np.int64)
    special = primes <= ENGINE_PRIME_CUTOFF
    for r in res:
        special |= np.array([r % p == 0 for p in primes.tolist()], dtype=bool)
    vals = np.empty(primes.size, dtype=np.complex128)
    normal = ~special
    if np.any(normal):
        acc = np.full(int(normal.sum()), 1.0 - len(funcs), dtype=np.complex128)
        for f, P in zip(funcs, polys):
            acc += poly_local_means(f, P, primes[normal])[0]
        vals[normal] = acc
    for i in np.nonzero(special)[0].tolist():
        vals[i] = _engine(funcs, polys, int(primes[i]))
    return list(zip(primes.tolist(), vals.tolist()))


def _product(factors: Sequence[tuple[int, complex]]) -> complex:
    out = 1 + 0j
    for _, v in factors:
        out *= v
    return out


# archimedean factor and oracles


def archimedean_factor(t: float, u: float, P, Q, x: int) -> complex:
    """a^{it} b^{iu} x^{iT}/(1 + iT) with T = deg(P)·t + deg(Q)·u and a, b the leading coefficients."""
    P, Q = as_poly(P), as_poly(Q)
    return _archimedean([(P, t), (Q, u)], x)


def _archimedean(pairs, x: int) -> complex:
    if all(t == 0 for _, t in pairs):
        return 1 + 0j
    phase = 0.0
    T = 0.0
    for P, t in pairs:
        if P.lead < 1:
            raise InvalidArgument(f"leading coefficient of {P} must be >= 1")
        phase += t * math.log(P.lead)
        T += P.degree * t
    phase += T * math.log(x)
    return complex(np.exp(1j * phase) / (1 + 1j * T))


def corr_direct(f: MultFunc, g: MultFunc, P, Q, x: int) -> complex:
    """(1/x) Σ_{n <= x} f(P(n))·g(Q(n)) with f(0) = g(0) = 0."""
    return complex(np.sum(func_on_poly(f, as_poly(P), x) * func_on_poly(g, as_poly(Q), x))) / x


def _multi_direct(funcs, polys, x: int) -> complex:
    acc = np.ones(x, dtype=np.complex128)
    for f, P in zip(funcs, polys):
        acc *= func_on_poly(f, P, x)
    return complex(np.sum(acc)) / x


def _budget(funcs, polys, x: int) -> float:
    try:
        y = max(2.0, math.log(x))
        total = sum(distance_poly(one(), f, y, x, P).value for f, P in zip(funcs, polys))
        return total + 1 / math.log(math.log(x))
    except (OutOfRange, InsufficientBound, InvalidArgument):
        return float("nan")


def _untwist(f: MultFunc, t: float) -> MultFunc:
    return f if t == 0 else product(f, nit(-t))


# polynomial two-point correlation


def predict_poly_corr(
    f: MultFunc,
    g: MultFunc,
    P,
    Q,
    x: int,
    t: float = 0.0,
    u: float = 0.0,
    direct: bool = True,
    product_range: int | None = None,
) -> CorrelationReport:
    """Mean of f(P(n))g(Q(n)) over n <= x: archimedean factor times Π_{p<=y} M_p."""
    P, Q = as_poly(P), as_poly(Q)
    if resultant(P, Q) == 0:
        raise ResultantZero(f"{P} and {Q} share a root")
    require_within_limit(x)
    f0, g0 = _untwist(f, t), _untwist(g, u)
    arch = archimedean_factor(t, u, P, Q, x)
    facs = local_products([f0, g0], [P, Q], product_range or x)
    pred = arch * _product(facs)
    dv = corr_direct(f, g, P, Q, x) if direct else None
    spec = {"f": f.name, "g": g.name, "P": str(P), "Q": str(Q), "t": t, "u": u, "x": x}
    return CorrelationReport(pred, arch, dv, x, facs, None, _budget([f0, g0], [P, Q], x), None, spec)


# singular series


class SingularSeries:
    """G(f; g; r; x) for the linear pair (an + c, bn + d): a product over all
    p <= x of the factor with k = v_p(r).

    The k = 0 factor equals 1 + δ_b(M_p(g) - 1) + δ_a(M_p(f) - 1); these are
    multiplied once up front, and G(r) swaps in the k = v_p(r) factors at
    p | r. Vanishing k = 0 factors are tracked separately instead of divided by.
    """

    def __init__(self, f: MultFunc, g: MultFunc, a: int, b: int, x: int):
        self.f, self.g, self.a, self.b, self.x = f, g, a, b, x
        self.primes = np.asarray(_primes_upto(x), dtype=np.int64)
        mf = local_means(f, self.primes)
        mg = local_means(g, self.primes)
        base = 1 + np.where(b % self.primes != 0, mg - 1, 0) + np.where(a % self.primes != 0, mf - 1, 0)
        zero = np.abs(base) <= ZERO_FACTOR_TOL
        self._base = base
        self._index = {p: i for i, p in enumerate(self.primes.tolist())}
        self.zero_primes = frozenset(self.primes[zero].tolist())
        prod = 1 + 0j
        for v in base[~zero]:
            prod *= v
        self._nonzero_product = prod

    def factor(self, p: int, k: int) -> complex:
        """θ(p^k)γ(p^k) + δ_b Σ_{i>k} θ(p^k)γ(p^i)/p^{i-k} + δ_a Σ_{i>k} γ(p^k)θ(p^i)/p^{i-k}."""
        depth = math.ceil(math.log(1e17) / math.log(p)) + 1
        K = k + depth
        th = theta_values(self.f, p, K)
        ga = theta_values(self.g, p, K)
        w = float(p) ** -np.arange(1, depth + 1, dtype=np.float64)
        out = th[k] * ga[k]
        if self.b % p:
            out += th[k] * np.sum(ga[k + 1 :] * w)
        if self.a % p:
            out += ga[k] * np.sum(th[k + 1 :] * w)
        return complex(out)

    def G(self, r: int) -> complex:
        if r < 1:
            raise InvalidArgument(f"r must be >= 1, got {r}")
        if math.gcd(r, math.gcd(self.a, self.b)) > 1:
            return 0j
        fac = [(p, k) for p, k in (factor_any(r) if r > 1 else []) if p <= self.x]
        ps = {p for p, _ in fac}
        if self.zero_primes - ps:
            return 0j
        val = self._nonzero_product
        for p, k in fac:
            fk = self.factor(p, k)
            if p in self.zero_primes:
                val *= fk
            else:
                val *= fk / self._base[self._index[p]]
        return complex(val)

    def g_factor(self, r: int) -> GFactor:
        return GFactor(r, self.G(r), self.a, self.b)

    def series(self, N: int) -> tuple[complex, list[tuple[int, complex]]]:
        """Σ_{r | N} G(r)/r together with the individual terms."""
        N = abs(N)
        terms = [(r, self.G(r)) for r in divisors(factor_any(N) if N > 1 else [])]
        return sum(v / r for r, v in terms), terms


def g_factor(f: MultFunc, g: MultFunc, r: int, a: int, b: int, x: int) -> GFactor:
    """G(f; g; r; x) with the δ_a, δ_b switches set by p | a, p | b."""
    if r < 1:
        raise InvalidArgument(f"r must be >= 1, got {r}")
    return SingularSeries(f, g, a, b, x).g_factor(r)


def _linear_corr(f, g, a, c, b, d, t, u, x, direct, product_range, spec_extra=None) -> CorrelationReport:
    N = a * d - b * c
    if N == 0:
        raise DegenerateForms(f"ad - bc = 0 for (a,c,b,d) = ({a},{c},{b},{d})")
    require_within_limit(x)
    y = product_range or x
    P, Q = PolynomialZ.linear(a, c), PolynomialZ.linear(b, d)
    f0, g0 = _untwist(f, t), _untwist(g, u)
    ss = SingularSeries(f0, g0, a, b, y)
    series, terms = ss.series(N)
    facs = local_products([f0, g0], [P, Q], y)
    prod = _product(facs)
    gap = abs(series - prod)
    if not gap <= FORM_TOL * max(1.0, abs(prod)):
        raise PretlabError(f"series form {series} and product form {prod} differ by {gap:.3g}")
    arch = _archimedean([(P, t), (Q, u)], x) if b >= 1 else 1 + 0j
    dv = corr_direct(f, g, P, Q, x) if direct else None
    spec = {"f": f.name, "g": g.name, "a": a, "c": c, "b": b, "d": d, "t": t, "u": u, "x": x}
    spec.update(spec_extra or {})
    budget = _budget([f0, g0], [P, Q], x) if b >= 1 else float("nan")
    return CorrelationReport(arch * series, arch, dv, x, facs, terms, budget, gap, spec)


def predict_linear_corr(
    f: MultFunc,
    g: MultFunc,
    a: int,
    c: int,
    b: int,
    d: int,
    t: float = 0.0,
    u: float = 0.0,
    x: int = 10**6,
    direct: bool = True,
    product_range: int | None = None,
) -> CorrelationReport:
    """Mean of f(an + c)·g(bn + d) over n <= x via Σ_{r | ad-bc} G(f₀; g₀; r; x)/r,
    f₀ = f·n^{-it}, g₀ = g·n^{-iu}, times the archimedean factor.

    The equivalent product Π_p M_p(f₀(an+c), g₀(bn+d)) is computed alongside
    and the two must agree to FORM_TOL.
    """
    if a < 1 or b < 1:
        raise InvalidArgument("leading coefficients a, b must be >= 1")
    if math.gcd(a, c) != 1 or math.gcd(b, d) != 1:
        raise InvalidArgument("need gcd(a, c) = gcd(b, d) = 1")
    return _linear_corr(f, g, a, c, b, d, t, u, x, direct, product_range)


def autocorr_G0(f: MultFunc, r: int, x: int | None = None) -> complex:
    """G₀(r) = G(f; conj f; r) with a = b = 1, product over p <= x
    (default: f.trivial_above when known, else 10^6)."""
    if x is None:
        x = f.trivial_above if f.trivial_above is not None else 10**6
    return SingularSeries(f, conj(f), 1, 1, max(int(x), 2)).G(r)


def shifted_selfcorr(f: MultFunc, m: int, x: int, direct: bool = True, product_range: int | None = None) -> CorrelationReport:
    """(1/x) Σ f(n)·conj f(n+m) against Σ_{r | m} G₀(r)/r."""
    if m < 1:
        raise InvalidArgument(f"shift must be >= 1, got {m}")
    return _linear_corr(f, conj(f), 1, 0, 1, m, 0.0, 0.0, x, direct, product_range, {"m": m})


# character twists


def char_autocorr(chi: DirichletCharacter, b: int) -> complex:
    """Σ_{a mod q} χ(a)·conj χ(a+b) by the closed form, checked against the
    literal sum when q <= LITERAL_CHECK_MAX_Q."""
    if not chi.is_primitive:
        raise InvalidArgument(f"closed form needs a primitive character (conductor {chi.conductor} != {chi.modulus})")
    q = chi.modulus
    closed = autocorr_closed_form(q, b)
    if q <= LITERAL_CHECK_MAX_Q:
        lit = autocorr_literal(chi, b)
        if abs(lit - closed) > 1e-8 * q:
            raise PretlabError(f"closed form {closed} disagrees with literal sum {lit} for q={q}, b={b}")
    return complex(closed)


def _check_unimodular_off(f: MultFunc, q: int, p_max: int = 1000, k_max: int = 4) -> None:
    if f.unimodular:
        return
    pr = get_sieve(p_max).primes
    pr = pr[(pr <= p_max) & (q % pr != 0)]
    P = np.repeat(pr, k_max)
    K = np.tile(np.arange(1, k_max + 1), pr.size)
    v = np.abs(f.values(P, K))
    if v.size and np.abs(v - 1).max() > 1e-9:
        raise InvalidArgument(f"{f.name} must be unimodular at primes not dividing {q}")


def charshift_local_printed(F: MultFunc, p: int, n: int) -> complex:
    """1 - 2/p^{n+1} + (1-1/p) Σ_{j>n} (F(p^n)conj F(p^j) + conj F(p^n)F(p^j))/p^j,
    the shift-d local factor at p ∤ q with p^n ∥ d (valid for unimodular F)."""
    depth = math.ceil(math.log(1e17) / math.log(p)) + 1
    fv = F.local_values(p, n + depth)
    j = np.arange(n + 1, n + depth + 1)
    tail = np.sum((fv[n] * np.conj(fv[j]) + np.conj(fv[n]) * fv[j]) * float(p) ** -j.astype(np.float64))
    return complex(1 - 2 * float(p) ** -(n + 1) + (1 - 1 / p) * tail)


def charshift_prime_power_printed(f: MultFunc, p: int, l: int, d: int) -> complex:
    """The three-case factor at p^l ∥ q as printed; kept as a diagnostic
    (see :func:`charshift_prime_power`)."""
    n = _vp(d, p)
    if n < l - 1:
        return 0j
    if n == l - 1:
        return complex(1 - 1 / p)
    k = n - l
    fv = f.local_values(p, k)
    s = np.sum(np.abs(fv) ** 2 * float(p) ** -np.arange(k + 1, dtype=np.float64))
    return complex((1 - 1 / p) * s - abs(fv[k]) ** 2 * float(p) ** -k)


def charshift_prime_power(f: MultFunc, p: int, l: int, d: int) -> complex:
    """Local factor at p^l ∥ q for the shift-d correlation of f(n) = χ(n)·(rest).

    Writing n = p^i m with p ∤ m, only i <= v_p(d) survives the sum over the
    primitive p-component of χ, and the residue sum over m is the character
    autocorrelation at shift d/p^i. With c(j) = 0 (j <= l-2), -p^{l-1}
    (j = l-1), φ(p^l) (j >= l):
        p^{-l} Σ_{i <= v_p(d)} |f(p^i)|² p^{-i} c(v_p(d) - i).
    """
    n = _vp(d, p)
    fv = f.local_values(p, n)
    total = 0.0
    for i in range(n + 1):
        j = n - i
        if j <= l - 2:
            c = 0
        elif j == l - 1:
            c = -(p ** (l - 1))
        else:
            c = p ** (l - 1) * (p - 1)
        total += abs(fv[i]) ** 2 * float(p) ** -i * c
    return complex(total * float(p) ** -l)


def _vp(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _self_direct(f: MultFunc, d: int, x: int) -> complex:
    D = abs(d)
    tab = f.upto(x + D)
    n = np.arange(1, x + 1)
    m = n + d
    ok = m >= 1
    return complex(np.sum(tab[n[ok]] * np.conj(tab[m[ok]]))) / x


def predict_char_shift(
    f: MultFunc,
    chi: DirichletCharacter,
    t: float,
    d: int,
    x: int,
    direct: bool = True,
    product_range: int | None = None,
) -> CorrelationReport:
    """Mean of f(n)·conj f(n+d) for f pretending to be χ(n)n^{it} (χ primitive mod q):
    Π_{p ∤ q} M_p(F, conj F; d) · Π_{p^l ∥ q} (factor at p^l), F = twist(f, χ, t).

    The result is exactly 0 unless q | d·Π_{p|q} p.
    """
    if d == 0:
        raise InvalidArgument("d must be nonzero; use shifted_selfcorr for the plain mean")
    if not chi.is_primitive:
        raise InvalidArgument("character must be primitive")
    q = chi.modulus
    _check_unimodular_off(f, q)
    require_within_limit(x)
    y = product_range or x
    F = twist(f, chi, t)
    primes = np.asarray(_primes_upto(y), dtype=np.int64)
    facs: dict[int, complex] = {}
    for p, l in factor_any(q) if q > 1 else []:
        facs[p] = charshift_prime_power(f, p, l, d)
    off = primes[q % primes != 0]
    engine = (off <= ENGINE_PRIME_CUTOFF) | (d % off == 0)
    mF = local_means(F, off[~engine])
    for p, v in zip(off[~engine].tolist(), (2 * mF.real - 1).tolist()):
        facs[p] = complex(v)
    X, Xd = PolynomialZ.linear(1, 0), PolynomialZ.linear(1, d)
    for p in off[engine].tolist():
        facs[p] = _engine([F, conj(F)], [X, Xd], p)
    ordered = sorted(facs.items())
    pred = _product(ordered)
    dv = _self_direct(f, d, x) if direct else None
    spec = {"f": f.name, "chi": [q, chi.index], "t": t, "d": d, "x": x}
    return CorrelationReport(pred, 1 + 0j, dv, x, ordered, None, float("nan"), None, spec)


def keytotao_value(f: MultFunc, chi: DirichletCharacter, t: float, y: int | None = None) -> complex:
    """(μ(q)/q) Π_{p ∤ q, p <= y} (2 Re M_p(F) - 1) with F = twist(f, χ, t)."""
    if not chi.is_primitive:
        raise InvalidArgument("character must be primitive")
    q = chi.modulus
    F = twist(f, chi, t)
    if y is None:
        y = f.trivial_above if (f.trivial_above is not None and q == 1 and t == 0) else 10**6
    primes = np.asarray(_primes_upto(max(int(y), 2)), dtype=np.int64)
    primes = primes[q % primes != 0]
    m = local_means(F, primes)
    val = 1.0
    for v in (2 * m.real - 1).tolist():
        val *= v
    mu = mobius(factor_any(q)) if q > 1 else 1
    return complex(mu / q * val)


# m-point linear correlations


def correlate_multi(terms: Sequence[tuple[MultFunc, float, int, int]], x: int, direct: bool = True, product_range: int | None = None) -> CorrelationReport:
    """Mean of Π_j f_j(a_j n + b_j) over n <= x.

    Each term is (f_j, t_j, a_j, b_j); the prediction is the m-way archimedean
    factor times Π_p of the joint local factor of f_j·n^{-it_j}.
    """
    if not terms:
        raise InvalidArgument("need at least one term")
    funcs, polys, pairs = [], [], []
    for f, t, a, b in terms:
        if a < 1:
            raise InvalidArgument(f"a_j must be >= 1, got {a}")
        P = PolynomialZ.linear(a, b)
        funcs.append(_untwist(f, t))
        polys.append(P)
        pairs.append((P, t))
    require_within_limit(x)
    facs = local_products(funcs, polys, product_range or x)
    arch = _archimedean(pairs, x)
    dv = _multi_direct([f for f, *_ in terms], polys, x) if direct else None
    spec = {"terms": [[f.name, t, a, b] for f, t, a, b in terms], "x": x}
    return CorrelationReport(arch * _product(facs), arch, dv, x, facs, None, _budget(funcs, polys, x), None, spec)
