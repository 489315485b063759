"""Local factors, truncated Euler products and direct mean values of f(P(n)).

Series in k are closed off with the exact telescoped tail of an eventually
constant f: after K terms the remainder Σ_{k>K} f(p^k)(d_k - d_{k+1}) is
replaced by f(p^{K+1})·d_{K+1}, which is exact when f is constant on p^k,
k > K, and otherwise off by at most 2·d_{K+2}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .arith import get_sieve, require_within_limit
from .errors import InvalidArgument, OutOfRange
from .multfun import MultFunc, distance_sq, one, with_prime_values
from .oracles import additive_on_poly, func_on_poly
from .polyarith import PolynomialZ, _omega_pp, as_poly, large_prime_powers

TAIL_TOL = 1e-15
MAX_TERMS = 400


@dataclass(frozen=True)
class LocalFactorReport:
    p: int
    value: complex
    truncation_K: int
    tail_bound: float


@dataclass
class EulerProduct:
    value: complex
    tail_bound: float
    rounding_bound: float
    n_factors: int


@dataclass
class MeanValueReport:
    prediction: complex
    direct: complex | None
    x: int
    error_budget: float
    factors: list[LocalFactorReport] = field(default_factory=list)
    product_range: int = 0


def local_mean(f: MultFunc, p: int) -> LocalFactorReport:
    """M_p(f) = (1 - 1/p) Σ_k f(p^k)/p^k."""
    p = int(p)
    K = 1
    while 2.0 * p ** -(K + 1) > TAIL_TOL:
        K += 1
    fv = f.local_values(p, K + 1)
    w = (1 - 1 / p) * np.power(float(p), -np.arange(K + 1))
    value = complex(np.sum(w * fv[: K + 1]) + fv[K + 1] * float(p) ** -(K + 1))
    return LocalFactorReport(p, value, K, 2.0 * p ** -(K + 1))


def _truncation_depths(primes: np.ndarray) -> np.ndarray:
    """Smallest K >= 1 per prime with 2·p^{-(K+1)} <= TAIL_TOL."""
    lp = np.log(primes.astype(np.float64))
    K = np.ceil(math.log(2 / TAIL_TOL) / lp).astype(np.int64) - 1
    return np.maximum(K, 1)


def local_means(f: MultFunc, primes: np.ndarray) -> np.ndarray:
    """Vectorized M_p(f) over an array of primes (same closure as :func:`local_mean`)."""
    primes = np.asarray(primes, dtype=np.int64)
    out = np.ones(primes.size, dtype=np.complex128)
    active = np.ones(primes.size, dtype=bool)
    if f.trivial_above is not None:
        active = primes <= f.trivial_above
    Ks = _truncation_depths(primes)
    for K in np.unique(Ks[active]).tolist():
        sel = np.nonzero(active & (Ks == K))[0]
        ps = primes[sel]
        ks = np.arange(1, K + 2, dtype=np.int64)
        P2 = np.repeat(ps[:, None], K + 1, axis=1)
        K2 = np.broadcast_to(ks, P2.shape).copy()
        fv = f.values(P2, K2)
        pf = ps[:, None].astype(np.float64)
        powers = pf ** -K2.astype(np.float64)
        w = (1 - 1 / pf) * powers
        body = 1 - 1 / ps + np.sum(w[:, :K] * fv[:, :K], axis=1)
        out[sel] = body + fv[:, K] * powers[:, K]
    return out


def _bad_primes(P: PolynomialZ) -> int:
    """Integer whose prime divisors are where ω_P(p^k) may differ from ω_P(p)."""
    from .polyarith import resultant

    bad = abs(P.lead) * abs(P.content)
    if P.degree >= 2:
        bad *= abs(resultant(P, P.derivative()))
    return bad


def poly_local_means(f: MultFunc, P: PolynomialZ, primes: np.ndarray) -> tuple[np.ndarray, list[LocalFactorReport]]:
    """Vectorized M_p(f(P)). At primes not dividing lead·content·disc the
    root count is stable, ω_P(p^k) = ω_P(p), and M_p(f(P)) = 1 + ω_P(p)(M_p(f) - 1);
    the remaining primes go through :func:`local_mean_poly`.
    """
    from .polyarith import roots_mod_p

    P = as_poly(P)
    primes = np.asarray(primes, dtype=np.int64)
    bad = _bad_primes(P)
    out = np.empty(primes.size, dtype=np.complex128)
    special: list[LocalFactorReport] = []
    is_bad = np.array([bad % p == 0 for p in primes.tolist()], dtype=bool) if bad else np.ones(primes.size, bool)
    good = ~is_bad
    if np.any(good):
        gp = primes[good]
        if P.degree == 1:
            w = np.ones(gp.size)
        else:
            w = np.array([len(roots_mod_p(P, p)) for p in gp.tolist()], dtype=np.float64)
        mf = local_means(f, gp)
        out[good] = 1 + w * (mf - 1)
    for i in np.nonzero(is_bad)[0].tolist():
        r = local_mean_poly(f, P, int(primes[i]))
        out[i] = r.value
        special.append(r)
    return out, special


def _densities(P: PolynomialZ, p: int) -> list[Fraction]:
    """d_k = ω_P(p^k)/p^k for k = 0..K+2, with K chosen so d_{K+1} <= TAIL_TOL."""
    d = [Fraction(1)]
    k = 0
    while True:
        k += 1
        d.append(Fraction(_omega_pp(P, p, k), p**k))
        if (d[-1] <= TAIL_TOL and k >= 2) or k >= MAX_TERMS:
            break
    d.append(Fraction(_omega_pp(P, p, k + 1), p ** (k + 1)))
    return d


def local_mean_poly(f: MultFunc, P: PolynomialZ, p: int, exact: bool = False) -> LocalFactorReport:
    """M_p(f(P)) = Σ_k f(p^k)(ω_P(p^k)/p^k - ω_P(p^{k+1})/p^{k+1}).

    ``exact`` evaluates in rational arithmetic (real f values are converted
    exactly from binary floats) and returns the value as a Fraction.
    """
    P = as_poly(P)
    if P.degree < 1:
        raise InvalidArgument("P must be nonconstant")
    d = _densities(P, p)
    K = len(d) - 3
    fv = f.local_values(p, K + 1)
    tail = 2 * float(d[K + 2])
    if exact:
        if np.any(fv.imag != 0):
            raise InvalidArgument("exact evaluation needs real values")
        vals = [Fraction(float(v)) for v in fv.real]
        total = sum((vals[k] * (d[k] - d[k + 1]) for k in range(K + 1)), Fraction(0))
        total += vals[K + 1] * d[K + 1]
        return LocalFactorReport(p, total, K, tail)  # type: ignore[arg-type]
    w = np.array([float(d[k] - d[k + 1]) for k in range(K + 1)])
    value = complex(np.sum(w * fv[: K + 1]) + fv[K + 1] * float(d[K + 1]))
    return LocalFactorReport(p, value, K, tail)


def euler_product(factors: Iterable[LocalFactorReport]) -> EulerProduct:
    """Product in ascending prime order with a first-order error estimate."""
    facs = sorted(factors, key=lambda r: r.p)
    value = 1 + 0j
    tail = 0.0
    for r in facs:
        value *= r.value
        tail += r.tail_bound
    eps = np.finfo(float).eps
    return EulerProduct(value, tail, 4 * eps * len(facs) * max(abs(value), eps), len(facs))


def _primes_upto(y: int) -> list[int]:
    pr = get_sieve(max(y, 2)).primes
    return pr[: np.searchsorted(pr, y, side="right")].tolist()


def mean_factors(f: MultFunc, P: PolynomialZ | None, y: int) -> list[LocalFactorReport]:
    """Local factors for all p <= y (plain M_p(f) when P is None)."""
    primes = np.asarray(_primes_upto(y), dtype=np.int64)
    tails = 2.0 * primes.astype(np.float64) ** -(_truncation_depths(primes) + 1).astype(np.float64)
    Ks = _truncation_depths(primes)
    if P is None:
        vals = local_means(f, primes)
        return [LocalFactorReport(p, complex(v), int(k), float(t)) for p, v, k, t in zip(primes.tolist(), vals, Ks.tolist(), tails)]
    vals, special = poly_local_means(f, as_poly(P), primes)
    exact = {r.p: r for r in special}
    out = []
    for p, v, k, t in zip(primes.tolist(), vals, Ks.tolist(), tails):
        out.append(exact.get(p) or LocalFactorReport(p, complex(v), int(k), float(t) * 3))
    return out


def mean_direct(f: MultFunc, P: PolynomialZ, x: int) -> complex:
    """(1/x) Σ_{n <= x} f(P(n)) by exact factorization (f(0) = 0)."""
    vals = func_on_poly(f, as_poly(P), x)
    return complex(np.sum(vals)) / x


def frak_P(f: MultFunc, P: PolynomialZ, x: int) -> complex:
    """Decoupling constant Π_{p <= x} Σ_k f(p^k)(ω_P(p^k)/p^k - ω_P(p^{k+1})/p^{k+1})."""
    return euler_product(mean_factors(f, as_poly(P), x)).value


def error_budget(f: MultFunc, P: PolynomialZ, x: int, large=None) -> float:
    """The theorem's bound D_P(1, f; log x; x) + 1/log log x (constants dropped)."""
    from .multfun import distance_poly

    y = max(2.0, math.log(x))
    d = distance_poly(one(), f, y, x, P, large=large).value
    return d + 1 / math.log(math.log(x))


def predict_mean(f: MultFunc, P: PolynomialZ, x: int, product_range: int | None = None, direct: bool = True) -> MeanValueReport:
    P = as_poly(P)
    y = product_range or x
    facs = mean_factors(f, P, y)
    pred = euler_product(facs).value
    dv = mean_direct(f, P, x) if direct else None
    try:
        budget = error_budget(f, P, x)
    except OutOfRange:
        budget = float("nan")
    return MeanValueReport(pred, dv, x, budget, facs, y)


@dataclass
class DecouplingCheck:
    lhs: complex
    rhs: complex
    gap: float  # |lhs - rhs| / x
    frak: complex


def decoupling_check(f: MultFunc, P: PolynomialZ, x: int, g_values: np.ndarray) -> DecouplingCheck:
    """Compare Σ f(P(n))g(n) with 𝔓(f;P;x)·Σ g(n); ``g_values[n-1] = g(n)``."""
    P = as_poly(P)
    fv = func_on_poly(f, P, x)
    lhs = complex(np.sum(fv * g_values[:x]))
    frak = frak_P(f, P, x)
    rhs = frak * complex(np.sum(g_values[:x]))
    return DecouplingCheck(lhs, rhs, abs(lhs - rhs) / x, frak)


@dataclass
class VarianceReport:
    mu: complex
    sigma2: float
    empirical: float  # Σ_{n<=x} |h(P(n)) - μ|²
    ratio_sigma: float  # empirical / (x σ²)
    ratio_bound: float  # empirical / (x σ² + x (log log x)^3 / log x)


def tk_variance(h: Callable[[np.ndarray, np.ndarray], np.ndarray], P: PolynomialZ, x: int) -> VarianceReport:
    """Mean μ_{h,P}, variance proxy σ²_{h,P} and the empirical square deviation
    of the additive function h(P(n)), h truncated to prime powers < x.
    """
    P = as_poly(P)
    require_within_limit(x)

    def hx(p, k):
        p = np.asarray(p)
        k = np.asarray(k)
        small = p.astype(np.float64) ** k < x
        v = np.asarray(h(p, k), dtype=np.complex128)
        if np.any(np.abs(v[small]) > 2 + 1e-12):
            raise InvalidArgument("|h(p^k)| must be at most 2")
        return np.where(small, v, 0)

    mu = 0j
    s2 = 0.0
    for p in _primes_upto(x - 1):
        k = 1
        pk = p
        while pk < x:
            w = float(Fraction(_omega_pp(P, p, k), pk) - Fraction(_omega_pp(P, p, k + 1), pk * p))
            hv = complex(hx(np.array([p]), np.array([k]))[0])
            mu += hv * w
            s2 += abs(hv) ** 2 * w
            k += 1
            pk *= p
    hv = additive_on_poly(hx, P, x)
    emp = float(np.sum(np.abs(hv - mu) ** 2))
    ll = math.log(math.log(x))
    denom = x * s2 + x * ll**3 / math.log(x)
    return VarianceReport(mu, s2, emp, emp / (x * s2) if s2 > 0 else (0.0 if emp == 0 else math.inf), emp / denom if denom else 0.0)


# large-prime constructions


@dataclass
class AdversarialReport:
    x: int
    frak_M_size: int  # |{n <= x : some prime p > 2x divides P(n)}|
    assignments: dict  # prime -> assigned f(p)
    complement_sum: complex
    achieved: complex  # direct mean of the constructed f(P(n))
    phase: float
    f: MultFunc = field(repr=False, default=None)

    @property
    def guaranteed(self) -> float:
        return self.frak_M_size / self.x


def _large_prime_assignment(P: PolynomialZ, x: int, known: MultFunc):
    """Return (assignments, |𝔐|, complement sum, phase) for primes p > 2x."""
    large = large_prime_powers(P, x, threshold=2 * x + 1)
    owner: dict[int, int] = {}
    for (p, k), ns in large.hits.items():
        if k != 1 or len(ns) != 1:
            raise AssertionError(f"prime {p} > 2x hit more than once or squared")
        owner[int(p)] = ns[0]
    vals = func_on_poly(known, P, x).astype(np.complex128)
    in_m = np.zeros(x, dtype=bool)
    in_m[[n - 1 for n in owner.values()]] = True
    comp = complex(np.sum(vals[~in_m]))
    phase = cmath.phase(comp) if comp != 0 else 0.0
    rot = cmath.exp(1j * phase)
    assign = {}
    for p, n in sorted(owner.items()):
        cof = known(P(n) // p)
        if abs(cof) > 0:
            assign[p] = rot * cof.conjugate() / abs(cof)
        else:
            assign[p] = rot
    return assign, len(owner), comp, phase


def adversarial_mean(P: PolynomialZ, x: int, base: MultFunc) -> AdversarialReport:
    """Reassign f(p) for primes p > 2x dividing some P(n), n <= x, so that all
    these P(n) take the common value e^{iφ} aligned with the remaining sum.
    f agrees with ``base`` on p <= 2x and is 1 on every other prime.
    """
    P = as_poly(P)
    if x < 100:
        raise InvalidArgument("x must be at least 100")
    require_within_limit(x)

    def known_values(p, k):
        p = np.asarray(p)
        return np.where(p <= 2 * x, base.values(p, k), 1.0 + 0j)

    known = MultFunc(f"{base.name}|p<=2x", known_values, unimodular=base.unimodular, real=base.real)
    assign, m_size, comp, phase = _large_prime_assignment(P, x, known)
    primes = np.array(list(assign), dtype=np.int64)
    vals = np.array([assign[p] for p in assign], dtype=np.complex128)
    f = with_prime_values(known, primes, vals, name=f"adversary({base.name};{x})")
    achieved = mean_direct(f, P, x)
    return AdversarialReport(x, m_size, assign, comp, achieved, phase, f)


@dataclass
class DependenceLevel:
    k: int
    x: int
    frak_M_size: int
    mean: complex
    distance_sq: float


def dependence_demo(K: int) -> list[DependenceLevel]:
    """Iterated construction over x_k = 2^{2^k}, k = 1..K, for P = x^2 + 1.

    f is completely multiplicative and real; primes assigned at an earlier
    level keep their value, every other prime up to 2x_k gets -1, and the
    primes p > 2x_k dividing some n^2+1 (n <= x_k) get the large-prime
    assignment.
    """
    if K < 1:
        raise InvalidArgument("K must be >= 1")
    if 2 ** (2**K) > 10**5:
        raise OutOfRange(f"x_K = 2^(2^{K}) exceeds 10^5")
    P = PolynomialZ((1, 0, 1))
    fixed: dict[int, float] = {}
    levels = []
    for k in range(1, K + 1):
        xk = 2 ** (2**k)
        sieve = get_sieve(max(4 * xk, 4096))
        for p in sieve.primes[sieve.primes <= 2 * xk].tolist():
            fixed.setdefault(p, -1.0)
        pr = np.array(sorted(fixed), dtype=np.int64)
        cur = with_prime_values(one(), pr, np.array([fixed[p] for p in pr.tolist()]), completely=True)

        def known_values(p, kk, cur=cur, xk=xk):
            p = np.asarray(p)
            return np.where(p <= 2 * xk, cur.values(p, kk), 1.0 + 0j)

        known = MultFunc("known", known_values, real=True)
        if xk >= 4:
            assign, m_size, _, _ = _large_prime_assignment(P, xk, known)
        else:  # pragma: no cover
            assign, m_size = {}, 0
        for p, v in assign.items():
            if p in fixed:
                raise AssertionError(f"prime {p} assigned twice")
            fixed[p] = float(round(v.real))
        pr = np.array(sorted(fixed), dtype=np.int64)
        f = with_prime_values(one(), pr, np.array([fixed[p] for p in pr.tolist()]), completely=True, name=f"dependence(level {k})")
        mean = mean_direct(f, P, xk)
        # every prime up to x_k is fixed by now, so this is D(1, f; x_k)^2
        d2 = distance_sq(one(), f, 1, xk)
        levels.append(DependenceLevel(k, xk, m_size, mean, d2))
    return levels
