"""Application pipelines: bounded partial sums of ±1 multiplicative functions,
Kátai's energy, and binary additive problems for multiplicative sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import factor_any, require_within_limit
from .characters import DirichletCharacter
from .correlation import SingularSeries, _linear_corr, keytotao_value
from .errors import InvalidArgument
from .meanvalue import _primes_upto, local_means
from .multfun import MultFunc, char_func, distance, nit, product

PERIOD_CHECK_CAP = 10**7
PRIME_SAMPLE_CAP = 10**6
VANISHING_MEAN = 0.01


def _local_real_values(f: MultFunc, p: np.ndarray, k: np.ndarray) -> np.ndarray:
    v = f.values(p, k)
    if np.any(np.abs(np.imag(v)) > 1e-12) or np.any(np.abs(np.abs(np.real(v)) - 1) > 1e-12):
        raise InvalidArgument(f"{f.name} must take values in {{-1, 1}}")
    return np.rint(np.real(v)).astype(np.int64)


# bounded partial sums


@dataclass
class EctVerdict:
    satisfies_characterization: bool
    period_m: int | None
    threshold_M: int
    witnesses: list[str] = field(default_factory=list)
    inconclusive: bool = False
    period_sum: int | None = None


def ect_characterize(f: MultFunc, M: int = 1000) -> EctVerdict:
    """Test the periodic zero-sum characterization of a ±1 multiplicative f.

    Checks f(2^k) = -1 up to M² and f(p^k) = f(p^{k-1}) for prime powers in
    [M, M²] (primes capped at PRIME_SAMPLE_CAP). On success the period is
    m = 2·Π_{odd p < M} p^{e_p}, e_p the exponent where f(p^k) settles, and
    periodicity and the zero period sum are verified on integers.
    """
    if M < 2:
        raise InvalidArgument("M must be >= 2")
    witnesses: list[str] = []
    top = M * M
    k2 = np.arange(1, top.bit_length() + 1, dtype=np.int64)
    v2 = _local_real_values(f, np.full(k2.size, 2, dtype=np.int64), k2)
    for k, v in zip(k2.tolist(), v2.tolist()):
        if v != -1:
            witnesses.append(f"f(2^{k}) = {v}, expected -1")
            break
    primes = np.asarray(_primes_upto(min(top, PRIME_SAMPLE_CAP)), dtype=np.int64)
    big = primes[primes >= M]
    if big.size:
        vb = _local_real_values(f, big, np.ones_like(big))
        bad = big[vb != 1]
        if bad.size:
            witnesses.append(f"f({int(bad[0])}) = -1 for a prime >= M")
    exps: dict[int, int] = {}
    for p in primes[(primes < M) & (primes > 2)].tolist():
        K = 1
        while p ** (K + 1) <= top:
            K += 1
        vals = _local_real_values(f, np.full(K, p, dtype=np.int64), np.arange(1, K + 1, dtype=np.int64))
        vals = np.concatenate([[1], vals])
        for k in range(1, K + 1):
            if p**k >= M and vals[k] != vals[k - 1]:
                witnesses.append(f"f({p}^{k}) != f({p}^{k - 1}) with {p}^{k} >= M")
                break
        e = K
        while e > 0 and vals[e - 1] == vals[K]:
            e -= 1
        if e:
            exps[p] = e
    if witnesses:
        return EctVerdict(False, None, M, witnesses)
    m = 2
    for p, e in exps.items():
        m *= p**e
    if 11 * m > PERIOD_CHECK_CAP:
        return EctVerdict(False, m, M, [f"period {m} too large to verify"], inconclusive=True)
    tab = np.rint(np.real(f.upto(11 * m))).astype(np.int64)
    n = np.arange(1, 10 * m + 1)
    mism = np.nonzero(tab[n + m] != tab[n])[0]
    if mism.size:
        i = int(n[mism[0]])
        return EctVerdict(False, m, M, [f"f({i + m}) != f({i})"], inconclusive=False)
    s = int(tab[1 : m + 1].sum())
    if s != 0:
        return EctVerdict(False, m, M, [f"period sum is {s}"], period_sum=s)
    return EctVerdict(True, m, M, [], period_sum=0)


def discrepancy(f: MultFunc, x: int) -> float:
    """max_{y <= x} |Σ_{n <= y} f(n)|."""
    require_within_limit(x)
    tab = f.upto(x)
    if x < 1:
        return 0.0
    s = np.cumsum(tab[1:])
    return float(np.abs(s).max())


def discrepancy_profile(f: MultFunc, checkpoints) -> list[float]:
    """Running maxima of |partial sums| at increasing checkpoints."""
    checkpoints = sorted(int(c) for c in checkpoints)
    s = np.abs(np.cumsum(f.upto(checkpoints[-1])[1:]))
    run = np.maximum.accumulate(s)
    return [float(run[c - 1]) for c in checkpoints]


# singular-series identities and the second moment


def _check_pm1_two_adic(f: MultFunc) -> list[str]:
    problems = []
    if not f.real:
        problems.append(f"{f.name} must be real-valued")
    ks = np.arange(1, 41, dtype=np.int64)
    v = f.values(np.full(ks.size, 2, dtype=np.int64), ks)
    bad = np.nonzero(np.abs(v + 1) > 1e-12)[0]
    if bad.size:
        problems.append(f"f(2^{int(ks[bad[0]])}) != -1")
    return problems


def _series_range(f: MultFunc, y: int | None, a_max: int) -> int:
    """Prime range for G: must reach every prime factor of the a we evaluate."""
    if y is not None:
        return max(y, a_max)
    return max(f.trivial_above or 10**4, a_max, 3)


class _EulerSums:
    """Σ_a G(a)/a^s (optionally over odd a) as Π_p Σ_k factor_p(k)/p^{ks},
    with a certified bound on the dropped k-tail (|factor| <= 4(1 + 2/(p-1)))."""

    def __init__(self, ss: SingularSeries):
        self.ss = ss

    def local(self, p: int, s: int) -> tuple[complex, float]:
        K = max(2, math.ceil(math.log(1e18) / (s * math.log(p))))
        total = sum(self.ss.factor(p, k) * float(p) ** (-k * s) for k in range(K + 1))
        bound = 4 * (1 + 2 / (p - 1)) * float(p) ** (-(K + 1) * s) / (1 - float(p) ** -s)
        return total, bound

    def total(self, s: int, odd_only: bool = False) -> tuple[complex, float]:
        val, err = 1 + 0j, 0.0
        for p in self.ss.primes.tolist():
            if odd_only and p == 2:
                v, e = self.ss.factor(2, 0), 0.0
            else:
                v, e = self.local(p, s)
            err = err * abs(v) + e * (abs(val) + err)
            val *= v
        return val, err


@dataclass
class GPropertiesReport:
    G: dict[int, float]
    checks: dict[str, bool]
    sum_over_a: float
    sum_over_a_sq: float
    tail_bound: float
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems and all(self.checks.values())


def g_properties_check(f: MultFunc, a_max: int = 100, tol: float = 1e-8, y: int | None = None) -> GPropertiesReport:
    """Numerically verify the structural identities of G = G₀ for a real f with f(2^k) = -1:
    G(4a) = 0, G(2a) = -4G(a) for odd a, Σ G(a)/a = 1, Σ G(a)/a² = 0, and
    G(a) <= 0 for odd a when f(3) = 1. Products run over p <= y
    (default f.trivial_above, else 10^4; never below 4·a_max)."""
    problems = _check_pm1_two_adic(f)
    if problems:
        return GPropertiesReport({}, {}, float("nan"), float("nan"), float("nan"), problems)
    ss = SingularSeries(f, f, 1, 1, _series_range(f, y, 4 * a_max))
    G = {a: ss.G(a).real for a in range(1, 4 * a_max + 1)}
    scale = max(1.0, max(abs(v) for v in G.values()))
    checks = {
        "G(4a)=0": all(abs(G[4 * a]) <= tol * scale for a in range(1, a_max + 1)),
        "G(2a)=-4G(a) for odd a": all(abs(G[2 * a] + 4 * G[a]) <= tol * scale for a in range(1, a_max + 1, 2)),
    }
    es = _EulerSums(ss)
    s1, e1 = es.total(1)
    s2, e2 = es.total(2)
    checks["sum G(a)/a = 1"] = abs(s1 - 1) <= tol + e1
    checks["sum G(a)/a^2 = 0"] = abs(s2) <= tol + e2
    if abs(f.rule(3, 1) - 1) < 1e-12:
        checks["G(a)<=0 for odd a"] = all(G[a] <= tol for a in range(1, a_max + 1, 2))
    return GPropertiesReport(G, checks, s1.real, s2.real, max(e1, e2))


def _nearest_int_distance(v: float) -> float:
    return abs(v - round(v))


def second_moment_prediction(f: MultFunc, H: int, y: int | None = None) -> float:
    """-2 Σ_{odd a} G(a)·‖H/(2a)‖, summed exactly: for odd a > H the weight is
    H/(2a), so that part equals -H(Σ_{odd a} G(a)/a - Σ_{odd a <= H} G(a)/a)
    with the full odd series taken from its Euler product."""
    ss = SingularSeries(f, f, 1, 1, _series_range(f, y, H))
    head = 0.0
    partial = 0.0
    for a in range(1, H + 1, 2):
        g = ss.G(a).real
        head += g * _nearest_int_distance(H / (2 * a))
        partial += g / a
    odd_total, _ = _EulerSums(ss).total(1, odd_only=True)
    return -2 * head - H * (odd_total.real - partial)


def second_moment_empirical(f: MultFunc, H: int, x: int) -> float:
    """(1/x) Σ_{n <= x} (Σ_{k=n+1}^{n+H} f(k))²."""
    require_within_limit(x + H)
    tab = np.real(f.upto(x + H))
    c = np.concatenate([[0.0], np.cumsum(tab[1:])])
    n = np.arange(1, x + 1)
    w = c[n + H] - c[n]
    return float(np.sum(w * w)) / x


def second_moment(f: MultFunc, H: int, x: int, y: int | None = None) -> tuple[float, float]:
    """(empirical, predicted) second moment of window sums of length H."""
    if H < 1:
        raise InvalidArgument("H must be >= 1")
    problems = _check_pm1_two_adic(f)
    if problems:
        raise InvalidArgument("; ".join(problems))
    return second_moment_empirical(f, H, x), second_moment_prediction(f, H, y)


# Kátai


@dataclass
class KataiReport:
    energy_E: complex
    coefficient_pred: float
    coefficient_emp: float
    x: int
    vanishing_branch: bool = False


def katai_energy(f: MultFunc, chi: DirichletCharacter, t: float, y: int | None = None) -> complex:
    """E(f) = (μ(q)/q) Π_{p ∤ q} (2 Re M_p(F) - 1), F = twist(f, χ, t)."""
    return keytotao_value(f, chi, t, y)


def katai_stat(f: MultFunc, x: int) -> float:
    """(1/log x) Σ_{n <= x} |f(n+1) - f(n)|²/n."""
    require_within_limit(x)
    tab = np.append(f.upto(x), f(x + 1))
    d = np.abs(tab[2:] - tab[1:-1]) ** 2
    return float(np.sum(d / np.arange(1, x + 1))) / math.log(x)


def katai_report(f: MultFunc, chi: DirichletCharacter, t: float, x: int) -> KataiReport:
    """Compare the empirical statistic with 2(1 - Re E(f)); functions whose
    mean modulus falls below VANISHING_MEAN take the |f| -> 0 branch and skip E."""
    tab = f.upto(min(x, 10**6))
    if float(np.mean(np.abs(tab[1:]))) < VANISHING_MEAN:
        return KataiReport(0j, float("nan"), katai_stat(f, x), x, vanishing_branch=True)
    E = katai_energy(f, chi, t)
    return KataiReport(E, 2 * (1 - E.real), katai_stat(f, x), x)


@dataclass
class ComplexcorReport:
    passed: bool
    odd_conductor: bool
    failures: list[int]
    distance: float


def complexcor_check(f: MultFunc, chi: DirichletCharacter, t: float, K: int = 20, x: int = 10**6) -> ComplexcorReport:
    """Necessary conditions for bounded sums of a unimodular f pretending to be
    χ(n)n^{it}: odd conductor and f(2^k) = -χ(2)^k 2^{-ikt} for k <= K."""
    if not chi.is_primitive:
        raise InvalidArgument("character must be primitive")
    odd = chi.modulus % 2 == 1
    c2 = chi(2)
    failures = []
    for k in range(1, K + 1):
        want = -(c2**k) * complex(np.exp(-1j * k * t * math.log(2)))
        if abs(f.rule(2, k) - want) > 1e-12:
            failures.append(k)
    model = product(char_func(chi), nit(t)) if t else char_func(chi)
    d = distance(f, model, 1, x).value
    return ComplexcorReport(odd and not failures, odd, failures, d)


# densities and binary additive problems


def _check_indicator(A: MultFunc) -> None:
    pr = np.asarray(_primes_upto(200), dtype=np.int64)
    P = np.repeat(pr, 6)
    K = np.tile(np.arange(1, 7), pr.size)
    v = A.values(P, K)
    if np.any(np.abs(v * (v - 1)) > 1e-12):
        raise InvalidArgument(f"{A.name} must take values in {{0, 1}}")


def _relative_local(A: MultFunc, p: int, j: int) -> float:
    """(1 - 1/p) Σ_i 1_A(p^{i+j})/p^i: the p-part of the mean of k -> 1_A(k p^j)."""
    K = max(2, math.ceil(math.log(1e17) / math.log(p)))
    vals = A.local_values(p, j + K + 1).real
    w = (1 - 1 / p) * float(p) ** -np.arange(K + 1, dtype=np.float64)
    return float(np.sum(w * vals[j : j + K + 1]) + vals[j + K + 1] * float(p) ** -(K + 1))


def density_product(A: MultFunc, y: int = 10**6) -> float:
    """ρ_A = Π_{p <= y} M_p(1_A)."""
    val = 1.0
    for v in local_means(A, np.asarray(_primes_upto(y), dtype=np.int64)).real.tolist():
        val *= v
    return val


@dataclass
class DensityReport:
    d: int
    empirical: float
    prediction: float
    positive: bool


def density(A: MultFunc, d: int, x: int, y: int = 10**6) -> DensityReport:
    """ρ_A(d) = lim (d/x) Σ_{k <= x/d} 1_A(kd), empirically and as an Euler
    product with the factors at p | d shifted by v_p(d)."""
    if d < 1:
        raise InvalidArgument("d must be >= 1")
    _check_indicator(A)
    require_within_limit(x)
    K = x // d
    tab = A.upto(x).real
    emp = float(np.sum(tab[d * np.arange(1, K + 1)])) / K if K else float("nan")
    rho = density_product(A, y)
    pred = rho
    for p, j in factor_any(d) if d > 1 else []:
        base = _relative_local(A, p, 0)
        shifted = _relative_local(A, p, j)
        if base == 0:
            pred = 0.0
            break
        pred *= shifted / base
    return DensityReport(d, emp, pred, rho > 0)


def brudern_count(A: MultFunc, B: MultFunc, n: int) -> int:
    """#{(a, b) in A x B : a + b = n} with a, b >= 1."""
    require_within_limit(n)
    ta = np.rint(A.upto(n).real).astype(np.int64)
    tb = np.rint(B.upto(n).real).astype(np.int64)
    m = np.arange(1, n)
    return int(np.sum(ta[m] * tb[n - m]))


@dataclass
class BrudernReport:
    n: int
    r_direct: int
    r_pred_G: float
    r_pred_sigma: float
    rho_A: float
    rho_B: float
    a_table: dict[int, list[float]] = field(default_factory=dict)
    b_table: dict[int, list[float]] = field(default_factory=dict)
    sigma_reading: str = "printed"
    degenerate: bool = False


def _sigma_coefficients(A: MultFunc, p: int, m: int, rho: float, reading: str) -> list[float]:
    """a(p^k) for k = 1..m+1 from ρ_A(p^k)/p^k - ρ_A(p^{k-1})/p^{k-1}.

    ``printed`` uses ρ_A(d) as defined (density along multiples of d);
    ``relative`` divides it by ρ_A.
    """
    base = _relative_local(A, p, 0)
    rho_pk = [rho * _relative_local(A, p, k) / base for k in range(m + 2)]
    if reading == "relative":
        rho_pk = [r / rho for r in rho_pk]
    elif reading != "printed":
        raise InvalidArgument(f"unknown reading {reading!r}")
    return [rho_pk[k] / p**k - rho_pk[k - 1] / p ** (k - 1) for k in range(1, m + 2)]


def sigma_printed(A: MultFunc, B: MultFunc, n: int, reading: str = "printed", y: int = 10**6):
    """σ(n) = Π_{p^m ∥ n} (1 + Σ_{k<=m} p^{k-1}a(p^k)b(p^k)/(p-1) - p^m a(p^{m+1})b(p^{m+1})/(p-1)²)."""
    rA, rB = density_product(A, y), density_product(B, y)
    sigma = 1.0
    at, bt = {}, {}
    for p, m in factor_any(n) if n > 1 else []:
        a = _sigma_coefficients(A, p, m, rA, reading)
        b = _sigma_coefficients(B, p, m, rB, reading)
        at[p], bt[p] = a, b
        s = 1 + sum(p ** (k - 1) * a[k - 1] * b[k - 1] / (p - 1) for k in range(1, m + 1))
        s -= p**m * a[m] * b[m] / (p - 1) ** 2
        sigma *= s
    return sigma, rA, rB, at, bt


def brudern_predict(A: MultFunc, B: MultFunc, n: int, reading: str = "printed", y: int = 10**6) -> BrudernReport:
    """r(n) three ways: exact count, n·Σ_{d | n} G(1_A; 1_B; d)/d for the forms
    (m, n - m), and the σ(n) product."""
    if n < 2:
        raise InvalidArgument("n must be >= 2")
    _check_indicator(A)
    _check_indicator(B)
    r = brudern_count(A, B, n)
    rA, rB = density_product(A, y), density_product(B, y)
    if rA <= 0 or rB <= 0:
        return BrudernReport(n, r, 0.0, 0.0, rA, rB, sigma_reading=reading, degenerate=True)
    sigma, rA, rB, at, bt = sigma_printed(A, B, n, reading, y)
    rep = _linear_corr(A, B, 1, 0, -1, n, 0.0, 0.0, max(n, 2), False, y)
    pred_g = n * rep.prediction.real
    return BrudernReport(n, r, pred_g, rA * rB * sigma * n, rA, rB, at, bt, reading)
