"""Integer polynomials: root counts mod prime powers, resultants, joint
densities, and bulk factorization of P(1), ..., P(x) by progression sieving.

Root counting works on p-adic residue classes ``n ≡ r (mod p^j)``. Writing
``P(r + p^j t) = Σ_i P_i(r) p^{ij} t^i`` with ``P_i = P^{(i)}/i!`` and
``c_i = v_p(P_i(r)) + i·j``, the class is decided as soon as either
``c_0 < min_{i>=1} c_i`` (valuation constant on the class) or ``c_1`` is
strictly the smallest of the ``c_i, i >= 1`` (then ``t -> P/p^{c_1}`` is an
isometry of Z_p and the valuation is distributed like that of a uniform
p-adic integer). Otherwise the class is split into its p children. This is
Hensel lifting for simple roots and level-by-level expansion for singular
ones.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from .arith import Factorization, get_sieve, require_within_limit, sieve_limit
from .errors import InsufficientBound, InvalidArgument, MalformedSpec, OutOfRange

INF = 10**9
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class PolynomialZ:
    """Integer polynomial with coefficients ``coeffs[i]`` of x^i (lowest first)."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = [int(v) for v in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0]
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def parse(cls, text: str) -> "PolynomialZ":
        return parse_polynomial(text)

    @classmethod
    def linear(cls, a: int, c: int) -> "PolynomialZ":
        """a·x + c."""
        return cls((c, a))

    @property
    def degree(self) -> int:
        if self.coeffs == (0,):
            return -1
        return len(self.coeffs) - 1

    @property
    def lead(self) -> int:
        return self.coeffs[-1]

    @property
    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = math.gcd(g, c)
        return g

    def __call__(self, n: int) -> int:
        out = 0
        for c in reversed(self.coeffs):
            out = out * n + c
        return out

    def derivative(self) -> "PolynomialZ":
        return PolynomialZ(tuple(i * c for i, c in enumerate(self.coeffs))[1:] or (0,))

    def taylor(self, r: int) -> list[int]:
        """Coefficients of P(r + t) in t, i.e. P^{(i)}(r)/i!."""
        c = list(self.coeffs)
        d = len(c)
        # repeated synthetic division by (x - r)
        out = []
        for _ in range(d):
            acc = 0
            nxt = [0] * (len(c) - 1)
            for i in range(len(c) - 1, -1, -1):
                acc = acc * r + c[i]
                if i:
                    nxt[i - 1] = acc
            out.append(acc)
            c = nxt
            if not c:
                break
        return out

    def max_abs_on(self, x: int) -> int:
        """Upper bound for |P(n)| on 1 <= n <= x."""
        return sum(abs(c) * x**i for i, c in enumerate(self.coeffs))

    def values(self, x: int) -> np.ndarray:
        """P(n) for n = 1..x as int64; fails if 64 bits could overflow."""
        if self.max_abs_on(x) > INT64_MAX:
            raise OutOfRange(f"values of {self} up to n={x} may exceed 64 bits")
        n = np.arange(1, x + 1, dtype=np.int64)
        out = np.zeros(x, dtype=np.int64)
        for c in reversed(self.coeffs):
            out = out * n + c
        return out

    def __str__(self) -> str:
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0 and len(self.coeffs) > 1:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if i and abs(c) == 1:
                s = ("-" if c < 0 else "+") + mono
            else:
                s = ("-" if c < 0 else "+") + str(abs(c)) + ("*" + mono if mono else "")
            terms.append(s)
        out = "".join(terms)
        return out[1:] if out.startswith("+") else out


_TERM = re.compile(r"([+-]?)(\d*)\*?(?:(x|n)(?:\^(\d+))?)?")


def parse_polynomial(text: str) -> PolynomialZ:
    """Parse literals such as ``"a*x^2+b*x+c"``, ``"x"``, ``"-3x+1"`` (whitespace ignored)."""
    s = re.sub(r"\s+", "", str(text))
    if not s:
        raise MalformedSpec("empty polynomial")
    coeffs: dict[int, int] = {}
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (not m.group(2) and not m.group(3)):
            raise MalformedSpec(f"cannot parse polynomial {text!r} at position {pos}")
        if pos and not m.group(1):
            raise MalformedSpec(f"missing sign between terms in {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        coef = int(m.group(2)) if m.group(2) else 1
        if m.group(3):
            power = int(m.group(4)) if m.group(4) else 1
        else:
            if m.group(4):
                raise MalformedSpec(f"bad term in {text!r}")
            power = 0
        coeffs[power] = coeffs.get(power, 0) + sign * coef
        pos = m.end()
    deg = max(coeffs)
    return PolynomialZ(tuple(coeffs.get(i, 0) for i in range(deg + 1)))


def as_poly(P) -> PolynomialZ:
    if isinstance(P, PolynomialZ):
        return P
    if isinstance(P, str):
        return parse_polynomial(P)
    raise InvalidArgument(f"expected a polynomial, got {P!r}")


def _nonconstant(*polys: PolynomialZ) -> None:
    for P in polys:
        if P.degree < 1:
            raise InvalidArgument(f"polynomial {P} must be nonconstant")


# resultant


def _bareiss_det(M: list[list[int]]) -> int:
    n = len(M)
    M = [row[:] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def resultant(P: PolynomialZ, Q: PolynomialZ) -> int:
    """Exact resultant via the Sylvester matrix (fraction-free elimination).

    For P = a·x + c and Q = b·x + d this is a·d - b·c.
    """
    P, Q = as_poly(P), as_poly(Q)
    _nonconstant(P, Q)
    m, n = P.degree, Q.degree
    p_hi = list(reversed(P.coeffs))
    q_hi = list(reversed(Q.coeffs))
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + p_hi + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + q_hi + [0] * (size - n - 1 - i))
    return _bareiss_det(rows)


# polynomials mod p (lists, lowest degree first)


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: list[int], p: int) -> list[int]:
    return _trim([c % p for c in a])


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pmod(out, p)


def _pdivmod(a, b, p):
    a = a[:]
    q = [0] * max(len(a) - len(b) + 1, 0)
    inv = pow(b[-1], -1, p)
    while len(a) >= len(b) and a:
        c = a[-1] * inv % p
        s = len(a) - len(b)
        q[s] = c
        for i, y in enumerate(b):
            a[s + i] = (a[s + i] - c * y) % p
        _trim(a)
    return _trim(q), a


def _pgcd(a, b, p):
    while b:
        _, r = _pdivmod(a, b, p)
        a, b = b, r
    if a:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def _ppowmod(base, e, mod, p):
    result = [1]
    base = _pdivmod(base, mod, p)[1]
    while e:
        if e & 1:
            result = _pdivmod(_pmul(result, base, p), mod, p)[1]
        base = _pdivmod(_pmul(base, base, p), mod, p)[1]
        e >>= 1
    return result


def _sqrt_mod(a: int, p: int) -> int | None:
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _split_roots(g: list[int], p: int, rng: random.Random) -> list[int]:
    """Roots of a monic squarefree product of distinct linear factors mod odd p."""
    if len(g) <= 1:
        return []
    if len(g) == 2:
        return [(-g[0]) % p]
    while True:
        a = rng.randrange(p)
        h = _ppowmod([a, 1], (p - 1) // 2, g, p) or [0]
        h = _pmod([h[0] - 1] + h[1:], p)
        d = _pgcd(g, h, p) if h else g
        if 1 < len(d) < len(g):
            return _split_roots(d, p, rng) + _split_roots(_pdivmod(g, d, p)[0], p, rng)


SMALL_PRIME_ENUM = 64


def roots_mod_p(P: PolynomialZ, p: int) -> list[int]:
    """Sorted distinct roots of P mod p. If P ≡ 0 mod p every residue is a root."""
    a = _pmod(list(P.coeffs), p)
    if not a:
        return list(range(p))
    if len(a) == 1:
        return []
    if p <= SMALL_PRIME_ENUM:
        return [r for r in range(p) if P(r) % p == 0]
    if len(a) == 2:
        return [(-a[0]) * pow(a[1], -1, p) % p]
    if len(a) == 3:
        c, b, A = a
        disc = (b * b - 4 * A * c) % p
        s = _sqrt_mod(disc, p)
        if s is None:
            return []
        inv = pow(2 * A, -1, p)
        return sorted({(-b + s) * inv % p, (-b - s) * inv % p})
    # Cantor-Zassenhaus: gcd with x^p - x, then equal-degree splitting
    inv = pow(a[-1], -1, p)
    mono = [c * inv % p for c in a]
    xp = _ppowmod([0, 1], p, mono, p)
    xp = xp + [0] * max(0, 2 - len(xp))
    xp[1] = (xp[1] - 1) % p
    g = _pgcd(mono, _trim(xp), p)
    return sorted(_split_roots(g, p, random.Random(p)))


def _vp(n: int, p: int) -> int:
    if n == 0:
        return INF
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _class_valuations(P: PolynomialZ, p: int, r: int, j: int) -> list[int]:
    return [(_vp(c, p) + i * j if c else INF) for i, c in enumerate(P.taylor(r))]


def _count_class(P: PolynomialZ, p: int, k: int, r: int, j: int) -> int:
    c = _class_valuations(P, p, r, j)
    rest = c[1:]
    m = min(rest) if rest else INF
    if c[0] >= k and m >= k:
        return p ** (k - j)
    if c[0] < min(m, k):
        return 0
    c1 = c[1] if len(c) > 1 else INF
    if c1 < k and all(c1 < ci for ci in c[2:]):
        return p ** (c1 - j)
    step = p**j
    return sum(_count_class(P, p, k, r + s * step, j + 1) for s in range(p))


@lru_cache(maxsize=200_000)
def _omega_pp(P: PolynomialZ, p: int, k: int) -> int:
    if k == 0:
        return 1
    v = _vp(P.content, p)
    if v >= k:
        return p**k
    if v:
        Q = PolynomialZ(tuple(c // p**v for c in P.coeffs))
        return p**v * _omega_pp(Q, p, k - v)
    return sum(_count_class(P, p, k, r, 1) for r in roots_mod_p(P, p))


def omega_prime_power(P: PolynomialZ, p: int, k: int) -> int:
    """#{r mod p^k : P(r) ≡ 0 mod p^k}."""
    P = as_poly(P)
    if k < 0:
        raise InvalidArgument("k must be >= 0")
    if p**k > INT64_MAX:
        raise OutOfRange(f"{p}^{k} exceeds 64 bits")
    if P.degree < 0:
        return p**k
    return _omega_pp(P, p, k)


def omega(P: PolynomialZ, m: Factorization) -> int:
    out = 1
    for p, e in m:
        out *= omega_prime_power(P, p, e)
    return out


def root_density(P: PolynomialZ, p: int, k: int) -> Fraction:
    """ω_P(p^k)/p^k as an exact fraction (no 64-bit cap)."""
    if P.degree < 0:
        return Fraction(1)
    return Fraction(_omega_pp(P, p, k), p**k)


# joint densities


def _poly_mod_array(P: PolynomialZ, n: np.ndarray, mod: int) -> np.ndarray:
    out = np.zeros_like(n)
    for c in reversed(P.coeffs):
        out = (out * n + c) % mod
    return out


MAX_ENUM_MODULUS = 10**7


def joint_omega(P: PolynomialZ, Q: PolynomialZ, p: int, k: int, l: int) -> Fraction:
    """Density of n with p^k ∥ P(n) and p^l ∥ Q(n), by enumeration mod p^{max(k,l)+1}."""
    P, Q = as_poly(P), as_poly(Q)
    M = max(k, l) + 1
    mod = p**M
    if mod > MAX_ENUM_MODULUS or mod * mod > INT64_MAX:
        raise OutOfRange(f"enumeration modulus {p}^{M} too large")
    n = np.arange(mod, dtype=np.int64)
    pv = _poly_mod_array(P, n, mod)
    qv = _poly_mod_array(Q, n, mod)
    ok = (pv % p**k == 0) & (pv % p ** (k + 1) != 0) & (qv % p**l == 0) & (qv % p ** (l + 1) != 0)
    return Fraction(int(ok.sum()), mod)


def joint_density_F(P: PolynomialZ, Q: PolynomialZ, d1: Factorization, d2: Factorization) -> Fraction:
    """Density of n with d1 | P(n) and d2 | Q(n) (multiplicative over primes)."""
    P, Q = as_poly(P), as_poly(Q)
    e1, e2 = dict(d1), dict(d2)
    out = Fraction(1)
    for p in sorted(set(e1) | set(e2)):
        a, b = e1.get(p, 0), e2.get(p, 0)
        mod = p ** max(a, b)
        if mod > MAX_ENUM_MODULUS or mod * mod > INT64_MAX:
            raise OutOfRange(f"enumeration modulus {mod} too large")
        n = np.arange(mod, dtype=np.int64)
        ok = (_poly_mod_array(P, n, mod) % p**a == 0) & (_poly_mod_array(Q, n, mod) % p**b == 0)
        out *= Fraction(int(ok.sum()), mod)
    return out


# p-adic expectations


@dataclass
class PadicResult:
    value: complex
    error: float


def padic_expectation(
    polys: Sequence[PolynomialZ],
    local: Sequence[Callable[[int], complex]],
    p: int,
    tol: float = 1e-15,
) -> PadicResult:
    """E over n in Z_p of Π_j local[j](v_p(P_j(n))).

    ``local[j](k)`` is the value f_j(p^k). The recursion over residue classes
    stops on classes where every valuation is constant, or where a single
    undetermined polynomial behaves linearly (closed-form geometric series).
    Classes of mass below ``tol`` are dropped and counted in ``error``.
    """
    polys = [as_poly(P) for P in polys]
    cache = [dict() for _ in polys]

    def fval(j, k):
        c = cache[j]
        if k not in c:
            c[k] = complex(local[j](k))
        return c[k]

    depth_max = max(1, math.ceil(-math.log(tol) / math.log(p)))
    series_len = depth_max + 2
    err = 0.0

    def geometric(j, base):
        s = 0j
        for i in range(series_len):
            s += (1 - 1 / p) * p ** (-i) * fval(j, base + i)
        return s

    def visit(r: int, j: int) -> complex:
        nonlocal err
        mass = float(p) ** (-j)
        prod = 1 + 0j
        open_idx = []
        for idx, P in enumerate(polys):
            c = _class_valuations(P, p, r, j)
            m = min(c[1:]) if len(c) > 1 else INF
            if c[0] < m:
                prod *= fval(idx, c[0])
            else:
                open_idx.append((idx, c))
        if not open_idx:
            return mass * prod
        if len(open_idx) == 1:
            idx, c = open_idx[0]
            c1 = c[1]
            if all(c1 < ci for ci in c[2:]):
                err += mass * (float(p) ** (-series_len))
                return mass * prod * geometric(idx, c1)
        if j >= depth_max:
            err += 2 * mass
            return 0j
        step = p**j
        return sum(visit(r + s * step, j + 1) for s in range(p))

    # level 0 -> 1: only classes that are roots of some polynomial need work
    roots: set[int] = set()
    full = False
    for P in polys:
        if P.content % p == 0:
            full = True
            break
        roots.update(roots_mod_p(P, p))
    if full:
        total = sum(visit(s, 1) for s in range(p))
    else:
        total = sum(visit(s, 1) for s in sorted(roots))
        total += (p - len(roots)) / p
    return PadicResult(complex(total), err + 1e-16 * p)


# large prime powers and bulk factorization


def _default_bound(P: PolynomialZ, x: int) -> int:
    return max(2 * x, math.isqrt(P.max_abs_on(x)) + 1)


OnPrime = Callable[[np.ndarray, np.ndarray, np.ndarray], None]


@dataclass
class PolySweep:
    """Result of sieving |P(1)|, ..., |P(x)|.

    ``cofactor[i]`` is the prime left after removing all primes <= bound (or 1);
    zero values are marked in ``zero``.
    """

    x: int
    bound: int
    values: np.ndarray
    cofactor: np.ndarray
    zero: np.ndarray


def sweep_poly_values(P: PolynomialZ, x: int, on_prime: OnPrime, bound: int | None = None) -> PolySweep:
    """Factor |P(n)| for n = 1..x, reporting every (p, n-indices, exponents)
    batch to ``on_prime``. Leftover cofactors are certified prime; they are
    reported last as one batch with exponent 1.
    """
    P = as_poly(P)
    _nonconstant(P)
    vals = P.values(x)
    rem = np.abs(vals)
    zero = rem == 0
    rem[zero] = 1
    if bound is None:
        bound = _default_bound(P, x)
    if bound > 10**8:
        raise OutOfRange(f"sieving bound {bound} too large")
    primes = get_sieve(bound).primes
    primes = primes[primes <= bound]
    for p in primes.tolist():
        rts = roots_mod_p(P, p)
        if not rts:
            continue
        if len(rts) == p:
            idx = np.arange(x, dtype=np.int64)
        else:
            parts = []
            for r in rts:
                start = (r - 1) % p  # index of n = r mod p, n >= 1
                if start < x:
                    parts.append(np.arange(start, x, p, dtype=np.int64))
            if not parts:
                continue
            idx = np.concatenate(parts) if len(parts) > 1 else parts[0]
        idx = idx[~zero[idx]]
        if not idx.size:
            continue
        e = np.zeros(idx.size, dtype=np.int64)
        cur = idx
        cur_pos = np.arange(idx.size)
        while cur.size:
            div = rem[cur] % p == 0
            cur, cur_pos = cur[div], cur_pos[div]
            if not cur.size:
                break
            rem[cur] //= p
            e[cur_pos] += 1
        hit = e > 0
        if np.any(hit):
            on_prime(np.full(int(hit.sum()), p, dtype=np.int64), idx[hit], e[hit])
    left = np.nonzero(rem > 1)[0]
    if left.size:
        big = int(rem[left].max())
        if big > bound * bound:
            need = math.isqrt(big) + 1
            raise InsufficientBound(f"cofactor {big} may be composite; sieving bound must be at least {need}")
        on_prime(rem[left].astype(np.int64), left, np.ones(left.size, dtype=np.int64))
    cof = np.ones(x, dtype=np.int64)
    cof[left] = rem[left]
    return PolySweep(x=x, bound=bound, values=vals, cofactor=cof, zero=zero)


def factor_poly_values(P: PolynomialZ, x: int, bound: int | None = None) -> Iterator[tuple[int, int, Factorization]]:
    """Yield (n, P(n), factorization of |P(n)|) for n = 1..x (empty list for |P(n)| in {0, 1})."""
    P = as_poly(P)
    facs: list[list[tuple[int, int]]] = [[] for _ in range(x)]

    def collect(ps, idx, es):
        for p, i, e in zip(ps.tolist(), idx.tolist(), es.tolist()):
            facs[i].append((p, e))

    sweep = sweep_poly_values(P, x, collect, bound)
    for i in range(x):
        yield i + 1, int(sweep.values[i]), sorted(facs[i])


@dataclass
class LargePrimePowerSet:
    """N_P(x): prime powers p^k with p >= threshold and p^k ∥ P(n) for some n <= x.

    ``hits`` maps each member to the n <= x realising it.
    """

    x: int
    threshold: int
    members: frozenset
    hits: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members


def large_prime_powers(P: PolynomialZ, x: int, threshold: int | None = None, bound: int | None = None) -> LargePrimePowerSet:
    """N_P(x) with the prime threshold p >= x by default (pass e.g. 2x+1 for p > 2x)."""
    P = as_poly(P)
    require_within_limit(x)
    thr = x if threshold is None else threshold
    hits: dict[tuple[int, int], list[int]] = {}

    def collect(ps, idx, es):
        big = ps >= thr
        if not np.any(big):
            return
        for p, i, e in zip(ps[big].tolist(), idx[big].tolist(), es[big].tolist()):
            hits.setdefault((p, e), []).append(i + 1)

    vals = np.abs(P.values(x))
    top = int(vals.max()) if vals.size else 0
    if bound is None and 1 < top <= sieve_limit():
        # dense route: peel prime powers off with the smallest-factor table
        sv = get_sieve(top)
        exps, rest = sv.decomposition
        idx = np.nonzero(vals > 1)[0]
        cur = vals[idx]
        while idx.size:
            collect(sv.spf[cur].astype(np.int64), idx, exps[cur].astype(np.int64))
            cur = rest[cur].astype(np.int64)
            keep = cur > 1
            idx, cur = idx[keep], cur[keep]
    else:
        sweep_poly_values(P, x, collect, bound)
    return LargePrimePowerSet(x=x, threshold=thr, members=frozenset(hits), hits={k: tuple(sorted(v)) for k, v in hits.items()})
