"""Dirichlet characters built by CRT from cyclic factors of (Z/q)^x.

A character is an exponent vector against fixed generators: a primitive root
for odd prime powers, -1 for 4, and the pair (-1, 5) for 2^a with a >= 3.
Values are stored exactly as exponents of a root of unity of order
``exponent`` (the group exponent), with -1 marking non-units.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import euler_phi, factor_any, mobius
from .errors import InvalidArgument, OutOfRange

MAX_TABLE_MODULUS = 10**6


@dataclass(frozen=True)
class _CyclicFactor:
    prime: int
    power: int  # modulus p^power of the component this factor lives in
    order: int
    kind: str  # "odd", "minus_one" or "five"


def _primitive_root_mod_p(p: int) -> int:
    if p == 2:
        return 1
    order = p - 1
    qs = [r for r, _ in factor_any(order)]
    for g in range(2, p):
        if all(pow(g, order // r, p) != 1 for r in qs):
            return g
    raise AssertionError(f"no primitive root mod {p}")  # pragma: no cover


def primitive_root(p: int, a: int) -> int:
    """A generator of (Z/p^a)^x for odd p."""
    g = _primitive_root_mod_p(p)
    if a >= 2 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


@lru_cache(maxsize=256)
def _group_structure(q: int) -> tuple[tuple[tuple[int, int], ...], tuple[_CyclicFactor, ...]]:
    fac = tuple(factor_any(q)) if q > 1 else ()
    factors: list[_CyclicFactor] = []
    for p, a in fac:
        if p == 2:
            if a >= 2:
                factors.append(_CyclicFactor(2, a, 2, "minus_one"))
            if a >= 3:
                factors.append(_CyclicFactor(2, a, 2 ** (a - 2), "five"))
        else:
            factors.append(_CyclicFactor(p, a, p ** (a - 1) * (p - 1), "odd"))
    return fac, tuple(factors)


@lru_cache(maxsize=64)
def _component_logs(p: int, a: int) -> tuple[np.ndarray, ...]:
    """Discrete-log tables on Z/p^a, one per cyclic factor (-1 at non-units)."""
    m = p**a
    if m > MAX_TABLE_MODULUS:
        raise OutOfRange(f"discrete-log table for modulus {m} exceeds {MAX_TABLE_MODULUS}")
    if p != 2:
        g = primitive_root(p, a)
        phi = m // p * (p - 1)
        log = np.full(m, -1, dtype=np.int64)
        v = 1
        for e in range(phi):
            log[v] = e
            v = v * g % m
        return (log,)
    if a == 1:
        return ()
    sign = np.full(m, -1, dtype=np.int64)
    five = np.full(m, -1, dtype=np.int64)
    odd = np.arange(1, m, 2)
    sign[odd] = (odd % 4 == 3).astype(np.int64)
    if a == 2:
        return (sign,)
    v = 1
    for e in range(2 ** (a - 2)):
        five[v] = e
        five[m - v] = e
        v = v * 5 % m
    return (sign, five)


@dataclass(frozen=True)
class DirichletCharacter:
    """Character mod ``modulus`` given by ``exponents`` against the cyclic factors.

    Index 0 in :func:`characters_mod` enumeration is the principal character.
    """

    modulus: int
    exponents: tuple[int, ...]
    conductor: int
    index: int = 0
    _orders: tuple[int, ...] = field(default=(), repr=False, compare=False)

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    @property
    def order(self) -> int:
        out = 1
        for e, o in zip(self.exponents, self._orders):
            out = math.lcm(out, o // math.gcd(e, o))
        return out

    @property
    def exponent(self) -> int:
        """Common denominator N so that every value is exp(2πi k/N)."""
        out = 1
        for o in self._orders:
            out = math.lcm(out, o)
        return out

    def log_table(self) -> np.ndarray:
        """``k(n)`` for n = 0..q-1 with χ(n) = exp(2πi k(n)/exponent); -1 off units."""
        return _log_table(self.modulus, self.exponents)

    def table(self) -> np.ndarray:
        """Complex values χ(n) for n = 0..q-1 (read-only)."""
        return _value_table(self.modulus, self.exponents, self.exponent)

    def __call__(self, n: int) -> complex:
        q = self.modulus
        n %= q
        if math.gcd(n, q) != 1:
            return 0j
        if q == 1:
            return 1 + 0j
        return complex(self.table()[n])

    def is_real(self) -> bool:
        return self.order <= 2


@lru_cache(maxsize=32)
def _value_table(q: int, exponents: tuple[int, ...], N: int) -> np.ndarray:
    logs = _log_table(q, exponents)
    out = np.exp(2j * np.pi * (logs % N) / N)
    out[logs < 0] = 0
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _log_table(q: int, exponents: tuple[int, ...]) -> np.ndarray:
    if q > MAX_TABLE_MODULUS:
        raise OutOfRange(f"character table for modulus {q} exceeds {MAX_TABLE_MODULUS}")
    fac, factors = _group_structure(q)
    N = 1
    for f in factors:
        N = math.lcm(N, f.order)
    n = np.arange(q, dtype=np.int64)
    total = np.zeros(q, dtype=np.int64)
    unit = np.ones(q, dtype=bool)
    pos = 0
    for p, a in fac:
        logs = _component_logs(p, a)
        m = p**a
        r = n % m
        unit &= r % p != 0
        for log in logs:
            f = factors[pos]
            e = exponents[pos]
            pos += 1
            lg = log[r]
            total += np.where(lg >= 0, lg, 0) * e * (N // f.order)
    total %= N
    total[~unit] = -1
    total.setflags(write=False)
    return total


def _conductor(fac, factors, exponents) -> int:
    out = 1
    pos = 0
    for p, a in fac:
        if p != 2:
            e = exponents[pos]
            phi_pa = factors[pos].order
            pos += 1
            c = 0
            while e * (p ** (c - 1) * (p - 1) if c >= 1 else 1) % phi_pa:
                c += 1
            out *= p**c
            continue
        if a == 1:
            continue
        s = exponents[pos]
        pos += 1
        t = 0
        if a >= 3:
            t = exponents[pos]
            order5 = factors[pos].order
            pos += 1
        if t:
            j = (order5 // math.gcd(t, order5)).bit_length() - 1
            out *= 2 ** (j + 2)
        elif s:
            out *= 4
    return out


def characters_mod(q: int) -> list[DirichletCharacter]:
    """All phi(q) characters mod q, in ``itertools.product`` order of exponents."""
    if q < 1:
        raise InvalidArgument(f"modulus must be >= 1, got {q}")
    fac, factors = _group_structure(q)
    orders = tuple(f.order for f in factors)
    out = []
    for idx, exps in enumerate(itertools.product(*(range(o) for o in orders))):
        out.append(
            DirichletCharacter(
                modulus=q,
                exponents=tuple(exps),
                conductor=_conductor(fac, factors, exps),
                index=idx,
                _orders=orders,
            )
        )
    return out


def character(q: int, index: int) -> DirichletCharacter:
    chars = characters_mod(q)
    if not 0 <= index < len(chars):
        raise InvalidArgument(f"character index {index} out of range for modulus {q} ({len(chars)} characters)")
    return chars[index]


def primitive_characters(q: int) -> list[DirichletCharacter]:
    return [c for c in characters_mod(q) if c.is_primitive]


def autocorr_closed_form(q: int, b: int) -> int:
    """Σ_a χ(a)·conj χ(a+b) over a mod q, for any primitive χ mod q."""
    out = 1
    for p, k in factor_any(q) if q > 1 else []:
        i = k if b == 0 else min(_vp(b, p), k)
        if i >= k:
            out *= euler_phi([(p, k)])
        elif i == k - 1:
            out *= mobius([(p, 1)]) * p**i
        else:
            return 0
    return out


def _vp(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def autocorr_literal(chi: DirichletCharacter, b: int) -> complex:
    """The residue sum Σ_{a mod q} χ(a)·conj χ(a+b), evaluated term by term."""
    tab = chi.table()
    q = chi.modulus
    a = np.arange(q)
    return complex(np.sum(tab[a] * np.conj(tab[(a + b) % q])))


def autocorr_literal_exact(chi: DirichletCharacter, b: int) -> list[int]:
    """The same sum as an element of Z[ζ_N]: integer coefficients of ζ^k, reduced
    modulo the N-th cyclotomic polynomial (N = chi.exponent)."""
    from sympy import Poly, cyclotomic_poly, symbols

    q = chi.modulus
    N = chi.exponent
    logs = chi.log_table()
    a = np.arange(q)
    la, lb = logs[a], logs[(a + b) % q]
    ok = (la >= 0) & (lb >= 0)
    counts = np.bincount((la[ok] - lb[ok]) % N, minlength=N)
    z = symbols("z")
    num = Poly(list(reversed(counts.tolist())), z)
    rem = num.rem(Poly(cyclotomic_poly(N, z), z))
    coeffs = [int(c) for c in reversed(rem.all_coeffs())]
    return coeffs


def autocorr_all_primitive(q: int, b: int) -> dict[int, complex]:
    """Literal sums for every primitive character mod q at shift b, in one FFT.

    Histogram the group coordinates of a·(a+b)^{-1} over admissible a; the sum
    for the character with exponent vector e is then Σ_c h[c]·exp(2πi e·c/ord),
    i.e. a conjugated multidimensional DFT of h.
    """
    fac, factors = _group_structure(q)
    chars = characters_mod(q)
    if not factors:
        count = sum(1 for a in range(q) if math.gcd(a, q) == 1 and math.gcd(a + b, q) == 1)
        return {c.index: complex(count) for c in chars if c.is_primitive}
    n = np.arange(q, dtype=np.int64)
    coords = []
    unit = np.ones(q, dtype=bool)
    shifted = (n + b) % q
    unit_b = np.ones(q, dtype=bool)
    pos = 0
    for p, a in fac:
        m = p**a
        unit &= n % p != 0
        unit_b &= shifted % p != 0
        for log in _component_logs(p, a):
            order = factors[pos].order
            pos += 1
            coords.append((log[n % m], log[shifted % m], order))
    ok = unit & unit_b
    shape = tuple(o for _, _, o in coords)
    flat = np.zeros(int(np.prod(shape)), dtype=np.float64)
    idx = np.zeros(int(ok.sum()), dtype=np.int64)
    for la, lb, order in coords:
        idx = idx * order + (la[ok] - lb[ok]) % order
    np.add.at(flat, idx, 1.0)
    spectrum = np.conj(np.fft.fftn(flat.reshape(shape)))
    out = {}
    for c in chars:
        if c.is_primitive:
            out[c.index] = complex(spectrum[c.exponents])
    return out


def _split_prime(L: int, floor: int) -> int:
    """Smallest prime l = 1 (mod L) exceeding ``floor``."""
    l = (floor // L + 1) * L + 1
    while True:
        fac = factor_any(l)
        if len(fac) == 1 and fac[0][1] == 1:
            return l
        l += L


def autocorr_exact_mismatches(q: int) -> list[tuple[int, int]]:
    """Exact comparison of the literal residue sums with the closed form.

    Returns the (character index, shift) pairs where they differ, over every
    primitive character mod q and every shift 0 <= b < q.

    The literal sum minus the closed form is an algebraic integer α in the
    L-th cyclotomic field (L the group exponent) whose conjugates are bounded
    by 2φ(q). Reducing modulo a prime l = 1 (mod L) with l > 2φ(q) is therefore
    faithful once α vanishes under every embedding; the embeddings of χ are the
    Galois conjugates χ^j, which are again primitive mod q, so one fixed root of
    unity in F_l checks all of them.
    """
    prims = primitive_characters(q)
    if not prims:
        return []
    n = np.arange(q, dtype=np.int64)
    units = n[np.gcd(n, q) == 1]
    if q == 1:
        units = np.array([0], dtype=np.int64)
    col = np.full(q, -1, dtype=np.int64)
    col[units] = np.arange(len(units))
    inv = np.zeros(q, dtype=np.int64)
    for u in units.tolist():
        inv[u] = pow(u, -1, q) if q > 1 else 0
    # H[g, b] = #{a unit : a + b unit, a/(a+b) = g}
    a = units[:, None]
    shifted = (a + n[None, :]) % q
    ok = col[shifted] >= 0
    elem = (a * inv[shifted]) % q
    bs = np.broadcast_to(n[None, :], ok.shape)
    H = np.bincount((col[elem[ok]] * q + bs[ok]), minlength=len(units) * q).reshape(len(units), q)

    L = prims[0].exponent
    l = _split_prime(L, 2 * len(units))
    omega = pow(_primitive_root_mod_p(l), (l - 1) // L, l)
    powers = np.array([pow(omega, j, l) for j in range(L)], dtype=np.int64)
    logs = np.stack([c.log_table()[units] for c in prims])
    values = powers[logs % L].astype(np.float64)
    sums = np.mod(values @ H.astype(np.float64), l).astype(np.int64)
    closed = np.array([autocorr_closed_form(q, b) % l for b in range(q)], dtype=np.int64)
    bad = np.argwhere(sums != closed[None, :])
    return [(prims[i].index, int(b)) for i, b in bad]
