"""Multiplicative functions given by their prime-power values, plus distances.

A :class:`MultFunc` carries a vectorized rule ``values(p, k)`` on arrays of
primes and exponents; everything else (pointwise evaluation, dense tables,
Euler factors) is derived from it. Functions are usually built from a short
text spec so experiments can be replayed from reports:

    one | liouville | mobius_sq | indicator_odd | nit(t) | char(q, index)
    override(<spec>; 2:* => -1; 3:2 => 0.5+0.5i; 5:^ => -1)

``p:k => v`` sets f(p^k); ``p:* => v`` sets every power k >= 1; ``p:^ => v``
sets f(p^k) = v^k (completely multiplicative at p).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .arith import (
    FactorSieve,
    Factorization,
    evaluate_multiplicative,
    get_sieve,
    require_within_limit,
)
from .characters import DirichletCharacter, character, characters_mod
from .errors import InvalidArgument, MalformedSpec

LocalRule = Callable[[np.ndarray, np.ndarray], np.ndarray]

UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MultFunc:
    """Multiplicative f: N -> closed unit disc, with f(1) = 1.

    ``values(p, k)`` maps equal-shape integer arrays of primes and exponents
    (k >= 1) to f(p^k). ``trivial_above`` is a bound B with f(p^k) = 1 for all
    p > B, when such a bound is known.
    """

    name: str
    values: LocalRule
    unimodular: bool = False
    completely_multiplicative: bool = False
    real: bool = False
    trivial_above: int | None = None

    def rule(self, p: int, k: int) -> complex:
        if k == 0:
            return 1 + 0j
        v = self.values(np.array([p], dtype=np.int64), np.array([k], dtype=np.int64))
        return complex(v[0])

    def local_values(self, p: int, K: int) -> np.ndarray:
        """f(p^k) for k = 0..K."""
        ks = np.arange(1, K + 1, dtype=np.int64)
        out = np.ones(K + 1, dtype=np.complex128)
        if K:
            out[1:] = self.values(np.full(K, p, dtype=np.int64), ks)
        return out

    def __call__(self, n: int) -> complex:
        from .arith import factor_any

        if n < 1:
            raise InvalidArgument(f"f is defined on positive integers, got {n}")
        return eval_at(self, factor_any(n))

    def upto(self, n_max: int, sieve: FactorSieve | None = None) -> np.ndarray:
        """Dense table of f(n) for 0 <= n <= n_max (entry 0 is 0)."""
        if sieve is None:
            sieve = get_sieve(n_max)
        dtype = np.float64 if self.real else np.complex128

        def checked(p, k):
            v = self.values(p, k)
            check_unit_disc(self, v)
            return v.real if self.real else v

        return evaluate_multiplicative(checked, n_max, sieve, dtype=dtype)


def check_unit_disc(f: MultFunc, v: np.ndarray) -> None:
    a = np.abs(v)
    if a.size and a.max() > 1 + UNIT_TOL:
        raise InvalidArgument(f"{f.name}: value of modulus {a.max():.6g} outside the unit disc")
    if f.unimodular and a.size and np.abs(a - 1).max() > UNIT_TOL:
        raise InvalidArgument(f"{f.name}: declared unimodular but takes a value of modulus {a.min():.6g}")


def eval_at(f: MultFunc, fac: Factorization) -> complex:
    if not fac:
        return 1 + 0j
    p = np.array([q for q, _ in fac], dtype=np.int64)
    k = np.array([e for _, e in fac], dtype=np.int64)
    return complex(np.prod(f.values(p, k)))


def theta_values(f: MultFunc, p: int, K: int) -> np.ndarray:
    """θ(p^k) for k = 0..K where f = 1 * θ, i.e. θ(p^k) = f(p^k) - f(p^{k-1})."""
    if K < 0:
        raise InvalidArgument("K must be >= 0")
    fv = f.local_values(p, K)
    out = fv.copy()
    out[1:] = fv[1:] - fv[:-1]
    return out


# builtins


def _ones(p, k):
    return np.ones(np.shape(p), dtype=np.complex128)


def one() -> MultFunc:
    return MultFunc("one", _ones, unimodular=True, completely_multiplicative=True, real=True, trivial_above=1)


def liouville() -> MultFunc:
    return MultFunc(
        "liouville",
        lambda p, k: np.where(np.asarray(k) % 2 == 1, -1.0, 1.0).astype(np.complex128),
        unimodular=True,
        completely_multiplicative=True,
        real=True,
    )


def mobius_sq() -> MultFunc:
    return MultFunc("mobius_sq", lambda p, k: (np.asarray(k) == 1).astype(np.complex128), real=True)


def indicator_odd() -> MultFunc:
    return MultFunc(
        "indicator_odd",
        lambda p, k: (np.asarray(p) != 2).astype(np.complex128),
        completely_multiplicative=True,
        real=True,
        trivial_above=2,
    )


def nit(t: float) -> MultFunc:
    """n -> n^{it}."""
    t = float(t)
    return MultFunc(
        f"nit({t!r})",
        lambda p, k: np.exp(1j * t * np.asarray(k) * np.log(np.asarray(p, dtype=np.float64))),
        unimodular=True,
        completely_multiplicative=True,
        real=t == 0,
        trivial_above=1 if t == 0 else None,
    )


def char_func(chi: DirichletCharacter, name: str | None = None) -> MultFunc:
    q = chi.modulus
    tab = chi.table()

    def values(p, k):
        p = np.asarray(p)
        return tab[p % q] ** np.asarray(k)

    return MultFunc(
        name or f"char({q},{chi.index})",
        values,
        unimodular=q == 1,
        completely_multiplicative=True,
        real=chi.is_real(),
        trivial_above=1 if chi.is_principal and q == 1 else None,
    )


def product(f: MultFunc, g: MultFunc, name: str | None = None) -> MultFunc:
    """Pointwise product n -> f(n)g(n)."""
    ta = None if f.trivial_above is None or g.trivial_above is None else max(f.trivial_above, g.trivial_above)
    return MultFunc(
        name or f"{f.name}*{g.name}",
        lambda p, k: f.values(p, k) * g.values(p, k),
        unimodular=f.unimodular and g.unimodular,
        completely_multiplicative=f.completely_multiplicative and g.completely_multiplicative,
        real=f.real and g.real,
        trivial_above=ta,
    )


def conj(f: MultFunc) -> MultFunc:
    if f.real:
        return f
    return MultFunc(
        f"conj({f.name})",
        lambda p, k: np.conj(f.values(p, k)),
        unimodular=f.unimodular,
        completely_multiplicative=f.completely_multiplicative,
        real=False,
        trivial_above=f.trivial_above,
    )


def twist(f: MultFunc, chi: DirichletCharacter, t: float) -> MultFunc:
    """F(p^k) = f(p^k)·conj(χ(p))^k·p^{-ikt} for p ∤ q and F(p^k) = 1 for p | q."""
    q = chi.modulus
    tab = np.conj(chi.table())

    def values(p, k):
        p = np.asarray(p)
        k = np.asarray(k)
        v = f.values(p, k) * tab[p % q] ** k
        if t:
            v = v * np.exp(-1j * t * k * np.log(p.astype(np.float64)))
        return np.where(q % p == 0, 1.0 + 0j, v)

    ta = None
    if f.trivial_above is not None and chi.modulus == 1 and t == 0:
        ta = f.trivial_above
    return MultFunc(
        f"twist({f.name};{q},{chi.index};{t!r})",
        values,
        unimodular=f.unimodular,
        completely_multiplicative=False,
        real=f.real and chi.is_real() and t == 0,
        trivial_above=ta,
    )


def restrict_above(f: MultFunc, bound: float) -> MultFunc:
    """f on prime powers p^k > bound, and 1 on the rest."""

    def values(p, k):
        p = np.asarray(p, dtype=np.float64)
        small = p ** np.asarray(k) <= bound
        return np.where(small, 1.0 + 0j, f.values(p.astype(np.int64), k))

    return MultFunc(f"restrict({f.name};>{bound})", values, unimodular=f.unimodular, real=f.real)


def with_prime_values(
    base: MultFunc,
    primes: np.ndarray,
    vals: np.ndarray,
    completely: bool = False,
    name: str | None = None,
) -> MultFunc:
    """Replace f(p) (or f(p^k) = v^k when ``completely``) on the listed primes."""
    order = np.argsort(primes)
    primes = np.asarray(primes, dtype=np.int64)[order]
    vals = np.asarray(vals, dtype=np.complex128)[order]
    if primes.size and np.abs(vals).max() > 1 + UNIT_TOL:
        raise InvalidArgument("prime values must lie in the unit disc")

    def values(p, k):
        p = np.asarray(p, dtype=np.int64)
        k = np.asarray(k, dtype=np.int64)
        out = np.array(base.values(p, k), dtype=np.complex128)
        if not primes.size:
            return out
        pos = np.clip(np.searchsorted(primes, p), 0, primes.size - 1)
        hit = primes[pos] == p
        if completely:
            hit_v = vals[pos] ** k
        else:
            hit &= k == 1
            hit_v = vals[pos]
        return np.where(hit, hit_v, out)

    unimod = base.unimodular and bool(np.all(np.abs(np.abs(vals) - 1) < UNIT_TOL))
    return MultFunc(
        name or f"{base.name}+table[{primes.size}]",
        values,
        unimodular=unimod,
        completely_multiplicative=base.completely_multiplicative and completely,
        real=base.real and bool(np.all(vals.imag == 0)),
        trivial_above=None,
    )


# spec grammar


@dataclass(frozen=True)
class _Override:
    prime: int
    exponent: int | None  # None for every power
    value: complex
    completely: bool = False


def parse_complex(text: str) -> complex:
    """Parse literals such as ``-1``, ``0.5``, ``0.6+0.8i``, ``-i``."""
    s = text.replace(" ", "")
    if not s or not re.fullmatch(r"[0-9eE.+\-i]+", s) or s.count("i") > 1 or ("i" in s and not s.endswith("i")):
        raise MalformedSpec(f"bad complex literal {text!r}")
    s = re.sub(r"(^|[+-])i$", r"\g<1>1i", s)
    try:
        return complex(s.replace("i", "j"))
    except ValueError as exc:
        raise MalformedSpec(f"bad complex literal {text!r}") from exc


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise MalformedSpec(f"unbalanced parentheses in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise MalformedSpec(f"unbalanced parentheses in {text!r}")
    parts.append("".join(cur))
    return parts


def _parse_override(text: str) -> _Override:
    m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+|\*|\^)\s*=>\s*(.+?)\s*", text)
    if not m:
        raise MalformedSpec(f"bad override {text.strip()!r}; expected 'p:k => value'")
    p = int(m.group(1))
    if not _is_prime(p):
        raise MalformedSpec(f"override key {p} is not a prime")
    value = parse_complex(m.group(3))
    if abs(value) > 1 + UNIT_TOL:
        raise InvalidArgument(f"override value {value} lies outside the unit disc")
    which = m.group(2)
    if which == "*":
        return _Override(p, None, value)
    if which == "^":
        return _Override(p, None, value, completely=True)
    k = int(which)
    if k < 1:
        raise MalformedSpec(f"override exponent must be >= 1 in {text.strip()!r}")
    return _Override(p, k, value)


def _apply_overrides(base: MultFunc, overrides: Sequence[_Override], name: str) -> MultFunc:
    def values(p, k):
        p = np.asarray(p)
        k = np.asarray(k)
        out = np.array(base.values(p, k), dtype=np.complex128)
        for o in overrides:
            mask = p == o.prime
            if o.exponent is not None:
                mask &= k == o.exponent
                out = np.where(mask, o.value, out)
            elif o.completely:
                out = np.where(mask, o.value ** k, out)
            else:
                out = np.where(mask, o.value, out)
        return out

    unimodular = base.unimodular and all(abs(abs(o.value) - 1) < UNIT_TOL for o in overrides)
    completely = base.completely_multiplicative and all(o.completely for o in overrides)
    real = base.real and all(o.value.imag == 0 for o in overrides)
    ta = None
    if base.trivial_above is not None:
        ta = max([base.trivial_above] + [o.prime for o in overrides])
    return MultFunc(name, values, unimodular=unimodular, completely_multiplicative=completely, real=real, trivial_above=ta)


def _parse(text: str) -> MultFunc:
    s = text.strip()
    if s == "one":
        return one()
    if s == "liouville":
        return liouville()
    if s == "mobius_sq":
        return mobius_sq()
    if s == "indicator_odd":
        return indicator_odd()
    m = re.fullmatch(r"nit\(\s*([^()]+?)\s*\)", s)
    if m:
        try:
            return nit(float(m.group(1)))
        except ValueError as exc:
            raise MalformedSpec(f"nit expects a real number, got {m.group(1)!r}") from exc
    m = re.fullmatch(r"char\(\s*(\d+)\s*,\s*(\d+)\s*\)", s)
    if m:
        q, idx = int(m.group(1)), int(m.group(2))
        if q < 1:
            raise MalformedSpec("character modulus must be >= 1")
        return char_func(character(q, idx), name=f"char({q},{idx})")
    m = re.fullmatch(r"override\((.*)\)", s, flags=re.S)
    if m:
        parts = _split_top(m.group(1), ";")
        if len(parts) < 2:
            raise MalformedSpec(f"override needs a base and at least one entry: {text!r}")
        base = _parse(parts[0])
        overrides = [_parse_override(x) for x in parts[1:] if x.strip()]
        return _apply_overrides(base, overrides, s)
    raise MalformedSpec(f"unknown function spec {text!r}")


def make_mult_func(spec: str) -> MultFunc:
    """Build a MultFunc from its text spec; the spec is kept as ``name``."""
    if not isinstance(spec, str) or not spec.strip():
        raise MalformedSpec("empty function spec")
    f = _parse(spec)
    if f.name != spec:
        f = MultFunc(spec, f.values, f.unimodular, f.completely_multiplicative, f.real, f.trivial_above)
    return f


# distances


@dataclass(frozen=True)
class DistanceValue:
    value: float
    y: float
    x: float
    variant: str = "plain"

    @property
    def squared(self) -> float:
        return self.value**2


def _primes_between(y: float, x: float, sieve: FactorSieve) -> np.ndarray:
    pr = sieve.primes
    lo = np.searchsorted(pr, math.ceil(y))
    hi = np.searchsorted(pr, math.floor(x), side="right")
    return pr[lo:hi]


def _check_range(y: float, x: float) -> None:
    if not 1 <= y <= x:
        raise InvalidArgument(f"need 1 <= y <= x, got y={y}, x={x}")
    require_within_limit(int(x))


def distance_sq(f: MultFunc, g: MultFunc, y: float, x: float, sieve: FactorSieve | None = None) -> float:
    _check_range(y, x)
    sieve = sieve or get_sieve(int(x))
    pr = _primes_between(y, x, sieve)
    ones = np.ones_like(pr)
    terms = (1 - np.real(f.values(pr, ones) * np.conj(g.values(pr, ones)))) / pr
    return max(float(np.sum(terms)), 0.0)


def distance(f: MultFunc, g: MultFunc, y: float, x: float, sieve: FactorSieve | None = None) -> DistanceValue:
    """sqrt of Σ_{y <= p <= x} (1 - Re f(p)·conj g(p))/p over primes."""
    return DistanceValue(math.sqrt(distance_sq(f, g, y, x, sieve)), y, x, "plain")


def _prime_power_part(f: MultFunc, g: MultFunc, y: float, x: float, sieve: FactorSieve) -> float:
    total = 0.0
    pr = _primes_between(1, x, sieve)
    k = 1
    while pr.size:
        pk = pr.astype(np.float64) ** k
        keep = pk <= x
        pr, pk = pr[keep], pk[keep]
        sel = pk >= y
        if np.any(sel):
            ks = np.full(int(sel.sum()), k, dtype=np.int64)
            ps = pr[sel]
            total += float(np.sum((1 - np.real(f.values(ps, ks) * np.conj(g.values(ps, ks)))) / pk[sel]))
        k += 1
    return total


def distance_poly(
    f: MultFunc,
    g: MultFunc,
    y: float,
    x: float,
    P,
    starred: bool = False,
    sieve: FactorSieve | None = None,
    large=None,
) -> DistanceValue:
    """Distance with the extra large-prime-power term Σ_{p^k ∈ N_P(x)} (1 - Re f·conj g)(p^k)/x.

    ``starred`` sums the first part over prime powers y <= p^k <= x weighted
    by 1/p^k instead of primes only. ``large`` may pass a precomputed
    :class:`~pretlab.polyarith.LargePrimePowerSet`.
    """
    from .polyarith import large_prime_powers

    _check_range(y, x)
    sieve = sieve or get_sieve(int(x))
    if starred:
        first = _prime_power_part(f, g, y, x, sieve)
    else:
        first = distance_sq(f, g, y, x, sieve)
    if large is None:
        large = large_prime_powers(P, int(x))
    extra = 0.0
    if large.members:
        ps = np.array([m[0] for m in large.members], dtype=np.int64)
        ks = np.array([m[1] for m in large.members], dtype=np.int64)
        extra = float(np.sum(1 - np.real(f.values(ps, ks) * np.conj(g.values(ps, ks))))) / x
    return DistanceValue(math.sqrt(max(first + extra, 0.0)), y, x, "starred" if starred else "poly")


@dataclass(frozen=True)
class ScanResult:
    chi: DirichletCharacter
    t: float
    distance: DistanceValue


def pretentious_scan(
    f: MultFunc,
    q_max: int,
    t_grid: Sequence[float],
    x: int,
    sieve: FactorSieve | None = None,
) -> ScanResult:
    """Exhaustive minimum of the distance from f to χ(n)n^{it} over every
    character of modulus <= q_max and every t in the grid.

    Primes dividing q are left out of the sum for modulus q (χ vanishes
    there, which would otherwise penalise every nontrivial modulus). Ties go
    to the earliest (q, character index, grid position).
    """
    if q_max < 1:
        raise InvalidArgument("q_max must be >= 1")
    if not len(t_grid):
        raise InvalidArgument("t_grid must be nonempty")
    require_within_limit(x)
    sieve = sieve or get_sieve(x)
    pr = _primes_between(1, x, sieve)
    fp = f.values(pr, np.ones_like(pr)) / pr
    logp = np.log(pr.astype(np.float64))
    ts = np.asarray(t_grid, dtype=np.float64)
    phase = np.exp(-1j * np.outer(logp, ts))  # primes x t
    best: tuple[float, DirichletCharacter, float] | None = None
    for q in range(1, q_max + 1):
        keep = q % pr != 0
        base = float(np.sum(1.0 / pr[keep]))
        chars = characters_mod(q)
        tabs = np.stack([np.conj(c.table()) for c in chars])[:, pr[keep] % q]
        corr = np.real((tabs * fp[keep]) @ phase[keep])  # chars x t
        dist2 = base - corr
        for ci, c in enumerate(chars):
            for ti in range(ts.size):
                d2 = max(float(dist2[ci, ti]), 0.0)
                if best is None or d2 < best[0] - 1e-15:
                    best = (d2, c, float(ts[ti]))
    d2, chi, t = best
    return ScanResult(chi, t, DistanceValue(math.sqrt(d2), 1, x, "plain"))
