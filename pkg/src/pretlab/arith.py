"""Integer substrate: smallest-prime-factor sieve, factorization, CRT, phi, mu.

The sieve is the hot path for every direct-sum oracle, so besides the ``spf``
table it caches a decomposition ``n = spf(n)^e * rest`` for the whole range;
multiplicative functions are then evaluated on ``1..N`` by a handful of
vectorized gathers (see :func:`evaluate_multiplicative`).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, NoSolution, OutOfRange

Factorization = list[tuple[int, int]]

DEFAULT_SIEVE_LIMIT = 10**7
_limit_override: int | None = None


def sieve_limit() -> int:
    """Configured ceiling for experiment sizes (``PRETLAB_SIEVE_LIMIT`` overrides)."""
    if _limit_override is not None:
        return _limit_override
    env = os.environ.get("PRETLAB_SIEVE_LIMIT")
    if env:
        try:
            return int(float(env))
        except ValueError as exc:
            raise InvalidArgument(f"PRETLAB_SIEVE_LIMIT={env!r} is not a number") from exc
    return DEFAULT_SIEVE_LIMIT


def set_sieve_limit(limit: int | None) -> None:
    global _limit_override
    _limit_override = limit


def require_within_limit(x: int, what: str = "x") -> None:
    limit = sieve_limit()
    if x > limit:
        raise OutOfRange(f"{what}={x} exceeds the sieve limit {limit}")


@dataclass(frozen=True, eq=False)
class FactorSieve:
    """Smallest-prime-factor table for ``2 <= n <= limit``.

    ``spf[0]`` and ``spf[1]`` are 0. Immutable after construction.
    """

    limit: int
    spf: np.ndarray

    @cached_property
    def primes(self) -> np.ndarray:
        idx = np.arange(self.limit + 1, dtype=np.int64)
        return idx[(self.spf == idx) & (idx >= 2)]

    @cached_property
    def decomposition(self) -> tuple[np.ndarray, np.ndarray]:
        """``(exponent, rest)`` with ``n = spf[n]**exponent[n] * rest[n]``, ``spf[n] ∤ rest[n]``."""
        n = np.arange(self.limit + 1, dtype=np.int64)
        p = self.spf.astype(np.int64)
        p[:2] = 1
        rest = n // p
        rest[0] = 0
        exponent = np.ones(self.limit + 1, dtype=np.int8)
        exponent[:2] = 0
        idx = np.nonzero(rest % p == 0)[0]
        idx = idx[idx >= 2]
        while idx.size:
            rest[idx] //= p[idx]
            exponent[idx] += 1
            idx = idx[rest[idx] % p[idx] == 0]
        return exponent, rest.astype(np.int32 if self.limit < 2**31 else np.int64)

    def is_prime(self, n: int) -> bool:
        if n > self.limit:
            raise OutOfRange(f"{n} exceeds sieve limit {self.limit}")
        return n >= 2 and int(self.spf[n]) == n


def build_factor_sieve(limit: int) -> FactorSieve:
    if limit < 2:
        raise InvalidArgument(f"sieve limit must be >= 2, got {limit}")
    dtype = np.int32 if limit < 2**31 else np.int64
    try:
        spf = np.zeros(limit + 1, dtype=dtype)
    except MemoryError as exc:  # pragma: no cover - depends on the host
        raise MemoryError(f"cannot allocate a sieve of size {limit}") from exc
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.nonzero(spf == 0)[0]
    idx = idx[idx >= 2]
    spf[idx] = idx
    spf.setflags(write=False)
    return FactorSieve(limit=limit, spf=spf)


_sieve_cache: FactorSieve | None = None


def get_sieve(n: int) -> FactorSieve:
    """Shared sieve covering at least ``n``; grown (never shrunk) on demand."""
    global _sieve_cache
    if _sieve_cache is None or _sieve_cache.limit < n:
        size = max(n, 1 << 12)
        if _sieve_cache is not None:
            size = max(size, min(2 * _sieve_cache.limit, sieve_limit() + 16))
        _sieve_cache = build_factor_sieve(size)
    return _sieve_cache


def factorize(n: int, sieve: FactorSieve | None = None) -> Factorization:
    if n <= 0:
        raise InvalidArgument(f"cannot factor {n}")
    if sieve is None:
        sieve = get_sieve(n)
    if n > sieve.limit:
        raise OutOfRange(f"{n} exceeds sieve limit {sieve.limit}")
    out: Factorization = []
    spf = sieve.spf
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return out


def trial_factorize(n: int) -> Factorization:
    """Factor by trial division; for integers beyond any sieve (small primes only)."""
    if n <= 0:
        raise InvalidArgument(f"cannot factor {n}")
    out: Factorization = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def factor_any(n: int) -> Factorization:
    n = abs(n)
    if n <= sieve_limit():
        return factorize(n, get_sieve(n))
    return trial_factorize(n)


def unfactor(fac: Iterable[tuple[int, int]]) -> int:
    out = 1
    for p, e in fac:
        out *= p**e
    return out


def euler_phi(fac: Iterable[tuple[int, int]]) -> int:
    out = 1
    for p, e in fac:
        out *= p ** (e - 1) * (p - 1)
    return out


def mobius(fac: Sequence[tuple[int, int]]) -> int:
    if any(e >= 2 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def divisors(fac: Sequence[tuple[int, int]]) -> list[int]:
    divs = [1]
    for p, e in fac:
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def valuation(n: int, p: int) -> int:
    if n == 0:
        raise InvalidArgument("valuation of 0 is infinite")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def crt_solve(pairs: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Solve ``n ≡ r_i (mod m_i)``; returns ``(residue, lcm)``.

    Non-coprime moduli are accepted when the residues agree on the overlap.
    """
    residue, modulus = 0, 1
    for r, m in pairs:
        if m <= 0:
            raise InvalidArgument(f"modulus must be positive, got {m}")
        g = math.gcd(modulus, m)
        if (r - residue) % g:
            raise NoSolution(f"n ≡ {residue} (mod {modulus}) and n ≡ {r} (mod {m}) are inconsistent")
        step = (r - residue) // g * pow(modulus // g, -1, m // g) if m // g > 1 else 0
        residue += modulus * step
        modulus = modulus // g * m
        residue %= modulus
    return residue, modulus


def evaluate_multiplicative(
    local: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_max: int,
    sieve: FactorSieve | None = None,
    dtype=np.complex128,
    additive: bool = False,
) -> np.ndarray:
    """Values ``F(n)`` for ``0 <= n <= n_max`` of the multiplicative ``F`` with
    prime-power values ``local(p, k)`` (vectorized). Entry 0 is set to 0.

    With ``additive`` the prime-power values are summed instead
    (F(1) = 0), giving the additive function with those values.
    """
    if sieve is None:
        sieve = get_sieve(n_max)
    exponent, rest = sieve.decomposition
    p = sieve.spf[2 : n_max + 1].astype(np.int64)
    k = exponent[2 : n_max + 1].astype(np.int64)
    out = np.empty(n_max + 1, dtype=dtype)
    out[0] = 0
    out[1] = 0 if additive else 1
    if n_max < 2:
        return out
    out[2:] = local(p, k)
    del p, k
    rest = rest[: n_max + 1]
    pending = np.nonzero(rest > 1)[0]
    done = np.ones(n_max + 1, dtype=bool)
    done[pending] = False
    while pending.size:
        r = rest[pending]
        ready = done[r]
        idx = pending[ready]
        if additive:
            out[idx] += out[r[ready]]
        else:
            out[idx] *= out[r[ready]]
        done[idx] = True
        pending = pending[~ready]
    return out
