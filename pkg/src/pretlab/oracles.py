"""Brute-force evaluation of f(|P(n)|) for n = 1..x.

Two routes: gather from a dense table of f when the values are small enough,
otherwise progression-sieve the values of P. Convention: f(0) = 0.
"""

from __future__ import annotations

import numpy as np

from .arith import evaluate_multiplicative, get_sieve, require_within_limit, sieve_limit
from .multfun import MultFunc, check_unit_disc
from .polyarith import PolynomialZ, as_poly, sweep_poly_values

DENSE_SLACK = 1000


def _dense_ok(max_value: int, x: int) -> bool:
    return max_value <= sieve_limit() + DENSE_SLACK and max_value <= 50 * x + 10**6


def func_on_poly(f: MultFunc, P: PolynomialZ, x: int) -> np.ndarray:
    """Array of f(|P(n)|), n = 1..x."""
    P = as_poly(P)
    require_within_limit(x)
    vals = np.abs(P.values(x))
    if _dense_ok(int(vals.max()) if vals.size else 0, x):
        table = f.upto(int(vals.max()))
        return table[vals]
    out = np.ones(x, dtype=np.complex128)

    def acc(ps, idx, es):
        v = f.values(ps, es)
        check_unit_disc(f, v)
        out[idx] *= v

    sweep = sweep_poly_values(P, x, acc)
    out[sweep.zero] = 0
    return out.real.copy() if f.real else out


def additive_on_poly(h, P: PolynomialZ, x: int) -> np.ndarray:
    """Array of h(|P(n)|) = Σ_{p^k ∥ P(n)} h(p^k) for the vectorized rule ``h(p, k)``."""
    P = as_poly(P)
    require_within_limit(x)
    vals = np.abs(P.values(x))
    if _dense_ok(int(vals.max()) if vals.size else 0, x):
        n_max = int(vals.max())
        table = evaluate_multiplicative(h, n_max, get_sieve(n_max), dtype=np.complex128, additive=True)
        return table[vals]
    out = np.zeros(x, dtype=np.complex128)

    def acc(ps, idx, es):
        np.add.at(out, idx, h(ps, es))

    sweep = sweep_poly_values(P, x, acc)
    out[sweep.zero] = 0
    return out
