"""Reduced-scale invariant suite (x = 10^4) behind ``pretlab selftest``.

Each check returns ``(ok, detail)``. Faults can be injected by name to show
that the suite notices them.
"""

from __future__ import annotations

import contextlib
import math
import random
import sys
import time
from typing import Callable

import numpy as np

from .errors import PreconditionError

X = 10**4


def _check_sieve():
    from .arith import get_sieve, trial_factorize

    sv = get_sieve(X)
    bad = [n for n in range(2, X + 1) if int(sv.spf[n]) != trial_factorize(n)[0][0]]
    return not bad, f"{len(bad)} wrong smallest factors"


def _check_multiplicativity():
    from .multfun import make_mult_func

    rng = random.Random(1)
    f = make_mult_func("override(liouville; 3:2=>0.6+0.8i; 5:*=>-i)")
    tab = f.upto(X)
    worst = 0.0
    for _ in range(2000):
        m, n = rng.randint(1, 100), rng.randint(1, 100)
        if math.gcd(m, n) == 1:
            worst = max(worst, abs(tab[m * n] - tab[m] * tab[n]))
    return worst < 1e-12, f"max defect {worst:.3g}"


def _check_crt():
    from .arith import crt_solve

    rng = random.Random(2)
    for _ in range(500):
        m1, m2 = rng.randint(1, 60), rng.randint(1, 60)
        if math.gcd(m1, m2) != 1:
            continue
        a, b = rng.randrange(m1), rng.randrange(m2)
        r, lcm = crt_solve([(a, m1), (b, m2)])
        if lcm != m1 * m2 or r % m1 != a or r % m2 != b:
            return False, f"crt failed on {(a, m1, b, m2)}"
    return True, "ok"


def _check_hensel():
    from .polyarith import _poly_mod_array, omega_prime_power, parse_polynomial

    for s in ("x^2+1", "x^2-2", "x^3-x", "4x^2+4x+1", "x^4+x+6"):
        P = parse_polynomial(s)
        for p in (2, 3, 5, 7):
            for k in range(1, 6):
                if p**k > X:
                    break
                n = np.arange(p**k, dtype=np.int64)
                brute = int(np.sum(_poly_mod_array(P, n, p**k) == 0))
                if omega_prime_power(P, p, k) != brute:
                    return False, f"omega mismatch for {s} at {p}^{k}"
    return True, "ok"


def _check_triangle():
    from .multfun import distance, liouville, make_mult_func, mobius_sq, one

    fs = [one(), liouville(), mobius_sq(), make_mult_func("char(5,1)"), make_mult_func("nit(0.7)")]
    for f in fs:
        for g in fs:
            for h in fs:
                if distance(f, h, 1, X).value > distance(f, g, 1, X).value + distance(g, h, 1, X).value + 1e-12:
                    return False, f"triangle fails for {f.name}, {g.name}, {h.name}"
    return True, "ok"


def _check_orthogonality():
    from .characters import characters_mod

    for q in range(1, 41):
        tabs = np.stack([c.table() for c in characters_mod(q)])
        gram = tabs @ np.conj(tabs).T
        phi = int(np.sum(np.abs(tabs[0]) > 0))
        if np.abs(gram - phi * np.eye(len(tabs))).max() > 1e-9:
            return False, f"orthogonality fails mod {q}"
    return True, "ok"


def _check_char_autocorr():
    from .characters import autocorr_all_primitive, autocorr_closed_form

    for q in range(1, 80):
        for b in range(q):
            closed = autocorr_closed_form(q, b)
            for v in autocorr_all_primitive(q, b).values():
                if abs(v - closed) > 1e-6:
                    return False, f"q={q}, b={b}"
    return True, "ok"


def _check_g_identities():
    from .applications import g_properties_check
    from .multfun import make_mult_func

    rep = g_properties_check(make_mult_func("override(one; 2:*=>-1; 5:*=>-1)"), a_max=50)
    failed = [k for k, v in rep.checks.items() if not v]
    return not failed and not rep.problems, ", ".join(failed) or "ok"


def _check_form_agreement():
    from .correlation import predict_linear_corr
    from .multfun import make_mult_func

    rng = random.Random(3)
    specs = ["mobius_sq", "override(one; 2:*=>-1)", "override(one; 3:^=>-1; 7:1=>0)", "indicator_odd"]
    for _ in range(5):
        a, b = rng.randint(1, 6), rng.randint(1, 6)
        c = rng.choice([k for k in range(-5, 6) if math.gcd(a, k) == 1])
        d = rng.choice([k for k in range(-5, 6) if math.gcd(b, k) == 1 and a * k != b * c])
        rep = predict_linear_corr(make_mult_func(rng.choice(specs)), make_mult_func(rng.choice(specs)), a, c, b, d, x=X, direct=False)
        if rep.form_gap > 1e-10:
            return False, f"gap {rep.form_gap:.3g}"
    return True, "ok"


def _check_mean_value():
    from .meanvalue import predict_mean
    from .multfun import mobius_sq
    from .polyarith import parse_polynomial

    rep = predict_mean(mobius_sq(), parse_polynomial("x"), X)
    gap = abs(rep.direct - rep.prediction)
    return gap <= 0.01, f"gap {gap:.4f}"


def _check_pair_correlation():
    from .correlation import predict_linear_corr
    from .multfun import mobius_sq

    rep = predict_linear_corr(mobius_sq(), mobius_sq(), 1, 0, 1, 1, x=X)
    return rep.gap <= 0.02, f"gap {rep.gap:.4f}"


def _check_brudern():
    from .applications import brudern_predict
    from .multfun import make_mult_func, one

    r = brudern_predict(one(), one(), 1000)
    odd = make_mult_func("indicator_odd")
    s = brudern_predict(odd, odd, 1001)
    ok = r.r_pred_G == 1000 and r.r_direct == 999 and s.r_direct == 0 and s.r_pred_G == 0
    return ok, f"{r.r_pred_G}, {r.r_direct}, {s.r_pred_G}, {s.r_direct}"


def _check_second_moment():
    from .applications import second_moment
    from .multfun import make_mult_func

    f = make_mult_func("override(one; 2:*=>-1; 5:*=>-1)")
    worst = max(abs(e - p) for e, p in (second_moment(f, H, X) for H in range(1, 9)))
    return worst <= 0.05, f"max gap {worst:.4f}"


def _check_adversary():
    from .meanvalue import adversarial_mean
    from .multfun import liouville
    from .polyarith import parse_polynomial

    rep = adversarial_mean(parse_polynomial("x^2+1"), X, liouville())
    return abs(rep.achieved) >= 0.4, f"|mean| {abs(rep.achieved):.3f}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("sieve correctness", _check_sieve),
    ("multiplicativity", _check_multiplicativity),
    ("CRT", _check_crt),
    ("Hensel consistency", _check_hensel),
    ("triangle inequality", _check_triangle),
    ("character orthogonality", _check_orthogonality),
    ("character autocorrelation closed form", _check_char_autocorr),
    ("G(4a)=0 and G(2a)=-4G(a) identities", _check_g_identities),
    ("series/product form agreement", _check_form_agreement),
    ("mean value Euler product", _check_mean_value),
    ("squarefree pair correlation", _check_pair_correlation),
    ("binary additive counts", _check_brudern),
    ("second moment identity", _check_second_moment),
    ("adversarial construction", _check_adversary),
]


@contextlib.contextmanager
def _fault(name: str | None):
    """Deliberate faults for mutation testing of the suite itself."""
    if name is None:
        yield
        return
    if name != "g-sign":
        raise PreconditionError(f"unknown fault {name!r}; known: g-sign")
    from .correlation import SingularSeries

    original = SingularSeries.factor

    def flipped(self, p, k):
        v = original(self, p, k)
        return -v if (p == 2 and k == 1) else v

    SingularSeries.factor = flipped
    try:
        yield
    finally:
        SingularSeries.factor = original


def run_selftest(fault: str | None = None, stream=None) -> tuple[list[str], list[str]]:
    """Run every check; returns (failed names, precondition errors)."""
    stream = stream or sys.stdout
    failed, precondition = [], []
    with _fault(fault):
        for name, check in CHECKS:
            start = time.perf_counter()
            try:
                ok, detail = check()
            except PreconditionError as exc:
                precondition.append(name)
                print(f"ERROR {name}: {exc}", file=stream)
                continue
            status = "PASS" if ok else "FAIL"
            print(f"{status} {name} ({detail}; {time.perf_counter() - start:.2f}s)", file=stream)
            if not ok:
                failed.append(name)
    return failed, precondition


def main(fault: str | None = None) -> int:
    start = time.perf_counter()
    failed, precondition = run_selftest(fault)
    total = time.perf_counter() - start
    if precondition:
        print(f"selftest: precondition failures in {', '.join(precondition)} ({total:.1f}s)", file=sys.stderr)
        return 2
    if failed:
        print(f"selftest: FAILED {', '.join(failed)} ({total:.1f}s)", file=sys.stderr)
        return 1
    print(f"selftest: all {len(CHECKS)} checks passed ({total:.1f}s)")
    return 0
