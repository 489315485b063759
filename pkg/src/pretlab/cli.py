"""Command-line experiment runner.

Every subcommand turns its flags into a plain config dict, runs the pipeline
and writes a JSON (or CSV) report embedding that config, the library version
and the wall-clock time. Exit codes: 0 success, 2 precondition failure,
1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

from . import __version__
from .errors import PreconditionError, PretlabError

SUBCOMMANDS = ("meanvalue", "correlate", "char-shift", "omega", "distance", "ect", "katai", "brudern", "adversary", "multi")


def _c(z) -> dict | None:
    if z is None:
        return None
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _num(v):
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return None
    return v


def _pick_character(q: int, index: int | None):
    from .characters import character, primitive_characters

    if index is None:
        prim = primitive_characters(q)
        if not prim:
            raise PreconditionError(f"no primitive character mod {q}")
        return prim[0]
    return character(q, index)


# pipelines: config dict -> (result dict, factor rows for CSV)


def _run_meanvalue(cfg):
    from .meanvalue import predict_mean
    from .multfun import make_mult_func
    from .polyarith import parse_polynomial

    f = make_mult_func(cfg["f"])
    rep = predict_mean(f, parse_polynomial(cfg["P"]), cfg["x"], cfg.get("y"), direct=not cfg.get("no_direct"))
    rows = [(r.p, r.value) for r in rep.factors]
    return {
        "prediction": _c(rep.prediction),
        "direct": _c(rep.direct),
        "x": rep.x,
        "product_range": rep.product_range,
        "error_budget": _num(rep.error_budget),
        "local_factors": [[p, v.real, v.imag] for p, v in rows],
    }, rows


def _run_correlate(cfg):
    from .correlation import predict_poly_corr
    from .multfun import make_mult_func
    from .polyarith import parse_polynomial

    rep = predict_poly_corr(
        make_mult_func(cfg["f"]),
        make_mult_func(cfg["g"]),
        parse_polynomial(cfg["P"]),
        parse_polynomial(cfg["Q"]),
        cfg["x"],
        t=cfg.get("t", 0.0),
        u=cfg.get("u", 0.0),
        direct=not cfg.get("no_direct"),
        product_range=cfg.get("y"),
    )
    return rep.to_json(), rep.local_factors


def _run_char_shift(cfg):
    from .correlation import predict_char_shift
    from .multfun import make_mult_func

    chi = _pick_character(cfg["q"], cfg.get("index"))
    rep = predict_char_shift(make_mult_func(cfg["f"]), chi, cfg.get("t", 0.0), cfg["d"], cfg["x"], direct=not cfg.get("no_direct"))
    return rep.to_json(), rep.local_factors


def _run_omega(cfg):
    from .polyarith import omega_prime_power, parse_polynomial

    val = omega_prime_power(parse_polynomial(cfg["P"]), cfg["p"], cfg["k"])
    return {"omega": val, "P": cfg["P"], "p": cfg["p"], "k": cfg["k"]}, []


def _run_distance(cfg):
    from .multfun import distance, distance_poly, make_mult_func
    from .polyarith import parse_polynomial

    f, g = make_mult_func(cfg["f"]), make_mult_func(cfg["g"])
    y = cfg.get("y", 1.0)
    if cfg.get("P"):
        d = distance_poly(f, g, y, cfg["x"], parse_polynomial(cfg["P"]), starred=bool(cfg.get("starred")))
    else:
        d = distance(f, g, y, cfg["x"])
    return {"distance": d.value, "squared": d.squared, "variant": d.variant, "y": d.y, "x": d.x}, []


def _run_ect(cfg):
    from .applications import discrepancy, ect_characterize
    from .multfun import make_mult_func

    f = make_mult_func(cfg["f"])
    v = ect_characterize(f, cfg.get("M", 1000))
    return {
        "verdict": "pass" if v.satisfies_characterization else ("inconclusive" if v.inconclusive else "fail"),
        "period_m": v.period_m,
        "threshold_M": v.threshold_M,
        "witnesses": v.witnesses,
        "period_sum": v.period_sum,
        "discrepancy": discrepancy(f, cfg["x"]),
        "x": cfg["x"],
    }, []


def _run_katai(cfg):
    from .applications import katai_report
    from .multfun import make_mult_func

    chi = _pick_character(cfg.get("q", 1), cfg.get("index"))
    rep = katai_report(make_mult_func(cfg["f"]), chi, cfg.get("t", 0.0), cfg["x"])
    return {
        "energy_E": _c(rep.energy_E),
        "coefficient_pred": _num(rep.coefficient_pred),
        "coefficient_emp": rep.coefficient_emp,
        "x": rep.x,
        "vanishing_branch": rep.vanishing_branch,
    }, []


def _run_brudern(cfg):
    from .applications import brudern_predict
    from .multfun import make_mult_func

    rep = brudern_predict(make_mult_func(cfg["A"]), make_mult_func(cfg["B"]), cfg["n"], cfg.get("reading", "printed"))
    return {
        "n": rep.n,
        "r_direct": rep.r_direct,
        "r_pred_G": rep.r_pred_G,
        "r_pred_sigma": rep.r_pred_sigma,
        "rho_A": rep.rho_A,
        "rho_B": rep.rho_B,
        "a_table": {str(p): v for p, v in rep.a_table.items()},
        "b_table": {str(p): v for p, v in rep.b_table.items()},
        "sigma_reading": rep.sigma_reading,
        "degenerate": rep.degenerate,
    }, []


def _run_adversary(cfg):
    from .meanvalue import adversarial_mean
    from .multfun import make_mult_func
    from .polyarith import parse_polynomial

    rep = adversarial_mean(parse_polynomial(cfg["P"]), cfg["x"], make_mult_func(cfg["base"]))
    return {
        "x": rep.x,
        "frak_M_size": rep.frak_M_size,
        "guaranteed": rep.guaranteed,
        "achieved": _c(rep.achieved),
        "abs_achieved": abs(rep.achieved),
        "phase": rep.phase,
        "assigned_primes": len(rep.assignments),
    }, []


def _parse_term(text: str):
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 4:
        raise PreconditionError(f"term {text!r} must be 'spec,t,a,b'")
    return parts[0], float(parts[1]), int(parts[2]), int(parts[3])


def _run_multi(cfg):
    from .correlation import correlate_multi
    from .multfun import make_mult_func

    terms = []
    for text in cfg["term"]:
        spec, t, a, b = _parse_term(text)
        terms.append((make_mult_func(spec), t, a, b))
    rep = correlate_multi(terms, cfg["x"], direct=not cfg.get("no_direct"))
    return rep.to_json(), rep.local_factors


PIPELINES = {
    "meanvalue": _run_meanvalue,
    "correlate": _run_correlate,
    "char-shift": _run_char_shift,
    "omega": _run_omega,
    "distance": _run_distance,
    "ect": _run_ect,
    "katai": _run_katai,
    "brudern": _run_brudern,
    "adversary": _run_adversary,
    "multi": _run_multi,
}


def run(config: dict) -> tuple[dict, list]:
    """Run one experiment from its config; returns (report, factor rows)."""
    sub = config.get("subcommand")
    if sub not in PIPELINES:
        raise PreconditionError(f"unknown subcommand {sub!r}")
    start = time.perf_counter()
    result, rows = PIPELINES[sub](config)
    report = {
        "config": config,
        "version": __version__,
        "result": result,
        "timing_seconds": time.perf_counter() - start,
    }
    return report, rows


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False, default=str) + "\n"


def render_csv(report: dict, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "p", "re", "im"])
    for p, v in rows:
        v = complex(v)
        w.writerow(["factor", p, repr(v.real), repr(v.imag)])
    res = report["result"]
    pred = res.get("prediction")
    if isinstance(pred, dict):
        w.writerow(["prediction", "", repr(pred["re"]), repr(pred["im"])])
    direct = res.get("direct")
    if isinstance(direct, dict):
        w.writerow(["direct", "", repr(direct["re"]), repr(direct["im"])])
    return buf.getvalue()


# argument parsing


def _common(p: argparse.ArgumentParser, x_default: int | None = None) -> None:
    p.add_argument("--x", type=int, default=x_default, required=x_default is None)
    p.add_argument("--output", "-o", default=None, help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=None, help="accepted for compatibility; runs are single-threaded")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pretlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("meanvalue", help="mean of f(P(n)) against its Euler product")
    p.add_argument("--f", required=True)
    p.add_argument("--P", default="x")
    p.add_argument("--y", type=int, default=None, help="product range (default x)")
    p.add_argument("--no-direct", action="store_true")
    _common(p)

    p = sub.add_parser("correlate", help="two-point correlation of f(P(n)) and g(Q(n))")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--P", default="x")
    p.add_argument("--Q", default="x+1")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--y", type=int, default=None)
    p.add_argument("--no-direct", action="store_true")
    _common(p)

    p = sub.add_parser("char-shift", help="shift-d correlation of f pretending to be a character")
    p.add_argument("--f", required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--index", type=int, default=None, help="character index (default: first primitive)")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--no-direct", action="store_true")
    _common(p)

    p = sub.add_parser("omega", help="number of roots of P modulo p^k")
    p.add_argument("--P", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    _common(p, x_default=0)

    p = sub.add_parser("distance", help="pretentious distance between f and g")
    p.add_argument("--f", required=True)
    p.add_argument("--g", default="one")
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--P", default=None, help="add the large-prime-power term for this polynomial")
    p.add_argument("--starred", action="store_true")
    _common(p)

    p = sub.add_parser("ect", help="periodic zero-sum characterization and discrepancy")
    p.add_argument("--f", required=True)
    p.add_argument("--M", type=int, default=1000)
    _common(p, x_default=10**5)

    p = sub.add_parser("katai", help="Kátai energy against the logarithmic statistic")
    p.add_argument("--f", required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--t", type=float, default=0.0)
    _common(p)

    p = sub.add_parser("brudern", help="representations n = a + b with a in A, b in B")
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reading", choices=("printed", "relative"), default="printed")
    _common(p, x_default=0)

    p = sub.add_parser("adversary", help="large-prime construction for f(P(n))")
    p.add_argument("--P", default="x^2+1")
    p.add_argument("--base", default="liouville")
    _common(p)

    p = sub.add_parser("multi", help="m-point linear correlation")
    p.add_argument("--term", action="append", required=True, help="'spec,t,a,b' for f(a n + b)·n^{-it}; repeat")
    p.add_argument("--no-direct", action="store_true")
    _common(p)

    sub.add_parser("selftest", help="run the invariant suite at reduced scale").add_argument(
        "--fault", default=None, help="inject a deliberate fault (mutation test)"
    )
    return ap


_NON_CONFIG = {"output", "format", "threads"}


def config_from_args(ns: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in _NON_CONFIG and v is not None and v is not False}


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    if ns.subcommand == "selftest":
        from .selftest import main as selftest_main

        return selftest_main(fault=ns.fault)
    cfg = config_from_args(ns)
    try:
        report, rows = run(cfg)
        text = render_csv(report, rows) if ns.format == "csv" else render_json(report)
    except PreconditionError as exc:
        print(f"pretlab: precondition failed: {exc}", file=sys.stderr)
        return 2
    except PretlabError as exc:
        print(f"pretlab: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"pretlab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if ns.output:
        with open(ns.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
