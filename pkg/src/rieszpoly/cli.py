"""Command-line front end.

Exit codes: 0 success, 1 invalid input or unreadable file, 2 a check or
certification failed.  Reports go to ``--out`` (written atomically) or to
standard output; diagnostics always go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
from fractions import Fraction
from typing import Optional

from . import normcalc, rieszmodel
from .forge import (
    BracketFailure,
    BuildParams,
    CertificationFailure,
    ForgeError,
    as_fraction,
    construct,
)
from .polyexpr import (
    BudgetExceeded,
    PolyError,
    SparsePoly,
    as_expr,
    eval_at_angle,
    eval_at_real,
    expand,
    expr_from_json,
)
from .rieszmodel import RieszMeasure

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for failed checks here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# measure mini-language

_TERM = re.compile(r"""
    \s*([+-])?\s*
    (\d+(?:\.\d*)?(?:/\d+)?|\.\d+)?\s*\*?\s*
    (?:(z)(?:\s*\^\s*(\d+))?|(h))?
    \s*""", re.VERBOSE)


def parse_measure(spec: str, seed: Optional[int] = None) -> RieszMeasure:
    """Preset name, ``random`` (uses ``seed``) or inline ``"c0 + c1 z^k + ... + c h"``.

    ``z^k`` stands for the ``k``-th convolution power of the Riesz product and
    ``h`` for Haar measure.  Coefficients may be integers, decimals or ``p/q``.
    """
    spec = spec.strip()
    if spec in rieszmodel.PRESETS:
        return rieszmodel.preset(spec)
    if spec == "random":
        return rieszmodel.random_measure(0 if seed is None else seed)
    if not spec:
        raise InputError("empty measure spec")
    coeffs: dict[int, Fraction] = {}
    haar = Fraction(0)
    pos, first = 0, True
    while pos < len(spec):
        m = _TERM.match(spec, pos)
        sign, num, zed, power, h = m.groups()
        if m.end() == pos or (num is None and zed is None and h is None):
            raise InputError(f"cannot parse measure {spec!r} at column {pos}")
        if sign is None and not first:
            raise InputError(f"missing + or - before column {pos} in {spec!r}")
        c = Fraction(num) if num is not None else Fraction(1)
        if sign == "-":
            c = -c
        if h:
            haar += c
        else:
            deg = 0 if zed is None else int(power or 1)
            coeffs[deg] = coeffs.get(deg, Fraction(0)) + c
        pos, first = m.end(), False
    return RieszMeasure(haar, SparsePoly(coeffs))


def load_polynomial(path: str):
    """Read a report, a factored expression or a sparse polynomial from JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        if isinstance(obj, dict) and "poly" in obj:
            obj = obj["poly"]
        if isinstance(obj, dict) and "kind" in obj:
            return expr_from_json(obj)
        if isinstance(obj, dict) and "terms" in obj:
            return SparsePoly.from_json(obj)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed polynomial in {path}: {exc}") from exc
    raise InputError(f"{path} holds neither a report nor a polynomial")


# ---------------------------------------------------------------------------
# commands


def _params(args) -> BuildParams:
    kw = {"tol": args.tol, "eta": args.eta, "term_budget": args.budget}
    if args.grid is not None:
        kw["grid"] = args.grid
    return BuildParams(**kw)


def _run_config(args, **extra) -> dict:
    cfg = {"command": args.command, "seed": args.seed}
    for name in ("a", "b", "tol", "eta", "grid", "budget", "max_n"):
        if hasattr(args, name):
            cfg[name] = getattr(args, name)
    cfg.update(extra)
    return cfg


def _check_targets(a: Fraction, b: Fraction) -> None:
    if b > a:
        raise InputError(f"b > a: need 0 < b <= a <= 1, got a={a}, b={b}")
    if not (0 < b and a <= 1):
        raise InputError(f"need 0 < b <= a <= 1, got a={a}, b={b}")


def cmd_construct(args) -> int:
    a, b = as_fraction(args.a), as_fraction(args.b)
    _check_targets(a, b)
    params = _params(args)
    try:
        report = construct(a, b, params)
    except (CertificationFailure, BracketFailure) as exc:
        _err(f"certification failed: {exc}")
        return EXIT_CHECK
    out = report.to_json()
    out["run"] = _run_config(args)
    emit(dump_json(out), args.out)
    _err(f"step {report.step}: disc [{report.disc.lower:.10g}, {report.disc.upper:.10g}], "
         f"|p(1)| = {abs(report.value_at_one):.12g}, degree {report.degree}")
    return EXIT_OK


def verify_polynomial(p, a: float, b: float, tol: float, budget: int = 100_000) -> dict:
    """Recompute the certified quantities of ``p`` and compare with the targets.

    ``b`` is compared with the transform sup over ``{1, 0} U {2^-j}`` (the
    quantity a polynomial in the Riesz product exposes), ``a`` with the disc
    enclosure; the ``[-1, 1]`` sup and ``p(1)`` are reported alongside.
    """
    e = as_expr(p)
    l1 = e.l1
    try:
        sparse = expand(e, budget) if not isinstance(p, SparsePoly) else p
    except BudgetExceeded:
        sparse = None
    if sparse is not None:
        disc = normcalc.circle_sup_adaptive(sparse, width=min(tol, 1e-6))
        disc_method = "adaptive"
    else:
        disc = normcalc.structural_enclosure(e)
        disc_method = "structural"
    l1f = float(l1.value)
    J = max(1, math.ceil(math.log2(max(l1f, 1e-300) / 1e-12)) + 1)
    samples = [1.0, 0.0] + [2.0 ** -j for j in range(1, J + 1)]
    fs = max(abs(eval_at_real(e, x)) for x in samples)
    interval = normcalc.interval_sup(e, grid=4001)
    p1 = eval_at_angle(e, 0)
    problems = []
    if not (l1.exact and l1.value == 1):
        problems.append(f"l1 = {l1.value} (exact={l1.exact}), expected exactly 1")
    if not disc.lower - tol <= a <= disc.upper + tol:
        problems.append(f"disc enclosure [{disc.lower}, {disc.upper}] is not within {tol} of a={a}")
    if abs(fs - b) > tol:
        problems.append(f"transform sup {fs} is not within {tol} of b={b}")
    return {
        "l1": {"value": str(l1.value), "exact": l1.exact},
        "disc": {**disc.to_json(), "method": disc_method},
        "transform_sup": fs,
        "interval": interval.to_json(),
        "value_at_one": {"re": p1.real, "im": p1.imag, "abs": abs(p1)},
        "targets": {"a": a, "b": b, "tol": tol},
        "problems": problems,
        "ok": not problems,
    }


def cmd_verify(args) -> int:
    p = load_polynomial(args.poly_file)
    res = verify_polynomial(p, float(as_fraction(args.a)), float(as_fraction(args.b)),
                            args.tol, args.budget)
    res["run"] = _run_config(args, poly_file=args.poly_file)
    emit(dump_json(res), args.out)
    for msg in res["problems"]:
        _err(msg)
    return EXIT_OK if res["ok"] else EXIT_CHECK


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{x:.10g}"


def example_rows(width: float = 1e-6) -> list[dict]:
    """Reference measures with their triples and expected verdicts."""
    rows = []
    expected = {
        "bullet1": dict(tv=Fraction(1), r=Fraction(1, 2), fs=Fraction(1, 4), singular=False,
                        branches=(2,)),
        "bullet2": dict(tv=Fraction(1), r=Fraction(1), fs=Fraction(1, 8), singular=True,
                        branches=(1,)),
        "bullet3": dict(tv=Fraction(1), r=None, fs=Fraction(9, 128), singular=True,
                        branches=(1, 2)),
    }
    for name, exp in expected.items():
        mu = rieszmodel.preset(name)
        t = rieszmodel.triple(mu, width)
        branches = rieszmodel.trichotomy_check(mu, width).branches
        ok = t.tv == exp["tv"] and t.fs == exp["fs"] and t.singular_powers == exp["singular"]
        ok = ok and branches == exp["branches"]
        if exp["r"] is not None:
            ok = ok and t.r_exact == exp["r"]
            chain = t.tv > t.r_exact > t.fs if name == "bullet1" else True
        else:
            chain = t.tv > t.r_upper and t.r_lower > t.fs
        rows.append({"name": name, "triple": t, "branches": branches,
                     "chain": chain, "ok": bool(ok and chain)})
    return rows


def cmd_examples(args) -> int:
    buf = io.StringIO()
    failed = False
    for row in example_rows():
        t = row["triple"]
        r = _fmt(t.r_exact) if t.r_exact is not None else f"[{t.r_lower:.10f}, {t.r_upper:.10f}]"
        order = ""
        if row["name"] == "bullet3":
            order = "  ||mu|| > r > ||mu^||_inf" if row["chain"] else "  chain FAILED"
        powers = "singular" if t.singular_powers else "powers-not-singular"
        buf.write(f"{row['name']}: ||mu|| = {_fmt(t.tv)}, r = {r}, ||mu^||_inf = {_fmt(t.fs)}, "
                  f"{powers}, branches {list(row['branches'])}{order}  "
                  f"{'ok' if row['ok'] else 'FAIL'}\n")
        failed |= not row["ok"]
    emit(buf.getvalue(), args.out)
    return EXIT_CHECK if failed else EXIT_OK


def cmd_formula_check(args) -> int:
    if args.max_n < 1:
        raise InputError("--max-n must be >= 1")
    mu = parse_measure(args.poly, args.seed)
    res = rieszmodel.formula_check(mu, args.max_n, budget=args.budget)
    emit(res.to_csv(), args.out)
    verdict = "ok" if res.passed else "VIOLATION"
    _err(f"{verdict}: floor={'ok' if res.floor_ok else 'violated'}, "
         f"monotone={'ok' if res.monotone_ok else 'violated'}, "
         f"r in [{res.radius.lower:.10g}, {res.radius.upper:.10g}], gap {res.gap:.3g}"
         + (f", skipped n={res.skipped[0]}..{res.skipped[-1]} (budget)" if res.skipped else ""))
    return EXIT_OK if res.passed else EXIT_CHECK


def _floats(text: str) -> list[Fraction]:
    try:
        return [as_fraction(x) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad number list {text!r}") from exc


def sweep_grid(a_values=None, b_values=None) -> list[tuple[Fraction, Fraction]]:
    """``a`` in 0.2..1.0, ``b`` in ``{0.05} U {0.2, 0.4, ...} <= a`` unless overridden."""
    a_values = a_values or [Fraction(k, 5) for k in range(1, 6)]
    b_values = b_values or [Fraction(1, 20)] + [Fraction(k, 5) for k in range(1, 6)]
    return [(a, b) for a in a_values for b in b_values if b <= a]


SWEEP_COLUMNS = ["a", "b", "step", "k", "n", "alpha0", "disc_lower", "disc_upper",
                 "interval_sample", "interval_bound", "interval_certified", "abs_p1",
                 "l1_exact", "status"]


def cmd_sweep(args) -> int:
    grid = sweep_grid(_floats(args.a_values) if args.a_values else None,
                      _floats(args.b_values) if args.b_values else None)
    params = _params(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    failures = 0
    for a, b in grid:
        try:
            r = construct(a, b, params)
        except ForgeError as exc:
            failures += 1
            w.writerow([float(a), float(b)] + [""] * (len(SWEEP_COLUMNS) - 3) + [f"fail: {exc}"])
            _err(f"(a={float(a)}, b={float(b)}): {exc}")
            continue
        w.writerow([float(a), float(b), r.step, r.k, r.n if r.n is not None else "",
                    "" if r.alpha0 is None else repr(float(r.alpha0)),
                    repr(r.disc.lower), repr(r.disc.upper), repr(r.interval.value),
                    repr(r.interval_bound), r.interval_certified,
                    repr(abs(r.value_at_one)), r.l1.exact and r.l1.value == 1, "ok"])
    emit(buf.getvalue(), args.out)
    _err(f"{len(grid) - failures}/{len(grid)} targets certified")
    return EXIT_CHECK if failures else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rieszpoly", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, targets=True):
        if targets:
            p.add_argument("--a", required=True, help="disc sup-norm target")
            p.add_argument("--b", required=True, help="interval sup-norm target")
        p.add_argument("--tol", type=float, default=0.02)
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget", type=int, default=100_000, help="term budget for expansion")

    def build_opts(p):
        p.add_argument("--eta", type=float, default=0.5)
        p.add_argument("--grid", type=int, default=None, help="circle samples (multiple of 4)")

    p = sub.add_parser("construct", help="build a polynomial for targets (a, b)")
    common(p)
    build_opts(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="re-certify a stored polynomial against targets")
    p.add_argument("poly_file")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("examples", help="the three reference measures and their triples")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("formula-check", help="tabulate |q^n|_1^(1/n) against the spectral radius")
    p.add_argument("--poly", required=True,
                   help="preset (q0, unit, bullet1..3, haar), 'random', or inline like '0.5z-0.5z^2'")
    p.add_argument("--max-n", type=int, default=64)
    common(p, targets=False)
    p.set_defaults(func=cmd_formula_check, budget=1_000_000)

    p = sub.add_parser("sweep", help="construct over a grid of targets, CSV summary")
    p.add_argument("--a-values", help="comma-separated a values (default 0.2,...,1.0)")
    p.add_argument("--b-values", help="comma-separated b values (default 0.05,0.2,...,1.0)")
    common(p, targets=False)
    build_opts(p)
    p.set_defaults(func=cmd_sweep, tol=0.05)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ForgeError, PolyError, ValueError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
