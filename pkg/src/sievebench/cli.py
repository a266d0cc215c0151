"""Command-line front end.

Exit status: 0 success, 1 malformed input, 2 precondition/domain failure
(including a failed search whose guaranteeing premise did not hold),
3 resource ceiling, 4 a guaranteed object was not found although its
premise held.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Any, Callable

from . import friable, primereduce, primeset, sumsolve
from ._exact import to_fraction
from .errors import (CounterexampleError, DomainError, ResourceError, ValidationError,
                     WorkbenchError)
from .latticegeom import hull as geomhull
from .latticegeom import lemmas
from .report import csv_dumps, dumps

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_RESOURCE, EXIT_COUNTEREXAMPLE = 0, 1, 2, 3, 4

PSI_COLUMNS = ("x", "psi", "ratio", "mertens", "quotient")
ALPHA_COLUMNS = ("k", "count", "alpha_rational", "alpha_float")
PI_COLUMNS = ("k", "count", "pi")
RHO_COLUMNS = ("u", "rho")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2
        raise ValidationError(message)


def load_json(text: str) -> Any:
    """Inline JSON, or the path of a file holding JSON."""
    s = text.strip()
    if not s.startswith(("{", "[")) and os.path.exists(s):
        with open(s, encoding="utf-8") as fh:
            s = fh.read()
    try:
        return json.loads(s)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc


def _rational(text: str) -> Fraction:
    return to_fraction(text)


def _int_list(text: str) -> list[int]:
    doc = load_json(text) if text.strip().startswith("[") else [t for t in text.split(",") if t]
    try:
        return [int(v) for v in doc]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"expected a list of integers, got {text!r}") from exc


def _rational_list(text: str) -> list[Fraction]:
    doc = load_json(text) if text.strip().startswith("[") else text.split(",")
    if not isinstance(doc, list):
        doc = [doc]
    return [to_fraction(v if not isinstance(v, float) else repr(v)) for v in doc]


def _points(text: str) -> list:
    doc = load_json(text)
    if not isinstance(doc, list) or not doc:
        raise ValidationError("points must be a non-empty JSON array")
    return [tuple(p) if isinstance(p, list) else (p,) for p in doc]


def _prime_set(text: str) -> primeset.PrimeSet:
    return primeset.PrimeSet.from_dict(load_json(text))


def _int_set(text: str) -> sumsolve.WeightedIntegerSet:
    return sumsolve.WeightedIntegerSet.from_dict(load_json(text))


# -- subcommand handlers: return (json payload, csv rows, csv columns) --------


def _psi(a):
    pset = _prime_set(a.primes)
    rows = [{"x": x, "psi": friable.psi_count(x, pset, n_jobs=a.threads)} for x in a.x]
    return (rows[0] if len(rows) == 1 else rows), rows, ("x", "psi")


def _ratio(a):
    pset = _prime_set(a.primes)
    rows = [friable.theorem_ratio_report(x, pset, n_jobs=a.threads).to_dict() for x in a.x]
    return (rows[0] if len(rows) == 1 else rows), rows, PSI_COLUMNS


def _condition(a):
    pset = _prime_set(a.primes)
    w = primeset.scan_theorem_condition(pset, a.epsilon, ratio=a.ratio,
                                        denominator=a.denominator, grid=a.grid)
    out = {"witness": None if w is None else {
        "u": w.u, "v": w.v, "epsilon": w.epsilon, "sum_value": w.sum_value,
        "sum_float": w.sum_float, "sum_exact": w.sum_exact}}
    return out, [out["witness"] or {}], ("u", "v", "epsilon", "sum_value", "sum_float", "sum_exact")


def _rho(a):
    rows = [{"u": u, "rho": friable.dickman_rho(u)} for u in a.u]
    return (rows[0] if len(rows) == 1 else rows), rows, RHO_COLUMNS


def _bleichenbacher(a):
    A = _int_set(a.set)
    w = sumsolve.solve_bleichenbacher(A, a.u, force=a.force)
    out = w.to_dict()
    if a.u is not None:
        chk = sumsolve.check_bleichenbacher_precondition(A, a.u)
        out["precondition"] = {"holds": chk.holds, "margin": chk.margin}
    return out, [out], ("k", "parts", "total", "method")


def _alpha_rows(report):
    return [r.to_dict() for r in report.rows]


def _hyp_a(a):
    rep = sumsolve.hypothesis_a_check(_int_set(a.set), a.u, a.v, a.lam)
    return rep.to_dict(), _alpha_rows(rep), ALPHA_COLUMNS


def _hyp_a_star(a):
    rep = sumsolve.hypothesis_a_star_check(_int_set(a.set), a.u, a.lam)
    return rep.to_dict(), _alpha_rows(rep), ALPHA_COLUMNS


def _dyadic(a):
    out = sumsolve.dyadic_localization(_int_set(a.set), a.u, a.lam).to_dict()
    return out, [out], ("j", "band", "band_sum", "threshold", "premise_holds")


def _doubling(a):
    out = sumsolve.popular_doubling(_int_set(a.set), a.lam, a.u).to_dict()
    cols = ("i0", "E_size", "bad_pairs", "D_size", "sumset_size",
            "ecomplement_bound_holds", "large_D_branch", "premise_holds")
    return out, [out], cols


def _localize(a):
    pset = _prime_set(a.primes)
    x = a.x if a.x is not None else pset.limit
    grid = primereduce.build_rho_grid(x, a.u, a.v, a.lam)
    out = primereduce.localize(pset, grid).to_dict()
    return out, [out], ("j0", "J0", "cells", "verified", "premise_holds", "consequence_holds")


def _hyp_p(a):
    pset = _prime_set(a.primes)
    rep = primereduce.hyp_p_check(pset, a.x, a.u, a.v, a.lam, denominator=a.denominator)
    return rep.to_dict(), [r.to_dict() for r in rep.rows], PI_COLUMNS


def _hull(a):
    out = geomhull.convex_hull(_points(a.points)).to_dict()
    return out, [out], ("d", "dim", "volume", "vertices")


def _box(text):
    return lemmas.LatticeBox(tuple(_int_list(text)))


def _inscribe(a):
    out = lemmas.inscribe_box(_points(a.points), _box(a.box)).to_dict()
    return out, [out], ("x0", "beta", "lp_beta", "certified")


def _shell(a):
    h = geomhull.convex_hull(_points(a.points))
    count = lemmas.boundary_shell_count(h, _rational_list(a.x0), a.gamma)
    out = {"count": count, "volume": h.volume, "gamma": a.gamma}
    return out, [out], ("count", "volume", "gamma")


def _regularize(a):
    out = lemmas.epsilon_regularize(_points(a.points), _box(a.box), a.eps).to_dict()
    return out, [out], ("removed_count", "threshold", "tiles", "extra_passes", "epsilon")


def _sf(a):
    out = lemmas.shapley_folkman_decompose(_points(a.points), a.k, _rational_list(a.x)).to_dict()
    return out, [out], ("residual", "parts", "method", "certified")


def _popular_sf(a):
    x0 = _int_list(a.x0) if a.x0 is not None else None
    out = lemmas.popular_sf_density(_points(a.points), _box(a.box), a.gamma, a.eps, a.k,
                                    _rational_list(a.x), x0=x0, beta=a.beta).to_dict()
    return out, [out], ("count", "delta_measured", "reference_delta", "hypotheses_hold")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sievebench", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker cap")
    common.add_argument("--seed", type=int, default=None,
                        help="accepted for interface stability; no subcommand draws random numbers")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, fn: Callable, help_: str):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(handler=fn)
        return p

    p = add("psi", _psi, "exact count of integers <= x with prime factors in the set")
    p.add_argument("--x", type=int, nargs="+", required=True)
    p.add_argument("--primes", required=True)

    p = add("ratio", _ratio, "Psi(x)/x against the Mertens product of the complement")
    p.add_argument("--x", type=int, nargs="+", required=True)
    p.add_argument("--primes", required=True)

    p = add("condition", _condition, "scan u for the reciprocal-sum condition")
    p.add_argument("--primes", required=True)
    p.add_argument("--epsilon", type=_rational, required=True)
    p.add_argument("--ratio", type=float, default=1.05)
    p.add_argument("--denominator", type=_rational, default=Fraction(1000))
    p.add_argument("--grid", type=float, nargs="+")

    p = add("rho", _rho, "Dickman's function")
    p.add_argument("--u", type=float, nargs="+", required=True)

    p = add("bleichenbacher", _bleichenbacher, "k-term sum landing in (N-k, N]")
    p.add_argument("--set", required=True)
    p.add_argument("--u", type=_rational)
    p.add_argument("--force", action="store_true")

    p = add("hyp-a", _hyp_a, "alpha_k table for k in [u, v]")
    for flag in ("--set", "--u", "--v", "--lam"):
        p.add_argument(flag, required=True, type=None if flag == "--set" else _rational)

    p = add("hyp-a-star", _hyp_a_star, "alpha_k table for k in [u, u/lam]")
    for flag in ("--set", "--u", "--lam"):
        p.add_argument(flag, required=True, type=None if flag == "--set" else _rational)

    p = add("dyadic", _dyadic, "first band carrying its share of 1/a-mass")
    for flag in ("--set", "--u", "--lam"):
        p.add_argument(flag, required=True, type=None if flag == "--set" else _rational)

    p = add("doubling", _doubling, "popular-sum decomposition of A + A")
    for flag in ("--set", "--u", "--lam"):
        p.add_argument(flag, required=True, type=None if flag == "--set" else _rational)

    p = add("localize", _localize, "logarithmic-grid localization of a prime set")
    p.add_argument("--primes", required=True)
    p.add_argument("--x", type=int, help="defaults to the set's limit")
    for flag in ("--u", "--v", "--lam"):
        p.add_argument(flag, required=True, type=_rational)

    p = add("hyp-p", _hyp_p, "ordered prime k-tuples with product in [x/2, x]")
    p.add_argument("--primes", required=True)
    p.add_argument("--x", type=int, required=True)
    for flag in ("--u", "--v", "--lam"):
        p.add_argument(flag, required=True, type=_rational)
    p.add_argument("--denominator", type=_rational, default=Fraction(999))

    p = add("hull", _hull, "exact convex hull of lattice points")
    p.add_argument("--points", required=True)

    p = add("inscribe", _inscribe, "largest box translate inside a hull")
    p.add_argument("--points", required=True)
    p.add_argument("--box", required=True, help="half widths, e.g. 5,5 or [5,5]")

    p = add("shell", _shell, "lattice points between C and (1-gamma)C + gamma x0")
    p.add_argument("--points", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--gamma", type=_rational, required=True)

    p = add("regularize", _regularize, "epsilon-regular subset")
    p.add_argument("--points", required=True)
    p.add_argument("--box", required=True)
    p.add_argument("--eps", type=_rational, required=True)

    p = add("sf", _sf, "Shapley-Folkman decomposition of x in k conv(B)")
    p.add_argument("--points", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", required=True)

    p = add("popular-sf", _popular_sf, "count a in A with x - a in k C'")
    p.add_argument("--points", required=True)
    p.add_argument("--box", required=True)
    p.add_argument("--gamma", type=_rational, required=True)
    p.add_argument("--eps", type=_rational, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--x0")
    p.add_argument("--beta", type=_rational)
    return parser


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ValidationError):
        return EXIT_INPUT
    if isinstance(exc, CounterexampleError):
        return EXIT_COUNTEREXAMPLE if exc.premise_holds else EXIT_DOMAIN
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, ResourceError):
        return EXIT_RESOURCE
    return EXIT_INPUT


def _error_payload(exc: BaseException, code: int) -> str:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ResourceError):
        doc["estimated_cost"] = exc.estimated_cost
    if isinstance(exc, CounterexampleError):
        doc["premise_holds"] = exc.premise_holds
    return dumps(doc)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ValidationError("--threads must be at least 1")
        payload, rows, columns = args.handler(args)
        text = dumps(payload) if args.format == "json" else csv_dumps(rows, columns)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return EXIT_OK
    except (WorkbenchError, ValueError, TypeError, OSError) as exc:
        if isinstance(exc, (ValueError, TypeError, OSError)) and not isinstance(exc, WorkbenchError):
            exc = ValidationError(str(exc))
        code = exit_code(exc)
        stderr.write(_error_payload(exc, code))
        return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
