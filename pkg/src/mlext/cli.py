"""Command-line front end.

Every command prints a JSON report with sorted keys. Exit codes: 0 success,
2 parse or input error, 3 enumeration cap exceeded, 4 search failure,
5 audit failure (including multilinearity violations).
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from fractions import Fraction

from . import __version__
from .counterexample import build_instance, diagonal_biaffine_extendable, global_extension_exists, scan
from .errors import (AuditFailed, CapExceeded, MlextError, MultilinearityViolation, ParseError,
                     PreconditionFailed, SearchFailure, SignatureMismatch)
from .extend import PartialMultilinearMap, check_multilinear, qr_extend
from .formats import (format_json, format_map, format_point, parse_map, parse_point, parse_tensor,
                      parse_variety, parse_vector, read_text, write_atomic)
from .forms import MultilinearMapH, cap_limit, enumeration_cap, form_record
from .paths import connectivity, diameter_bound
from .pipeline import StageFailure, run_pipeline
from .rank import analytic_rank, bias, matrix_rank, partition_rank_bounds
from .variety import Variety, varsize_bound

EXIT_OK, EXIT_PARSE, EXIT_CAP, EXIT_SEARCH, EXIT_AUDIT = 0, 2, 3, 4, 5


def _frac(x: Fraction) -> str:
    return str(x)


def _input(path: str) -> tuple[str, dict]:
    try:
        text = read_text(path)
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", 1, 1, path) from None
    return text, {"path": path, "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()}


def _check_report(mc) -> dict:
    out = {"ok": mc.ok}
    if not mc.ok:
        out.update({"kind": mc.kind, "x": format_point(mc.x), "axis": mc.axis + 1,
                    "y": None if mc.y is None else format_point(mc.y), "scalar": mc.scalar})
    return out


def cmd_rank(args) -> tuple[dict, list]:
    text, digest = _input(args.tensor)
    form = parse_tensor(text, args.tensor)
    b = bias(form)
    ar = analytic_rank(form)
    pr = partition_rank_bounds(form, args.exact_prank_budget)
    res = {
        "bias": _frac(b.value),
        "analytic_rank": {"exact": None if ar.exact is None else _frac(ar.exact),
                          "approx": None if ar.approx == float("inf") else round(ar.approx, 12)},
        "partition_rank": {"lower": pr.lower, "upper": pr.upper, "exact": pr.exact,
                           "method": pr.method, "budget_exhausted": pr.budget_exhausted,
                           "witness": [[form_record(a), form_record(c)] for a, c in pr.witness.terms],
                           "witness_verified": pr.witness.verify()},
    }
    if form.arity == 2:
        res["matrix_rank"] = matrix_rank(form)
    return res, [digest]


def cmd_variety(args) -> tuple[dict, list]:
    text, digest = _input(args.variety)
    v = parse_variety(text, args.variety)
    digests = [digest]
    n = v.count()
    bound = varsize_bound(v)
    res = {"codimension": v.codimension, "space_size": v.sig.size, "count": n,
           "size_bound": _frac(bound), "size_bound_holds": n >= bound}
    if args.diameter:
        if args.rho:
            rtext, rdig = _input(args.rho)
            rho = parse_tensor(rtext, args.rho)
            if rho.sig != v.sig:
                raise SignatureMismatch("--rho tensor lives on another signature")
            betas = list(v.constraints)
            digests.append(rdig)
        else:
            full = [i for i, c in enumerate(v.constraints) if c.arity == v.sig.k]
            if not full:
                raise PreconditionFailed("--diameter needs --rho or a constraint on all axes")
            rho = v.constraints[full[-1]]
            betas = [c for i, c in enumerate(v.constraints) if i != full[-1]]
        rep = connectivity(v.sig, betas, rho)
        bound_d = diameter_bound(v.sig.k)
        res["nonvanishing_set"] = {
            "size": rep.size, "components": rep.components, "connected": rep.connected,
            "diameter": rep.diameter, "diameter_bound": bound_d,
            "within_bound": None if rep.diameter is None else rep.diameter <= bound_d,
        }
    return res, digests


def _load_phi(args, domain: Variety, digests: list):
    if args.map:
        text, dig = _input(args.map)
        sig, h, table = parse_map(text, args.map)
        if sig != domain.sig:
            raise SignatureMismatch("map file and variety file disagree on the signature")
        digests.append(dig)
        return PartialMultilinearMap(domain, h, table)
    comps = []
    for path in args.restrict_global:
        text, dig = _input(path)
        comps.append(parse_tensor(text, path))
        digests.append(dig)
    big = MultilinearMapH(domain.sig, comps)
    return PartialMultilinearMap.restrict(domain, big)


def cmd_extend(args) -> tuple[dict, list]:
    text, digest = _input(args.variety)
    B = parse_variety(text, args.variety)
    digests = [digest]
    if args.z is not None:
        if not args.rho:
            raise PreconditionFailed("--z needs --rho")
        rtext, rdig = _input(args.rho)
        rho = parse_tensor(rtext, args.rho)
        digests.append(rdig)
        b0 = B.with_constraints(rho)
        phi = _load_phi(args, b0, digests)
        phi.validate_domain()
        mc = check_multilinear(phi)
        if not mc:
            raise MultilinearityViolation("input map is not multilinear", {"check": _check_report(mc)})
        z = parse_point(args.z, B.sig, "--z")
        h0 = parse_vector(args.h0 or " ".join("0" * phi.codim_h), phi.codim_h, B.sig.p, "h0", "--h0")
        ext = qr_extend(B, rho, phi, z, h0, seed=args.seed)
        cert_text = format_map(B.sig, phi.codim_h, ext.map.table)
        audit = {k: (list(v) if isinstance(v, tuple) else v) for k, v in ext.audit.items()}
        res = {"mode": "qr_extend", "z": format_point(z), "h0": list(h0), "audit": audit,
               "domain_points": len(phi.table), "extended_points": len(ext.map.table)}
    else:
        phi = _load_phi(args, B, digests)
        phi.validate_domain()
        mc = check_multilinear(phi)
        if not mc:
            raise MultilinearityViolation("input map is not multilinear", {"check": _check_report(mc)})
        cert = run_pipeline(phi, args.threshold, args.seed)
        cert_text = cert.to_json()
        d = cert.to_dict()
        res = {"mode": "pipeline", "status": d["status"], "failure": d["failure"],
               "agreement": None if d["agreement"] is None else
               {k: d["agreement"][k]
                for k in ("codimension", "points", "domain_points", "proper", "verified")},
               "final_map": d["final_map"], "stages": len(d["stages"])}
        if args.certificate:
            write_atomic(args.certificate, cert_text)
            res["certificate"] = args.certificate
        if cert.failure is not None:
            raise cert.failure
        return res, digests
    if args.certificate:
        write_atomic(args.certificate, cert_text)
        res["certificate"] = args.certificate
    return res, digests


def _verdict(inst) -> dict:
    g = global_extension_exists(inst)
    d = diagonal_biaffine_extendable(inst)
    return {
        "f": list(inst.f_table),
        "bilinear_on_B": check_multilinear(inst.phi).ok,
        "extendable": g.exists,
        "witness": None if g.witness is None else [form_record(c) for c in g.witness.components],
        "rank_certificate": {"rank_A": list(g.rank_a), "rank_augmented": list(g.rank_aug)},
        "diagonal_biaffine_extendable": d.extendable,
    }


def cmd_counterexample(args) -> tuple[dict, list]:
    p = args.p
    if p > 13:
        raise PreconditionFailed("counterexample scans are limited to p <= 13")
    if args.scan:
        r = scan(p)
        res = {"p": p, "tables": r.total, "extendable_count": len(r.extendable),
               "non_extendable_count": r.non_extendable_count,
               "extendable": [list(f) for f in r.extendable],
               "diagonal_non_extendable_count": r.diagonal_non_extendable,
               "bilinear_for_every_f": r.all_bilinear}
        if args.pipeline and r.non_extendable:
            res["pipeline"] = _pipeline_summary(build_instance(p, r.non_extendable[0]))
        return res, []
    f = parse_vector(args.f, p - 1, p, "f table", "--f")
    inst = build_instance(p, f)
    res = {"p": p, "classes": {str(k): v for k, v in sorted(inst.classes.items(), key=str)},
           "verdict": _verdict(inst)}
    if args.pipeline:
        res["pipeline"] = _pipeline_summary(inst)
    return res, []


def _pipeline_summary(inst) -> dict:
    cert = run_pipeline(inst.phi)
    d = cert.to_dict()
    return {"f": list(inst.f_table), "status": d["status"], "agreement": d["agreement"]}


def build_parser() -> argparse.ArgumentParser:
    def shared(suppress: bool) -> argparse.ArgumentParser:
        # subcommand copies must not overwrite values given before the subcommand
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        sp = argparse.ArgumentParser(add_help=False)
        sp.add_argument("--cap", type=int, default=d(None),
                        help="maximum number of enumerated points (default 2^24, env MLEXT_CAP)")
        sp.add_argument("--out", default=d(None),
                        help="write the report here (atomically) instead of stdout")
        sp.add_argument("--timing", action="store_true", default=d(False),
                        help="add wall-clock timing to the report")
        return sp

    common = shared(True)

    ap = argparse.ArgumentParser(prog="mlext", description=__doc__.splitlines()[0],
                                 parents=[shared(False)])
    ap.add_argument("--version", action="version", version=f"mlext {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rank", parents=[common], help="bias, analytic rank and partition-rank bounds")
    r.add_argument("tensor")
    r.add_argument("--exact-prank-budget", type=int, default=200_000)
    r.set_defaults(func=cmd_rank)

    v = sub.add_parser("variety", parents=[common], help="point count, size bound, connectivity")
    v.add_argument("variety")
    v.add_argument("--diameter", action="store_true",
                   help="connectivity and diameter of {constraints = 0, rho != 0}")
    v.add_argument("--rho", default=None, help="tensor file for rho (default: last full-axes constraint)")
    v.set_defaults(func=cmd_variety)

    e = sub.add_parser("extend", parents=[common], help="extend a multilinear map on a variety")
    e.add_argument("variety")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", default=None, help="map file with the values of phi")
    src.add_argument("--restrict-global", nargs="+", default=None, metavar="TENSOR",
                     help="phi = restriction of the global map with these components")
    e.add_argument("--rho", default=None, help="with --z: extend from B n {rho = 0} to B")
    e.add_argument("--z", default=None, help="anchor point, e.g. '1 0 ; 1 0'")
    e.add_argument("--h0", default=None, help="value at the anchor (default 0)")
    e.add_argument("--seed", type=int, default=0, help="BFS tie-break seed")
    e.add_argument("--threshold", type=int, default=1, help="high-bias threshold exponent t")
    e.add_argument("--certificate", default=None, help="write the certificate or extended map here")
    e.set_defaults(func=cmd_extend)

    c = sub.add_parser("counterexample", parents=[common], help="the hyperbola counterexample")
    c.add_argument("--p", type=int, required=True)
    mode = c.add_mutually_exclusive_group(required=True)
    mode.add_argument("--scan", action="store_true", help="classify every f table")
    mode.add_argument("--f", default=None, help="values f(1), ..., f(p-1)")
    c.add_argument("--pipeline", action="store_true",
                   help="also run the extension pipeline (on the first non-extendable f for --scan)")
    c.set_defaults(func=cmd_counterexample)
    return ap


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageFailure):
        exc = exc.cause
    if isinstance(exc, (ParseError, PreconditionFailed, SignatureMismatch)):
        return EXIT_PARSE
    if isinstance(exc, CapExceeded):
        return EXIT_CAP
    if isinstance(exc, SearchFailure):
        return EXIT_SEARCH
    if isinstance(exc, AuditFailed):
        return EXIT_AUDIT
    return 1


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.cap is not None:
            with cap_limit(args.cap):
                cap = enumeration_cap()
                res, digests = args.func(args)
        else:
            cap = enumeration_cap()
            res, digests = args.func(args)
    except MlextError as exc:
        code = _exit_code(exc)
        report = {"command": ["mlext"] + argv, "error": {"type": type(exc).__name__, "message": str(exc),
                                                         "exit_code": code}}
        details = getattr(exc, "details", None)
        if details and "check" in details and isinstance(details["check"], dict):
            report["error"]["counterexample"] = details["check"]
        elif details and "check" in details:
            report["error"]["counterexample"] = _check_report(details["check"])
        sys.stderr.write(f"mlext: error: {exc}\n")
        _emit(format_json(report), args.out)
        return code
    report = {"command": ["mlext"] + argv, "inputs": digests, "cap": cap, "results": res}
    if args.timing:
        report["timing_seconds"] = round(time.perf_counter() - start, 6)
    _emit(format_json(report), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
