"""Command-line front end.

Each subcommand loads its JSON inputs, calls the same handler the HTTP
service uses, prints the reply document to stdout, and optionally writes
it (plus any CSV side products) under --out.  Exit codes: 0 success,
2 validation or convergence failure (including a failed check), 1 for
anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import WorkbenchError
from .serialize import dumps, fiber_report_csv, read_json, write_json
from .service import handlers


def _add_common(p: argparse.ArgumentParser, level: bool = True):
    if level:
        p.add_argument("--level", type=int, default=1,
                       help="curvature level k (positive integer)")
    p.add_argument("--tol", type=float, default=None,
                   help="main residual tolerance for this command")
    p.add_argument("--seed", type=int, default=0, help="RNG seed where used")
    p.add_argument("--out", default=None,
                   help="directory for the reply document and CSV side files")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sbs-workbench",
        description="curvature-level loop certificates, transports and scans")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-axioms", help="run the named residual suite")
    _add_common(p)
    p.add_argument("--fd-step", type=float, default=1e-4)

    p = sub.add_parser("bs-check", help="holonomy defect and area of a loop")
    _add_common(p)
    p.add_argument("--loop", required=True, help="loop JSON file")
    p.add_argument("--tol-bs", type=float, default=1e-6)

    p = sub.add_parser("sbs-residual", help="certify a (loop, section) pair")
    _add_common(p)
    p.add_argument("--pair", help="pair JSON file")
    p.add_argument("--loop", help="loop JSON file (with --section)")
    p.add_argument("--section", help="section JSON file (with --loop)")
    p.add_argument("--tol-bs", type=float, default=1e-6)

    p = sub.add_parser("find-sbs", help="search for an SBS loop near a seed")
    _add_common(p)
    p.add_argument("--section", required=True, help="section JSON file")
    p.add_argument("--seed-loop", required=True, help="seed loop JSON file")
    p.add_argument("--tol-bs", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--n-samples", type=int, default=256)

    p = sub.add_parser("flow", help="transport a pair along a Hamiltonian flow")
    _add_common(p)
    p.add_argument("--pair", required=True, help="pair JSON file")
    p.add_argument("--hamiltonian", required=True,
                   help="polynomial in X, Y, Z, e.g. 'Z' or 'X^2 - Y*Z'")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=500)

    p = sub.add_parser("lift", help="lift tangent data over a loop")
    _add_common(p)
    p.add_argument("--loop", required=True, help="loop JSON file")
    p.add_argument("--delta", required=True,
                   help='JSON file {"f0": [[a,b,re,im]...], "g0": [...]}')

    p = sub.add_parser("euler-solve",
                       help="invert the degree-weighted operator on a series")
    _add_common(p, level=False)
    p.add_argument("--series", required=True, help="series JSON file")
    p.add_argument("--sigma", type=int, default=1, choices=(1, -1))

    p = sub.add_parser("enumerate-fibers", help="integer-area latitude scan")
    _add_common(p)
    p.add_argument("--include-poles", action="store_true")
    p.add_argument("--mu-coeffs", default=None,
                   help="comma-separated reparametrization coefficients, low first")
    p.add_argument("--c-min", type=float, default=None)
    p.add_argument("--c-max", type=float, default=None)
    p.add_argument("--n-levels", type=int, default=512)

    p = sub.add_parser("export-plot", help="CSV traces for external plotting")
    _add_common(p)
    p.add_argument("--loop", help="loop JSON file -> theta,x,y,Z trace")
    p.add_argument("--expression", help="chart scan of a polynomial -> x,y,value")
    p.add_argument("--half-width", type=float, default=2.0)
    p.add_argument("--n", type=int, default=41)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return ap


def _tolerated(args, default: float) -> float:
    return default if args.tol is None else args.tol


def _dispatch(args) -> tuple[dict, int]:
    """Build the request dict, run the handler, choose the exit code."""
    cmd = args.command

    if cmd == "verify-axioms":
        doc = handlers.verify_axioms_run({
            "level": args.level, "tol": _tolerated(args, 1e-5),
            "fd_step": args.fd_step, "seed": args.seed})
        return doc, 0 if doc["all_pass"] else 2

    if cmd == "bs-check":
        doc = handlers.bs_check({
            "level": args.level, "loop": read_json(args.loop),
            "tol_bs": args.tol_bs})
        return doc, 0 if doc["is_bs"] else 2

    if cmd == "sbs-residual":
        if args.pair is None and (args.loop is None or args.section is None):
            raise ValueError("need --pair or both --loop and --section")
        req = {"level": args.level, "tol": _tolerated(args, 1e-6),
               "tol_bs": args.tol_bs}
        if args.pair is not None:
            req["pair"] = read_json(args.pair)
        else:
            req["loop"] = read_json(args.loop)
            req["section"] = read_json(args.section)
        doc = handlers.sbs_residual_run(req)
        return doc, 0 if doc["is_sbs"] else 2

    if cmd == "find-sbs":
        doc = handlers.find_sbs_run({
            "level": args.level, "section": read_json(args.section),
            "seed_loop": read_json(args.seed_loop),
            "tol": _tolerated(args, 1e-6), "tol_bs": args.tol_bs,
            "max_iter": args.max_iter, "n_samples": args.n_samples})
        return doc, 0 if doc["found"] else 2

    if cmd == "flow":
        doc = handlers.flow_run({
            "level": args.level, "pair": read_json(args.pair),
            "hamiltonian": args.hamiltonian, "t": args.t, "steps": args.steps})
        return doc, 0

    if cmd == "lift":
        delta = read_json(args.delta)
        doc = handlers.lift_run({
            "level": args.level, "loop": read_json(args.loop),
            "f0": delta["f0"], "g0": delta["g0"]})
        return doc, 0

    if cmd == "euler-solve":
        doc = handlers.euler_solve_run({
            "series": read_json(args.series), "sigma": args.sigma})
        return doc, 0

    if cmd == "enumerate-fibers":
        mu = None
        if args.mu_coeffs or args.c_min is not None or args.c_max is not None:
            mu = {"c_min": args.c_min, "c_max": args.c_max}
            if args.mu_coeffs:
                mu["phi_coeffs"] = [float(c) for c in args.mu_coeffs.split(",")]
        doc = handlers.enumerate_fibers_run({
            "level": args.level, "mu": mu,
            "include_poles": args.include_poles, "n_levels": args.n_levels})
        return doc, 0

    if cmd == "export-plot":
        if args.loop is None and args.expression is None:
            raise ValueError("need --loop or --expression")
        if args.loop is not None:
            doc = handlers.loop_trace_run({"loop": read_json(args.loop)})
        else:
            doc = handlers.field_scan_run({
                "expression": args.expression,
                "half_width": args.half_width, "n": args.n})
        return doc, 0

    raise ValueError(f"unknown command {cmd!r}")


def _write_artifacts(args, doc: dict):
    out = args.out
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, f"{args.command}.json"), doc)
    if args.command == "export-plot":
        name = "loop_trace.csv" if args.loop else "field_scan.csv"
        with open(os.path.join(out, name), "w", newline="") as fh:
            fh.write(doc["csv"])
    if args.command == "enumerate-fibers":
        # rebuild entry rows from the reply so file and stdout agree exactly
        from .quantize import BsFiberEntry, BsFiberReport
        from .serialize import loop_from_doc
        entries = [BsFiberEntry(
            level=e["level"],
            r2=float("nan") if e["r2"] is None else e["r2"],
            area=e["area"], defect=e["defect"],
            loop=None if e["loop"] is None else loop_from_doc(e["loop"]))
            for e in doc["entries"]]
        fiber_report_csv(BsFiberReport(tuple(entries), doc["count"]),
                         os.path.join(out, "fibers.csv"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app
        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        doc, code = _dispatch(args)
    except (WorkbenchError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        sys.stdout.write(dumps({"schema": 1, "error": {
            "type": type(exc).__name__, "message": str(exc)}}))
        return 2

    sys.stdout.write(dumps(doc))
    if args.out:
        _write_artifacts(args, doc)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
