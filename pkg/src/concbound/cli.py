"""Command-line front end: gen, solve, bounds, count, mc.

JSON goes to stdout (or --out); a short human-readable table goes to stderr.
Exit codes: 0 success, 2 input error, 3 solver failure, 4 oracle failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from fractions import Fraction

from . import kernels
from .basis_bounds import BasisError, bound_cor1, bound_thm1, cover_by_bases
from .gaussian_bounds import bound_thm2, optimize_gamma, partition_into_bases
from .lognum import sci_from_ln
from .maxent import SolveOptions, SolverError, solve_maxent
from .model import SpecError, dump_spec, gen_simplex, gen_transportation, load_spec_file
from .oracles import (
    BudgetExceeded,
    OracleError,
    count_exact,
    count_transportation,
    detect_transportation,
    estimate_count_mc,
)
from .poset_bounds import VacuousBoundError, bound_thm3, detect_cyclic

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_ORACLE = 0, 2, 3, 4
METHODS = ("thm1", "cor1", "thm2", "thm3")
MAX_LISTED = 256

log = logging.getLogger("concbound")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _margins(text: str) -> list[Fraction]:
    try:
        return [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad margin list {text!r}") from exc


def _gamma(text: str):
    if text == "auto":
        return "auto"
    try:
        g = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("gamma must be 'auto' or a positive number") from exc
    if not g > 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return g


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="concbound", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a spec document")
    gsub = gen.add_subparsers(dest="kind", required=True)
    g1 = gsub.add_parser("simplex")
    g1.add_argument("--n", type=int, required=True)
    g1.add_argument("--r", type=Fraction, required=True)
    g2 = gsub.add_parser("transport", aliases=["transportation"])
    g2.add_argument("--rows", type=_margins, required=True)
    g2.add_argument("--cols", type=_margins, required=True)
    for g in (g1, g2):
        g.add_argument("--out")

    def common(p, solve=True):
        p.add_argument("--spec", required=True)
        p.add_argument("--out")
        if solve:
            p.add_argument("--tol", type=float, default=1e-10, help="solver tolerance")

    common(sub.add_parser("solve", help="max-entropy solution only"))
    b = sub.add_parser("bounds", help="upper bounds on the number of integer points")
    common(b)
    b.add_argument("--method", choices=METHODS + ("all",), default="all")
    b.add_argument("--gamma", type=_gamma, default="auto")
    c = sub.add_parser("count", help="exact count")
    common(c, solve=False)
    c.add_argument("--budget", type=int, default=500_000_000)
    mc = sub.add_parser("mc", help="Monte Carlo estimate")
    common(mc)
    mc.add_argument("--trials", type=int, default=1_000_000)
    mc.add_argument("--seed", type=int, default=0)
    return ap


def _load(path):
    try:
        return load_spec_file(path)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc}") from exc
    except SpecError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc


def _solve(spec, tol):
    try:
        return solve_maxent(spec, SolveOptions(tol_solve=tol))
    except SolverError as exc:
        raise CliError(EXIT_SOLVER, f"solver failed: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc


def _solution_section(sol) -> dict:
    out = {
        "entropy": sol.entropy,
        "eH_sci": sci_from_ln(sol.entropy),
        "dual_value": sol.dual_value,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "z_min": float(sol.z.min()),
        "z_max": float(sol.z.max()),
    }
    if sol.n <= MAX_LISTED:
        out["lambda"] = sol.lam.tolist()
        out["z"] = sol.z.tolist()
    return out


def _spec_section(spec) -> dict:
    if spec.m * spec.n <= MAX_LISTED * 4:
        return spec.to_dict()
    return {"name": spec.name, "m": spec.m, "n": spec.n}


def _run_bounds(spec, sol, method, gamma) -> tuple[list[dict], bool]:
    wanted = METHODS if method == "all" else (method,)
    out, ok = [], True
    for name in wanted:
        try:
            if name == "thm1":
                out.append(bound_thm1(sol, spec).to_dict())
            elif name == "cor1":
                out.append(bound_cor1(sol, cover_by_bases(spec)).to_dict())
            elif name == "thm2":
                part = partition_into_bases(spec, 2.0 * sol.q / (1.0 - sol.q) ** 2)
                if gamma == "auto":
                    out.append(optimize_gamma(sol, part)[1].to_dict())
                else:
                    out.append(bound_thm2(sol, part, gamma).to_dict())
            elif name == "thm3":
                try:
                    cyc = detect_cyclic(spec)
                except SpecError as exc:
                    if method == "all":
                        out.append({"method": "thm3", "skipped": True, "notes": [str(exc)]})
                        continue
                    raise
                out.extend(r.to_dict() for r in bound_thm3(sol, cyc))
        except (SpecError, BasisError, VacuousBoundError, ValueError) as exc:
            ok = False
            out.append({"method": name, "error": str(exc), "notes": [f"error: {exc}"]})
    return out, ok


def _count(spec, budget) -> dict:
    try:
        return count_exact(spec, budget=budget).to_dict()
    except BudgetExceeded as exc:
        margins = detect_transportation(spec)
        if margins is None or min(len(margins[0]), len(margins[1])) > 4:
            raise CliError(EXIT_ORACLE, f"exact count failed: {exc}") from exc
        res = count_transportation(*margins).to_dict()
        res["notes"] = [f"generic DP stopped ({exc}); counted with the transportation oracle"]
        return res
    except OracleError as exc:
        raise CliError(EXIT_ORACLE, str(exc)) from exc


def _table(report: dict) -> str:
    lines = []
    if "solution" in report:
        s = report["solution"]
        lines.append(f"H = {s['entropy']:.6f} nats   e^H = {s['eH_sci']}   ({s['iterations']} Newton steps)")
    for b in report.get("bounds", []):
        if "ln_bound" in b:
            lines.append(f"{b['method']:<16} {b['bound_sci']:>12}   ln = {b['ln_bound']:.4f}")
        else:
            lines.append(f"{b['method']:<16} {'-':>12}   {b['notes'][0] if b.get('notes') else ''}")
    if "exact" in report:
        lines.append(f"{'exact':<16} {report['exact']['count_sci']:>12}   {report['exact']['count']}")
    if "mc" in report:
        m = report["mc"]
        if m["ln_estimate"] is not None:
            lines.append(
                f"{'mc':<16} {m['estimate_sci']:>12}   ln = {m['ln_estimate']:.4f} +- {m['ln_stderr']:.4f}"
                f"   ({m['hits']}/{m['trials']} hits)"
            )
        else:
            lines.append(f"{'mc':<16} {'-':>12}   {m['notes'][0]}")
    return "\n".join(lines)


def _emit(doc: dict | str, out: str | None) -> None:
    text = doc if isinstance(doc, str) else json.dumps(doc, sort_keys=True, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def run(args) -> int:
    if args.command == "gen":
        try:
            if args.kind == "simplex":
                spec = gen_simplex(args.n, args.r)
            else:
                spec = gen_transportation(args.rows, args.cols)
        except SpecError as exc:
            raise CliError(EXIT_INPUT, str(exc)) from exc
        _emit(dump_spec(spec), args.out)
        return EXIT_OK

    spec = _load(args.spec)
    report: dict = {"spec": _spec_section(spec), "timings": {}, "backend": kernels.BACKEND}
    code = EXIT_OK
    if args.command == "count":
        t0 = time.perf_counter()
        report["exact"] = _count(spec, args.budget)
        report["timings"]["count"] = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        sol = _solve(spec, args.tol)
        report["timings"]["solve"] = time.perf_counter() - t0
        report["solution"] = _solution_section(sol)
        if args.command == "bounds":
            t0 = time.perf_counter()
            report["bounds"], ok = _run_bounds(spec, sol, args.method, args.gamma)
            report["timings"]["bounds"] = time.perf_counter() - t0
            if not ok:
                code = EXIT_INPUT
        elif args.command == "mc":
            t0 = time.perf_counter()
            try:
                report["mc"] = estimate_count_mc(sol, spec, args.trials, args.seed).to_dict()
            except (OracleError, ValueError) as exc:
                raise CliError(EXIT_ORACLE, str(exc)) from exc
            report["timings"]["mc"] = time.perf_counter() - t0
    _emit(report, args.out)
    print(_table(report), file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return run(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
