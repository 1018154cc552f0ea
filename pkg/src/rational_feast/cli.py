"""Command-line interface: ``rational-feast <subcommand> ...``.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error,
3 no convergence within ``--max-iter``.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .errors import (DomainError, FilterConstructionError, MatrixMarketError,
                     PoleProximityError, SingularShiftError)
from .feast import FeastConfig, SpectralInterval, feast_solve, resolve_threads
from .filters import build_filter, zolotarev_G_from_R
from .linalg import HermitianPencil, load_matrix_market
from .loadbalance import plan_partition

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _shape_value(text):
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number or 'inf': {text!r}") from None


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    return vals


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return vals


def _add_filter_flags(p, required=True):
    p.add_argument("--kind", choices=("gauss", "trapezoid", "zolotarev"), required=required)
    p.add_argument("--m", type=int, required=required, help="half degree (number of pole pairs)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--shape", type=_shape_value,
                   help="ellipse shape S (gauss/trapezoid, 'inf' allowed) or Zolotarev R")
    g.add_argument("--gap", type=float, help="Zolotarev gap parameter G; sets R from G")


def _filter_from_args(args):
    if args.gap is not None:
        if args.kind != "zolotarev":
            raise UsageError("--gap applies to --kind zolotarev only")
        shape = analysis.zolotarev_R_from_G(args.gap)
    elif args.shape is not None:
        shape = args.shape
    elif args.kind == "zolotarev":
        raise UsageError("zolotarev filters need --shape R or --gap G")
    else:
        shape = math.inf
    return build_filter(args.kind, args.m, shape)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rational-feast",
        description="Rational filters and FEAST subspace iteration for Hermitian pencils.")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: all cores; RATIONAL_FEAST_THREADS overrides)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter-design", help="build a filter and write its poles and weights as JSON")
    _add_filter_flags(p)
    p.add_argument("--out", type=Path, help="output JSON path (stdout when omitted)")

    p = sub.add_parser("factor-table", help="worst-case convergence factors, Table-1 layout")
    p.add_argument("--G", type=_float_list, default=list(analysis.TABLE_G),
                   help="comma-separated gap parameters")
    p.add_argument("--m", type=_int_list, default=list(analysis.TABLE_M),
                   help="comma-separated half degrees")
    p.add_argument("--out", type=Path, help="CSV path; a .json sidecar is written next to it")

    p = sub.add_parser("solve", help="run FEAST on a Matrix Market pencil")
    p.add_argument("--A", type=Path, required=True)
    p.add_argument("--B", type=Path, help="mass matrix (identity when omitted)")
    p.add_argument("--interval", type=float, nargs=2, metavar=("LMIN", "LMAX"), required=True)
    _add_filter_flags(p)
    p.add_argument("--n", type=int, required=True, help="subspace size")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path, help="report JSON path")
    p.add_argument("--trace", type=Path,
                   help="residual trace CSV (default: report path with .csv suffix)")

    p = sub.add_parser("plan", help="partition an interval among Zolotarev-filtered parts")
    p.add_argument("--interval", type=float, nargs=2, metavar=("LMIN", "LMAX"), required=True)
    p.add_argument("--parts", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--R", type=float)
    g.add_argument("--gap", type=float)
    p.add_argument("--counts", type=_int_list, required=True)
    p.add_argument("--breakpoints", type=_float_list)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--out", type=Path)
    return parser


def _emit(text, path):
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        path.write_text(text if text.endswith("\n") else text + "\n")


def cmd_filter_design(args):
    filt = _filter_from_args(args)
    _emit(filt.to_json(indent=1), args.out)
    r_pos, r_neg = (abs(filt.evaluate(x)) for x in (1.0, -1.0))
    line = (f"kind={filt.kind} m={filt.m} shape={filt.spec.shape:g} poles={len(filt.poles)} "
            f"|r(1)|={r_pos:.15g} |r(-1)|={r_neg:.15g}")
    if filt.kind == "zolotarev":
        lo, hi = analysis.zolotarev_error_bounds(filt.m, zolotarev_G_from_R(filt.spec.shape))
        line += f" E'_bounds=[{lo:.6e}, {hi:.6e}]"
    print(line, file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK


def cmd_factor_table(args):
    if not args.G or not args.m:
        raise UsageError("--G and --m need at least one value each")
    rows = analysis.table_one(args.G, args.m, workers=resolve_threads(args.threads))
    _emit(analysis.table_to_csv(rows), args.out)
    if args.out is not None:
        args.out.with_suffix(".json").write_text(analysis.table_to_json(rows) + "\n")
    return EXIT_OK


def cmd_solve(args):
    try:
        A = load_matrix_market(args.A)
        B = load_matrix_market(args.B) if args.B is not None else None
    except OSError as exc:
        raise UsageError(f"cannot read matrix: {exc}") from exc
    pencil = HermitianPencil(A, B)
    interval = SpectralInterval(*args.interval)
    filt = _filter_from_args(args)
    config = FeastConfig(filt, args.n, tol=args.tol, max_iter=args.max_iter, seed=args.seed,
                         threads=args.threads)
    report = feast_solve(pencil, interval, config)
    if args.report is not None:
        args.report.write_text(report.to_json(indent=1) + "\n")
        trace = args.trace or args.report.with_suffix(".csv")
        trace.write_text(report.to_csv())
    elif args.trace is not None:
        args.trace.write_text(report.to_csv())
    status = "converged" if report.converged else "not converged"
    print(f"{status} after {report.iterations} iterations; {len(report.eigenvalues)} "
          f"eigenvalues in [{interval.lambda_min:g}, {interval.lambda_max:g}]")
    for lam, res in zip(report.eigenvalues, report.residuals):
        print(f"  {lam:.16e}  residual {res:.3e}")
    return EXIT_OK if report.converged else EXIT_NOCONV


def cmd_plan(args):
    R = args.R if args.R is not None else analysis.zolotarev_R_from_G(args.gap)
    plan = plan_partition(SpectralInterval(*args.interval), args.parts, args.m, R, args.counts,
                          breakpoints=args.breakpoints, overlap=args.overlap)
    _emit(plan.to_json(indent=1), args.out)
    return EXIT_OK


COMMANDS = {
    "filter-design": cmd_filter_design,
    "factor-table": cmd_factor_table,
    "solve": cmd_solve,
    "plan": cmd_plan,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, MatrixMarketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularShiftError, PoleProximityError, FilterConstructionError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
