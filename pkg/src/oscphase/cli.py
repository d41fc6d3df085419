"""Command line interface: ``oscphase run | sweep | dump``.

Exit status is 0 when every row succeeded, 2 when some rows failed or had
no reference, and 1 on a hard failure (bad arguments or an exception
outside a row).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .benchmark import ExperimentSpec, run_problem, run_sweep, write_json
from .errors import OscPhaseError
from .levin import SOLVERS
from .problems import PROBLEM_IDS, make_problem
from .solve import solve

EXIT_OK = 0
EXIT_HARD = 1
EXIT_PARTIAL = 2


class _Parser(argparse.ArgumentParser):
    # usage errors are hard failures; exit status 2 is reserved for partial sweeps
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_HARD, f"{self.prog}: error: {message}\n")


def _add_solver_args(p):
    p.add_argument("--problem", choices=PROBLEM_IDS, default="airy")
    p.add_argument("--eps", type=float, default=1e-13)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--variant", choices=sorted(SOLVERS), default="rrqr")


def build_parser():
    parser = _Parser(prog="oscphase", description="Phase-function solver benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="solve one problem instance and measure it")
    _add_solver_args(run)
    run.add_argument("--lambda", dest="lam", type=float, required=True)
    run.add_argument("--repeats", type=int, default=3)
    run.add_argument("--out", type=Path, help="write the row as JSON")

    sweep = sub.add_parser("sweep", help="measure a grid of lambda values")
    _add_solver_args(sweep)
    sweep.add_argument("--lambda-min", type=float, default=1e1)
    sweep.add_argument("--lambda-max", type=float, default=1e6)
    sweep.add_argument("--count", type=int, default=100)
    sweep.add_argument("--spacing", choices=("log", "linear"), default="log")
    sweep.add_argument("--repeats", type=int, default=3)
    sweep.add_argument("--out", type=Path, required=True, help="CSV output path")
    sweep.add_argument("--json", type=Path, help="JSON output path (default: --out with .json)")
    sweep.add_argument("--quiet", action="store_true")

    dump = sub.add_parser("dump", help="write a phase, Levin table or full solution as JSON")
    _add_solver_args(dump)
    dump.add_argument("--lambda", dest="lam", type=float, default=1e3)
    dump.add_argument("--what", choices=("phase", "levin", "solution"), required=True)
    dump.add_argument("--out", type=Path, required=True)
    return parser


def _row_line(row):
    return (
        f"lambda={row.lam:.6g} err={row.max_abs_err:.3e} t_phase={row.time_phase:.4f}s "
        f"t_levin={row.time_levin:.4f}s t_total={row.time_total:.4f}s "
        f"n_phase={row.n_coeffs_phase} n_levin={row.n_coeffs_levin} status={row.status}"
    )


def _cmd_run(args):
    spec = ExperimentSpec(
        problem=args.problem,
        lambda_min=args.lam,
        lambda_max=args.lam,
        count=1,
        eps=args.eps,
        k=args.k,
        variant=args.variant,
        repeats=args.repeats,
    )
    row = run_problem(spec, args.lam)
    print(_row_line(row))
    if args.out:
        write_json([row], spec, args.out)
    return EXIT_OK if row.ok else EXIT_PARTIAL


def _cmd_sweep(args):
    spec = ExperimentSpec(
        problem=args.problem,
        lambda_min=args.lambda_min,
        lambda_max=args.lambda_max,
        count=args.count,
        spacing=args.spacing,
        eps=args.eps,
        k=args.k,
        variant=args.variant,
        repeats=args.repeats,
        csv_path=str(args.out),
        json_path=str(args.json or args.out.with_suffix(".json")),
    )
    progress = None if args.quiet else (lambda row: print(_row_line(row), flush=True))
    rows = run_sweep(spec, progress=progress)
    failed = sum(not r.ok for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} rows did not succeed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_dump(args):
    spec = ExperimentSpec(problem=args.problem, eps=args.eps, k=args.k, variant=args.variant)
    problem = make_problem(args.problem, args.lam)
    sol = solve(problem.q, problem.f, problem.interval, problem.bcs, spec.config(), args.variant)
    if args.what == "phase":
        payload = sol.phase.to_dict()
    elif args.what == "levin":
        payload = sol.table.to_dict()
    else:
        payload = sol.to_dict()
    payload = {"problem": args.problem, "lambda": args.lam, args.what: payload}
    args.out.write_text(json.dumps(payload) + "\n")
    print(f"wrote {args.what} for {args.problem} at lambda={args.lam:g} to {args.out}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "dump": _cmd_dump}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OscPhaseError, OSError) as exc:
        print(f"oscphase: {exc}", file=sys.stderr)
        return EXIT_HARD


if __name__ == "__main__":
    sys.exit(main())
