"""Command-line interface: ``nygrad {solve,bench,profile,check-grad}``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import bench
from .model import Objective, SolverConfig, gradient_check
from .problems import REGISTRY, get_problem

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2

SOLVER_CHOICES = ("any", "ny", "sd", "bb1", "bb2", "abbmin", "mpsg", "sdc",
                  "sl-yv", "sl-hm", "sl-fmin", "sl-fmax")


class InputError(Exception):
    pass


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(T=args.T, epsilon=args.eps, alpha_min=args.alpha_min,
                            alpha_max=args.alpha_max, M=args.M, delta=args.delta,
                            max_iter=args.max_iter, seed=args.seed)
    except ValueError as e:
        raise InputError(str(e)) from None


def _add_config_args(p):
    d = SolverConfig()
    p.add_argument("--T", type=int, default=d.T, help="cycle length (default %(default)s)")
    p.add_argument("--eps", type=float, default=d.epsilon, help="relative gradient tolerance")
    p.add_argument("--alpha-min", type=float, default=d.alpha_min)
    p.add_argument("--alpha-max", type=float, default=d.alpha_max)
    p.add_argument("--M", type=int, default=d.M, help="nonmonotone memory length")
    p.add_argument("--delta", type=float, default=d.delta, help="sufficient decrease")
    p.add_argument("--max-iter", type=int, default=d.max_iter)
    p.add_argument("--seed", type=int, default=d.seed)


def cmd_solve(args) -> int:
    cfg = _config(args)
    spec = bench.ProblemSpec(args.problem, args.n, args.kappa)
    if not bench.compatible(args.solver, spec):
        raise InputError(f"solver {args.solver!r} needs a quadratic problem")
    try:
        row = bench.run_cell(args.solver, spec, cfg, cfg.seed)
    except ValueError as e:
        raise InputError(str(e)) from None
    if args.out:
        bench.write_rows([row], args.out)
    print(f"{row.problem} n={row.n} solver={row.solver}: {row.status} after "
          f"{row.iterations} iterations, |g|={row.final_gnorm:.3e}, {row.time_s:.3f}s")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.suite != "paper":
        raise InputError(f"unknown suite {args.suite!r}")
    cfg = _config(args)
    specs = bench.standard_suite(args.sizes, args.problems)
    rows = bench.run_matrix(args.solvers, specs, cfg, args.reps)
    bench.write_rows(rows, args.out)
    print(bench.summarize(rows))
    ls = bench.avg_ls_counts(rows)
    for solver, summary in ls.items():
        print(f"avg extra line-search evaluations per iteration, {solver}: {summary.mean:.4f}")
    return EXIT_OK


def cmd_profile(args) -> int:
    try:
        rows = bench.read_rows(args.input)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise InputError(f"cannot read {args.input}: {e}") from None
    try:
        curves = bench.performance_profile(rows, args.metric)
    except ValueError as e:
        raise InputError(str(e)) from None
    text = bench.profile_table(curves)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    for c in curves:
        print(f"{c.solver}: solved fraction {c.solved_fraction:.3f}")
    return EXIT_OK


def cmd_check_grad(args) -> int:
    try:
        obj = get_problem(args.problem, args.n)
    except ValueError as e:
        raise InputError(str(e)) from None
    if not isinstance(obj, Objective):
        obj = obj.as_objective()
    rng = np.random.default_rng(args.seed)
    points = [obj.x0] + [obj.x0 + 0.1 * rng.standard_normal(obj.n) for _ in range(args.points)]
    worst = max(gradient_check(obj, x, args.h) for x in points)
    verdict = "ok" if worst <= args.tol else "FAILED"
    print(f"{args.problem} n={args.n}: max relative gradient error {worst:.3e} ({verdict})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nygrad", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem")
    p.add_argument("--problem", required=True, choices=sorted(REGISTRY))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--solver", default="any", choices=SOLVER_CHOICES)
    p.add_argument("--kappa", type=float, default=1e6, help="condition number for problems 2-3")
    p.add_argument("--out", help="write the result row (.csv or .json)")
    _add_config_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", default="paper")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", type=int, nargs="+", default=list(bench.SUITE_SIZES))
    p.add_argument("--problems", nargs="+", default=list(bench.SUITE_PROBLEMS),
                   choices=sorted(REGISTRY))
    p.add_argument("--solvers", nargs="+", default=list(bench.SUITE_SOLVERS),
                   choices=SOLVER_CHOICES)
    _add_config_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="performance profile from bench output")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--metric", default="time", choices=["time", "iterations", "fevals", "gevals"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("check-grad", help="finite-difference gradient check")
    p.add_argument("--problem", required=True, choices=sorted(REGISTRY))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--points", type=int, default=3, help="random points besides x0")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_grad)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001 - any other failure is internal
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
