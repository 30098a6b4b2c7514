"""Benchmark command-line interface: `krec run --config <file> [overrides]`."""

import argparse
import sys

from .driver import build_spec, emit_csv, read_config, run_sequence, summarize
from .errors import KrecError


def _build_parser():
    parser = argparse.ArgumentParser(prog="krec",
                                     description="Recycled and sketched Krylov "
                                                 "matrix-function benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a problem sequence")
    run.add_argument("--config", help="config file (key = value lines)")
    run.add_argument("--function", choices=["invsqrt", "inv", "exp"])
    run.add_argument("--tau", type=float, help="time step for exp")
    run.add_argument("--method",
                     choices=["fom", "sfom", "rfom", "srfom", "srfom-stab"])
    run.add_argument("--m", type=int, help="fixed cycle length")
    run.add_argument("--adaptive", action="store_true",
                     help="grow the cycle length until the stop rule fires")
    run.add_argument("--reltol", type=float)
    run.add_argument("--d", type=int, help="adaptive growth increment")
    run.add_argument("--m-max", type=int, dest="m_max")
    run.add_argument("--k", type=int, help="recycling subspace dimension")
    run.add_argument("--s", type=int, help="sketch dimension")
    run.add_argument("--t", type=int, help="Arnoldi truncation length")
    run.add_argument("--svdtol", type=float)
    run.add_argument("--num-problems", type=int, dest="num_problems")
    run.add_argument("--seed", type=int)
    run.add_argument("--matrix", help="'gen:name[:k=v,...]' or path to a .mtx file")
    run.add_argument("--shift", help="spectral shift 're' or 're,im'")
    run.add_argument("--perturbation", type=float,
                     help="Gaussian perturbation scale between problems")
    run.add_argument("--rhs", choices=["fresh", "chain"])
    run.add_argument("--inexact-srr", action="store_true", dest="inexact_srr")
    run.add_argument("--stop-rule", choices=["estimator", "oracle"],
                     dest="stop_rule")
    run.add_argument("--epsilon-mode", choices=["fixed", "tracked"],
                     dest="epsilon_mode")
    run.add_argument("--epsilon-value", type=float, dest="epsilon_value")
    run.add_argument("--oracle-cap", type=int, dest="oracle_cap")
    run.add_argument("--timing-reps", type=int, dest="timing_reps")
    run.add_argument("--out", help="CSV output path")
    return parser


_FLAG_KEYS = ("adaptive", "inexact_srr")


def _merge_options(args):
    options = read_config(args.config) if args.config else {}
    for key in ("function", "tau", "method", "m", "reltol", "d", "m_max", "k",
                "s", "t", "svdtol", "num_problems", "seed", "matrix", "shift",
                "perturbation", "rhs", "stop_rule", "epsilon_mode",
                "epsilon_value", "oracle_cap", "timing_reps"):
        val = getattr(args, key, None)
        if val is not None:
            options[key] = str(val)
    for key in _FLAG_KEYS:
        if getattr(args, key, False):
            options[key] = "true"
    if "method" in options:
        options["method"] = options["method"].replace("-", "_")
    return options


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        spec = build_spec(_merge_options(args))
        records = run_sequence(spec)
    except KrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for rec in records:
        relerr = "n/a" if rec.relerr is None else f"{rec.relerr:.3e}"
        status = "ok" if rec.converged else "not converged"
        if rec.error:
            status = rec.error
        print(f"problem {rec.problem_index}: m={rec.m_used} relerr={relerr} "
              f"matvecs={rec.matvecs} sketches={rec.sketches} [{status}]")
    print(summarize(records))
    if args.out:
        emit_csv(records, args.out)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
