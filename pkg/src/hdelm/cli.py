"""Command-line interface: solve, sweep, select-rm, slice, rate-study.

Configs are JSON files matching RunConfig's fields; --seed and --out
override the file. Exit codes: 0 success, 2 invalid configuration,
3 solver non-convergence (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

from .geometry import UnsupportedConfigurationError
from .harness import (ConfigError, RunConfig, append_runs_csv, run_rate_study,
                      run_select_rm, run_solve, run_sweep, write_run_slice,
                      write_runs_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3


def _ints(text):
    return [int(v) for v in text.split(",") if v]


def _floats(text):
    return [float(v) for v in text.split(",") if v]


def _load_config(args) -> RunConfig:
    with open(args.config) as fh:
        data = json.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    return RunConfig.from_dict(data)


def _report_line(report):
    return (f"{report.config.problem} d={report.config.d} "
            f"method={report.config.method} M={report.config.width} "
            f"r_m={report.config.r_m:g} -> e_inf={report.e_inf:.3e} "
            f"e_rms={report.e_rms:.3e} residual={report.residual_norm:.3e} "
            f"time={report.time_total_s:.2f}s")


def cmd_solve(args) -> int:
    config = _load_config(args)
    report = run_solve(config, keep_model=False)
    print(_report_line(report))
    if args.out:
        append_runs_csv(args.out, report)
        print(f"wrote {args.out}")
    if not report.converged:
        print("solver did not converge", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    reports = run_sweep(config, args.axis, _ints(args.values), out=args.out)
    for report in reports:
        print(_report_line(report))
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK if all(r.converged for r in reports) \
        else EXIT_NO_CONVERGENCE


def cmd_select_rm(args) -> int:
    config = _load_config(args)
    selection = run_select_rm(config, _floats(args.candidates))
    for report in selection.reports:
        print(_report_line(report))
    print(f"selected r_m0 = {selection.r_m0:g} (metric: {selection.metric})")
    if args.out:
        write_runs_csv(args.out, selection.reports,
                       header_lines=(f"r_m selection, winner "
                                     f"{selection.r_m0:g}",))
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_slice(args) -> int:
    config = _load_config(args)
    report = run_solve(config, keep_model=True)
    print(_report_line(report))
    dims = tuple(_ints(args.plane))
    if len(dims) != 2:
        raise ConfigError("--plane needs two comma-separated axis indices")
    fixed = {}
    if args.fixed:
        for part in args.fixed.split(","):
            axis, value = part.split("=")
            fixed[int(axis)] = float(value)
    write_run_slice(report, dims, args.q, args.out, fixed=fixed or None)
    print(f"wrote {args.out}")
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_rate_study(args) -> int:
    result = run_rate_study(args.d, _ints(args.widths), args.samples,
                            _ints(args.seeds), r_m=args.r_m, out=args.out)
    for n, mean, std in zip(result.widths, result.mse_mean, result.mse_std):
        print(f"n={n:5d}  mse_mean={mean:.6e}  mse_std={std:.6e}")
    print(f"fitted log-log slope = {result.slope:.6f}")
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdelm",
        description="Random-feature least-squares solvers for "
                    "high-dimensional PDEs on box domains")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", required=True,
                       help="JSON file with RunConfig fields")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p = sub.add_parser("solve", help="run one configuration")
    add_config(p)
    p.add_argument("--out", default=None, help="append a runs.csv row here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep width, n_bc or n_in")
    add_config(p)
    p.add_argument("--axis", required=True, choices=("width", "n_bc", "n_in"))
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    p.add_argument("--out", default=None, help="write the sweep CSV here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("select-rm", help="pick r_m0 from candidates")
    add_config(p)
    p.add_argument("--candidates", required=True,
                   help="comma-separated r_m values")
    p.add_argument("--out", default=None, help="write the table CSV here")
    p.set_defaults(func=cmd_select_rm)

    p = sub.add_parser("slice", help="train, then write a cross-section CSV")
    add_config(p)
    p.add_argument("--plane", required=True,
                   help="two comma-separated axis indices, e.g. 0,1")
    p.add_argument("--q", type=int, default=800, help="grid points per axis")
    p.add_argument("--fixed", default=None,
                   help="pinned coordinates, e.g. 2=0.0,3=0.5 "
                        "(default: mid-domain)")
    p.add_argument("--out", required=True, help="slice CSV path")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("rate-study",
                       help="approximation-rate study vs feature count")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--widths", required=True,
                   help="comma-separated feature counts")
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--r-m", dest="r_m", type=float, default=1.0)
    p.add_argument("--out", default=None, help="write rate.csv here")
    p.set_defaults(func=cmd_rate_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnsupportedConfigurationError, ValueError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
