"""hdelm-plot <kind> <in.csv> <out.png>  -- figure files from solver CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdelm-plot",
        description="Render solver CSV output (runs / slice / rate) to "
                    "static figures")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("input_csv")
    parser.add_argument("out_path")
    parser.add_argument("--x", dest="x_column", default=None,
                        help="convergence x column (default: auto-detect "
                             "among M, n_bc, n_in)")
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = PlotJob(args.input_csv, args.kind, args.out_path,
                  x_column=args.x_column, xlabel=args.xlabel,
                  ylabel=args.ylabel)
    try:
        result = render(job)
    except SchemaError as exc:
        print(f"schema error in {args.input_csv}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.out_path}")
    if result.slope is not None:
        print(f"fitted log-log slope = {result.slope:.12g}")
        if result.header_slope is not None:
            print(f"producer slope      = {result.header_slope:.12g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
