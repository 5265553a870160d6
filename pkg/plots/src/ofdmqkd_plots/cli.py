"""`ofdmqkd-plots render --csv sweep.csv --figure 10 --out fig10.svg`"""

from __future__ import annotations

import argparse
import sys

from .render import EmptySeries, FigureSpec, SchemaMismatch, render


def build_parser():
    parser = argparse.ArgumentParser(prog="ofdmqkd-plots")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a sweep CSV")
    p.add_argument("--csv", required=True, help="sweep CSV from the ofdmqkd CLI")
    p.add_argument("--figure", required=True, type=int, choices=[7, 8, 9, 10])
    p.add_argument("--out", required=True, help="output image (.svg or .png)")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        result = render(FigureSpec(input_csv=args.csv, figure_id=args.figure, output_path=args.out))
    except (SchemaMismatch, EmptySeries) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.output_path} ({len(result.series)} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
