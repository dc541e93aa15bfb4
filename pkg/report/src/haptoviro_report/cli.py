"""Command-line front end.

Exit codes: 0 success, 1 unusable input or failed render, 2 usage error.
"""

import argparse
import os
import sys

from .errors import ReportError
from .plots import plot_decay, plot_fields
from .summary import summarize


def _overlay(text):
    try:
        name, rate = text.split("=", 1)
        return name.strip(), float(rate)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected name=rate, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="haptoviro-report",
        description="Figures and summaries from haptoviro output files.")
    sub = parser.add_subparsers(dest="command", required=True)

    decay = sub.add_parser("decay", help="semilog decay figure from a "
                                         "diagnostics CSV")
    decay.add_argument("csv")
    decay.add_argument("--quantity", action="append", required=True,
                       help="CSV column or derived monitor; repeatable")
    decay.add_argument("--overlay", action="append", type=_overlay,
                       default=[], metavar="NAME=RATE",
                       help="dashed reference line of slope -RATE")
    decay.add_argument("--out", required=True)

    fields = sub.add_parser("fields", help="2x2 heatmap panel from a "
                                           "snapshot prefix")
    fields.add_argument("snapshot", help="path prefix of the "
                                         ".bin/.json snapshot family")
    fields.add_argument("--out", required=True)

    summ = sub.add_parser("summary", help="markdown report for a run or "
                                          "sweep directory")
    summ.add_argument("run_dir")
    summ.add_argument("--out", help="default: <run_dir>/report.md")
    summ.add_argument("--no-figures", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        if args.command == "decay":
            fits = plot_decay(args.csv, tuple(args.quantity),
                              dict(args.overlay), args.out)
            for q, rate in fits.items():
                printed = f"{rate:.6g}" if rate is not None else "no fit"
                print(f"{q}: fitted rate {printed}")
            print(f"wrote {args.out}")
        elif args.command == "fields":
            plot_fields(args.snapshot, args.out)
            print(f"wrote {args.out}")
        else:
            text = summarize(args.run_dir, figures=not args.no_figures)
            out = args.out or os.path.join(args.run_dir, "report.md")
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"wrote {out}")
    except ReportError as exc:
        print(f"haptoviro-report: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"haptoviro-report: {exc}", file=sys.stderr)
        return 1
    return 0
