"""Render per-iteration cost envelopes from run CSVs.

Reads one or more per-run trace CSVs from the learner CLI (the rows
where the exact cost of the iterate was logged), and draws the median
cost with a min/max band across runs.  The figure is saved as SVG and
PNG, and the envelope is exported as a CSV backing table.
"""

import argparse
import pathlib
import sys

from distlq_plots import (TableError, aggregate_runs, read_run_trace,
                          render_runs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="plot the cost envelope across learning runs")
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        type=pathlib.Path,
                        help="one or more run CSVs from the learner")
    parser.add_argument("--out", required=True, type=pathlib.Path,
                        help="output image path or stem (SVG and PNG are "
                             "both written)")
    parser.add_argument("--logy", action=argparse.BooleanOptionalAction,
                        default=False, help="logarithmic cost axis")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    try:
        traces = [read_run_trace(path) for path in args.inputs]
        table = aggregate_runs(traces)
    except TableError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    info = render_runs(table, args.out, logy=args.logy, title=args.title)
    print(f"{len(traces)} runs, {table.iters.size} envelope points")
    print(f"wrote {info.svg_path}, {info.png_path} "
          f"and backing table {info.table_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
