"""Render sample complexity vs precision from a sweep CSV.

Reads the learner CLI's sweep table (one row per precision level) and
draws two curves: the measured mean first-passage iteration count and
the theoretical iteration bound.  Levels where some runs never reached
the target appear as open markers.  The figure is saved as SVG and PNG,
and the plotted numbers are exported as a CSV backing table.
"""

import argparse
import pathlib
import sys

from distlq_plots import TableError, read_sweep_table, render_sweep


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="plot measured vs theoretical sample complexity")
    parser.add_argument("--in", dest="input", required=True,
                        type=pathlib.Path, help="sweep CSV from the learner")
    parser.add_argument("--out", required=True, type=pathlib.Path,
                        help="output image path or stem (SVG and PNG are "
                             "both written)")
    parser.add_argument("--logy", action=argparse.BooleanOptionalAction,
                        default=True, help="logarithmic iteration axis")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    try:
        table = read_sweep_table(args.input)
    except TableError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    info = render_sweep(table, args.out, logy=args.logy, title=args.title)
    print(f"{table.n_levels} precision levels "
          f"({len(info.censored_levels)} censored, drawn as open markers)")
    print(f"wrote {info.svg_path}, {info.png_path} "
          f"and backing table {info.table_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
