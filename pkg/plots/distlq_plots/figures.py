"""Figure rendering for sweep tables and run envelopes.

Each render function draws one figure, saves it as both SVG and PNG, and
writes the backing data table as a CSV next to the images.  The returned
RenderInfo records what was drawn (output paths, axis scales, censoring)
so tests can check the rendering contract without touching pixels.
"""

import pathlib
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .tables import (RUNS_TABLE_COLUMNS, SWEEP_COLUMNS, RunsTable,
                     SweepTable, runs_backing_rows, sweep_backing_rows,
                     write_backing_table)


@dataclass(frozen=True)
class RenderInfo:
    """What a render call produced: file paths and drawing choices."""

    svg_path: pathlib.Path
    png_path: pathlib.Path
    table_path: pathlib.Path
    yscale: str
    censored_levels: tuple


def output_paths(out) -> tuple:
    """Resolve --out into (svg, png, backing table) sibling paths.

    A trailing .svg or .png suffix is treated as the stem; anything else
    is used as the stem directly, so `--out figs/sweep` and
    `--out figs/sweep.png` produce the same three files.
    """
    out = pathlib.Path(out)
    stem = out.with_suffix("") if out.suffix in {".svg", ".png"} else out
    stem.parent.mkdir(parents=True, exist_ok=True)
    return (stem.with_suffix(".svg"), stem.with_suffix(".png"),
            stem.parent / (stem.name + "_table.csv"))


def render_sweep(table: SweepTable, out, logy: bool = True,
                 title: str = None) -> RenderInfo:
    """Sample complexity vs precision: measured mean and theoretical bound.

    One point per precision level.  Levels where some runs never reached
    the target are drawn as open markers; the measured curve also carries
    the min/max range across runs as error bars.
    """
    svg_path, png_path, table_path = output_paths(out)
    full = ~table.censored
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(table.epsilon, table.mean_steps,
                yerr=[table.mean_steps - table.min_steps,
                      table.max_steps - table.mean_steps],
                color="C0", linestyle="-", linewidth=1.2, capsize=3,
                label="measured mean first passage")
    ax.scatter(table.epsilon[full], table.mean_steps[full], color="C0",
               zorder=3)
    if table.censored.any():
        ax.scatter(table.epsilon[table.censored],
                   table.mean_steps[table.censored], facecolors="none",
                   edgecolors="C0", zorder=3,
                   label="some runs censored")
    ax.plot(table.epsilon, table.theoretical_T, "s--", color="C1",
            label="theoretical bound")
    ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("precision level")
    ax.set_ylabel("iterations to reach the level")
    ax.set_title(title or "sample complexity vs precision")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(svg_path)
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    write_backing_table(table_path, SWEEP_COLUMNS,
                        sweep_backing_rows(table))
    return RenderInfo(
        svg_path=svg_path, png_path=png_path, table_path=table_path,
        yscale="log" if logy else "linear",
        censored_levels=tuple(float(e)
                              for e in table.epsilon[table.censored]))


def render_runs(table: RunsTable, out, logy: bool = False,
                title: str = None) -> RenderInfo:
    """True-cost envelope over runs: median line and min/max band."""
    svg_path, png_path, table_path = output_paths(out)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.fill_between(table.iters, table.min_f, table.max_f, color="C0",
                    alpha=0.25, label="min/max over runs")
    ax.plot(table.iters, table.median_f, color="C0", linewidth=1.4,
            label="median over runs")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("exact cost of the iterate")
    ax.set_title(title or "learning curves across seeds")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(svg_path)
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    write_backing_table(table_path, RUNS_TABLE_COLUMNS,
                        runs_backing_rows(table))
    return RenderInfo(svg_path=svg_path, png_path=png_path,
                      table_path=table_path,
                      yscale="log" if logy else "linear",
                      censored_levels=())
