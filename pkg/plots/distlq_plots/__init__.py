"""Figures for the model-free LQ learner, built from its CSV outputs.

The package reads only the learner CLI's documented CSV files (sweep
tables and per-run traces), aggregates them, and renders two figures:
sample complexity versus precision, and per-iteration cost envelopes.
Every figure's content is exported as a CSV backing table so results are
testable without pixel comparisons.
"""

from .figures import RenderInfo, output_paths, render_runs, render_sweep
from .tables import (RUN_COLUMNS, RUNS_TABLE_COLUMNS, SWEEP_COLUMNS,
                     RunsTable, RunTrace, SweepTable, TableError,
                     aggregate_runs, read_run_trace, read_sweep_table,
                     runs_backing_rows, sweep_backing_rows,
                     write_backing_table)

__version__ = "0.1.0"

__all__ = [
    "RUN_COLUMNS", "RUNS_TABLE_COLUMNS", "SWEEP_COLUMNS", "RenderInfo",
    "RunTrace", "RunsTable", "SweepTable", "TableError", "aggregate_runs",
    "output_paths", "read_run_trace", "read_sweep_table", "render_runs",
    "render_sweep", "runs_backing_rows", "sweep_backing_rows",
    "write_backing_table",
]
