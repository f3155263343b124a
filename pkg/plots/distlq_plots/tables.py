"""Readers and aggregators for the learner's CSV outputs.

Two file kinds are consumed, both written by the learning CLI: sweep
tables (one row per precision level with measured and theoretical step
counts) and per-run traces (one row per logged iteration).  Everything a
figure shows is computed here and exported as a plain CSV backing table,
so figure content is testable without comparing pixels.
"""

import csv
import pathlib
from dataclasses import dataclass

import numpy as np

SWEEP_COLUMNS = ("epsilon", "mean_steps", "min_steps", "max_steps",
                 "successes", "runs", "theoretical_T")
RUN_COLUMNS = ("iter", "f_hat", "z_norm", "f_true")
RUNS_TABLE_COLUMNS = ("iter", "median_f", "min_f", "max_f", "n_runs")


class TableError(Exception):
    """Raised when an input CSV does not match its documented schema."""


@dataclass(frozen=True)
class SweepTable:
    """Parsed sweep CSV: aligned arrays, one entry per precision level."""

    epsilon: np.ndarray
    mean_steps: np.ndarray
    min_steps: np.ndarray
    max_steps: np.ndarray
    successes: np.ndarray
    runs: np.ndarray
    theoretical_T: np.ndarray

    @property
    def n_levels(self) -> int:
        return self.epsilon.size

    @property
    def censored(self) -> np.ndarray:
        """Levels where at least one run never reached the target."""
        return self.successes < self.runs


@dataclass(frozen=True)
class RunTrace:
    """True-cost trace of one run: only iterations with a logged value."""

    path: str
    iters: np.ndarray
    f_true: np.ndarray


@dataclass(frozen=True)
class RunsTable:
    """Per-iteration envelope over runs: median line and min/max band."""

    iters: np.ndarray
    median_f: np.ndarray
    min_f: np.ndarray
    max_f: np.ndarray
    n_runs: np.ndarray


def _data_lines(path: pathlib.Path):
    """Yield (1-based line number, parsed fields) for non-comment lines."""
    try:
        text = path.read_text()
    except OSError as err:
        raise TableError(f"cannot read {path}: {err}") from err
    for number, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        yield number, [field.strip() for field in row]


def _parse_float(field: str, path: pathlib.Path, number: int,
                 column: str) -> float:
    try:
        return float(field)
    except ValueError as err:
        raise TableError(
            f"{path}, row {number}: column '{column}' has non-numeric "
            f"value '{field}'") from err


def read_sweep_table(path) -> SweepTable:
    """Parse a sweep CSV, validating the documented header and each row."""
    path = pathlib.Path(path)
    lines = iter(_data_lines(path))
    try:
        number, header = next(lines)
    except StopIteration:
        raise TableError(f"{path}: no header row found") from None
    if tuple(header) != SWEEP_COLUMNS:
        raise TableError(
            f"{path}, row {number}: header {header} does not match the "
            f"sweep schema {list(SWEEP_COLUMNS)}")
    columns = {name: [] for name in SWEEP_COLUMNS}
    for number, row in lines:
        if len(row) != len(SWEEP_COLUMNS):
            raise TableError(
                f"{path}, row {number}: expected {len(SWEEP_COLUMNS)} "
                f"fields, got {len(row)}")
        for name, field in zip(SWEEP_COLUMNS, row):
            columns[name].append(_parse_float(field, path, number, name))
    if not columns["epsilon"]:
        raise TableError(f"{path}: no precision levels (the table has a "
                         "header but no data rows)")
    return SweepTable(
        epsilon=np.array(columns["epsilon"]),
        mean_steps=np.array(columns["mean_steps"]),
        min_steps=np.array(columns["min_steps"]),
        max_steps=np.array(columns["max_steps"]),
        successes=np.array(columns["successes"], dtype=int),
        runs=np.array(columns["runs"], dtype=int),
        theoretical_T=np.array(columns["theoretical_T"]),
    )


def read_run_trace(path) -> RunTrace:
    """Parse one run CSV and keep the rows with a logged true cost.

    The true-cost column is optional in the run schema, but the envelope
    figure cannot be drawn without it, so its absence is an error here.
    """
    path = pathlib.Path(path)
    lines = iter(_data_lines(path))
    try:
        number, header = next(lines)
    except StopIteration:
        raise TableError(f"{path}: no header row found") from None
    if tuple(header) == RUN_COLUMNS[:3]:
        raise TableError(
            f"{path}: no f_true column; rerun the learner with true-cost "
            "diagnostics enabled (a positive log_true_cost_every) so the "
            "trace records the exact cost")
    if tuple(header) != RUN_COLUMNS:
        raise TableError(
            f"{path}, row {number}: header {header} does not match the "
            f"run schema {list(RUN_COLUMNS)}")
    iters = []
    values = []
    for number, row in lines:
        if len(row) != len(RUN_COLUMNS):
            raise TableError(
                f"{path}, row {number}: expected {len(RUN_COLUMNS)} "
                f"fields, got {len(row)}")
        if row[3] == "":
            continue
        iters.append(_parse_float(row[0], path, number, "iter"))
        values.append(_parse_float(row[3], path, number, "f_true"))
    if not iters:
        raise TableError(
            f"{path}: the f_true column is empty; rerun the learner with "
            "true-cost diagnostics enabled (a positive "
            "log_true_cost_every)")
    return RunTrace(path=str(path), iters=np.array(iters, dtype=int),
                    f_true=np.array(values))


def aggregate_runs(traces) -> RunsTable:
    """Median and min/max of the true cost across runs, per iteration.

    The grid is the union of logged iterations; at each point the
    statistics run over the traces that logged it, so runs stopped early
    by first passage still contribute up to their horizon.
    """
    if not traces:
        raise TableError("no run traces to aggregate")
    grid = np.unique(np.concatenate([trace.iters for trace in traces]))
    stack = np.full((len(traces), grid.size), np.nan)
    for row, trace in enumerate(traces):
        stack[row, np.searchsorted(grid, trace.iters)] = trace.f_true
    count = np.sum(~np.isnan(stack), axis=0)
    return RunsTable(iters=grid,
                     median_f=np.nanmedian(stack, axis=0),
                     min_f=np.nanmin(stack, axis=0),
                     max_f=np.nanmax(stack, axis=0),
                     n_runs=count.astype(int))


def write_backing_table(path, header, rows) -> None:
    """Write a figure's backing table as a plain CSV with a header row."""
    path = pathlib.Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def sweep_backing_rows(table: SweepTable):
    """Backing rows for the sweep figure: the input aggregates verbatim."""
    return [
        [repr(float(table.epsilon[k])), repr(float(table.mean_steps[k])),
         repr(float(table.min_steps[k])), repr(float(table.max_steps[k])),
         int(table.successes[k]), int(table.runs[k]),
         repr(float(table.theoretical_T[k]))]
        for k in range(table.n_levels)
    ]


def runs_backing_rows(table: RunsTable):
    """Backing rows for the envelope figure."""
    return [
        [int(table.iters[k]), repr(float(table.median_f[k])),
         repr(float(table.min_f[k])), repr(float(table.max_f[k])),
         int(table.n_runs[k])]
        for k in range(table.iters.size)
    ]
