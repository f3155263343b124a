"""Shared helpers for the plotting tests: synthetic CSVs in the learner's
documented schemas, plus path setup so the package imports without an
install."""

import pathlib
import sys

import pytest

PLOTS_ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(PLOTS_ROOT) not in sys.path:
    sys.path.insert(0, str(PLOTS_ROOT))

SWEEP_HEADER = ("epsilon,mean_steps,min_steps,max_steps,successes,runs,"
                "theoretical_T")


def write_sweep_csv(path, rows, comment="# config_hash=abc123 seeds=0-9"):
    """Write a sweep CSV from (eps, mean, lo, hi, succ, runs, T) tuples."""
    lines = [comment, SWEEP_HEADER]
    lines += [",".join(str(field) for field in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_run_csv(path, rows, seed=0, with_f_true=True):
    """Write a run CSV from (iter, f_hat, z_norm, f_true-or-None) tuples."""
    header = "iter,f_hat,z_norm" + (",f_true" if with_f_true else "")
    lines = [f"# config_hash=abc123 seed={seed}", header]
    for row in rows:
        fields = [str(row[0]), str(row[1]), str(row[2])]
        if with_f_true:
            fields.append("" if row[3] is None else str(row[3]))
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def seven_level_rows():
    """A plausible 7-level sweep with one censored level."""
    rows = []
    eps = 0.2
    for k in range(7):
        mean = 300.0 * (3.0 ** k)
        rows.append((eps, mean, 0.6 * mean, 1.5 * mean,
                     10 if k < 6 else 7, 10, 1e11 * (2.0 ** k)))
        eps *= 0.68
    return rows
