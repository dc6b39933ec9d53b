"""
Result files: the summary CSV, plot-ready data files and static PNG plots.

All numbers are written with format(x, ".6g"), which does not depend on the
locale, and every file uses "\\n" line endings so equal runs give equal bytes.
"""

import csv
import os
from typing import List, Optional, Sequence

import numpy as np

from src.harness.report_table import COLUMNS, ReportTable
from src.simulation.sampled_series import SampledSeries

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

BIAS_DATA_FILE = "bias_data.csv"
TRACE_FILE = "estimate_traces.csv"
PATH_DATA_FILE = "sample_path.csv"
BIAS_PLOT_FILE = "bias_boxplot.png"
PATH_PLOT_FILE = "sample_path.png"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6g")
    return str(value)


def _write_rows(path: str, header: Sequence[str], rows):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def emit_csv(table: ReportTable, path: str):
    """Summary table; rows ordered by estimator, then component index."""
    _write_rows(path, COLUMNS, table.rows[COLUMNS].itertuples(index=False, name=None))


def emit_traces(table: ReportTable, path: str):
    traces = table.traces
    header = ["replication", "estimator", "component", "value", "failed"]
    _write_rows(path, header, traces[header].itertuples(index=False, name=None))


def bias_rows(table: ReportTable) -> List[tuple]:
    """(estimator, component, replication, estimate − true) for successful runs."""
    ok = table.traces[~table.traces["failed"].astype(bool)]
    errors = ok["value"].to_numpy(dtype=float) - ok["true_value"].to_numpy(dtype=float)
    return list(zip(ok["estimator"], ok["component"], ok["replication"], errors))


def path_rows(clean: SampledSeries, observed: SampledSeries) -> List[tuple]:
    mask = observed.outlier_mask if observed.outlier_mask is not None else np.zeros(observed.n, dtype=bool)
    return list(zip(observed.times, clean.values, observed.values, mask.astype(int)))


def emit_path(clean: SampledSeries, observed: SampledSeries, path: str):
    """Plot-ready sample path: t, clean value, observed value, outlier flag."""
    _write_rows(path, ["t", "clean", "observed", "outlier"], path_rows(clean, observed))


def emit_plots(table: ReportTable, out_dir: str, clean: Optional[SampledSeries] = None,
               observed: Optional[SampledSeries] = None, images: bool = True) -> List[str]:
    """
    Write bias and sample-path plot data (always) and their PNG renderings.
    Returns the written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    bias_path = os.path.join(out_dir, BIAS_DATA_FILE)
    bias = bias_rows(table)
    _write_rows(bias_path, ["estimator", "component", "replication", "bias"], bias)
    written.append(bias_path)

    trace_path = os.path.join(out_dir, TRACE_FILE)
    emit_traces(table, trace_path)
    written.append(trace_path)

    if clean is not None:
        observed = clean if observed is None else observed
        path_path = os.path.join(out_dir, PATH_DATA_FILE)
        emit_path(clean, observed, path_path)
        written.append(path_path)

    if not images:
        return written

    if bias:
        written.append(_plot_bias(table, bias, os.path.join(out_dir, BIAS_PLOT_FILE)))
    if clean is not None:
        written.append(_plot_path(clean, observed, os.path.join(out_dir, PATH_PLOT_FILE)))
    return written


def _plot_bias(table: ReportTable, bias, filename: str) -> str:
    estimators = table.estimators
    fig, axes = plt.subplots(1, len(estimators), figsize=(6 * len(estimators), 5), squeeze=False)
    for ax, estimator in zip(axes[0], estimators):
        components = list(table.for_estimator(estimator)["component"])
        data = [[b for e, c, _, b in bias if e == estimator and c == comp] for comp in components]
        ax.boxplot(data)
        ax.set_xticklabels(components)
        ax.axhline(0.0, color="grey", linestyle="--", linewidth=0.8)
        ax.set_title(f"{estimator} (failures: {table.failures(estimator)})")
        ax.set_ylabel("estimate - true value")
    fig.suptitle(f"Bias across replications: {table.name}")
    fig.tight_layout()
    fig.savefig(filename)
    plt.close(fig)
    return filename


def _plot_path(clean: SampledSeries, observed: SampledSeries, filename: str) -> str:
    fig, ax = plt.subplots(figsize=(12, 4))
    t = observed.times
    ax.plot(t, observed.values, color="tab:red", linewidth=0.6, label="observed")
    ax.plot(t, clean.values, color="tab:blue", linewidth=0.8, label="clean")
    if observed.outlier_mask is not None and observed.outlier_mask.any():
        mask = observed.outlier_mask
        ax.scatter(t[mask], observed.values[mask], color="tab:red", s=8, label="outlier")
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    fig.savefig(filename)
    plt.close(fig)
    return filename
