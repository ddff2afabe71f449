"""Figure rendering for the report CSVs.

Each report written by the CLI gets a companion PNG next to the
delimited output.  Rendering is headless (Agg) and intentionally plain:
one axes per figure, no interactivity.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.figsize": (7.0, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
}


def _new_axes(title, xlabel, ylabel):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_class_report(rows, path):
    """Average output per class index, estimated run."""
    defined = [r for r in rows if r.avg_publications is not None]
    fig, ax = _new_axes("Average output per class", "class index", "avg publications")
    ax.plot(
        [r.class_index for r in defined],
        [r.avg_publications for r in defined],
        marker="o",
        linestyle="-",
        markersize=3,
    )
    dutch = [r for r in defined if r.country == "NL"]
    if dutch:
        ax.plot(
            [r.class_index for r in dutch],
            [r.avg_publications for r in dutch],
            marker="o",
            linestyle="none",
            markersize=5,
            label="Dutch classes",
        )
        ax.legend()
    return _save(fig, path)


def plot_age_report(rows, path):
    fig, ax = _new_axes("Average output by scientific age", "decade group", "avg publications")
    labels = [f"{r.decade}s" for r in rows]
    heights = [r.avg_publications if r.avg_publications is not None else 0.0 for r in rows]
    ax.bar(labels, heights)
    return _save(fig, path)


def plot_triad_report(report, path):
    fig, ax = _new_axes(
        "Triad connectivity", "min leg strength threshold", "avg third-leg contact (rel.)"
    )
    xs = [t for t, r in zip(report.thresholds, report.relative_avg) if r is not None]
    ys = [r for r in report.relative_avg if r is not None]
    ax.plot(xs, ys, marker="s")
    return _save(fig, path)


def plot_baseline_diff(rows, path):
    fig, ax = _new_axes(
        "Estimated minus uniform-contact output", "class index", "difference in avg publications"
    )
    defined = [r for r in rows if r.difference is not None]
    colors = ["tab:orange" if r.dutch else "tab:blue" for r in defined]
    ax.bar([r.class_index for r in defined], [r.difference for r in defined], color=colors)
    ax.axhline(0.0, color="black", linewidth=0.8)
    handles = [
        plt.Rectangle((0, 0), 1, 1, color="tab:orange"),
        plt.Rectangle((0, 0), 1, 1, color="tab:blue"),
    ]
    ax.legend(handles, ["Dutch", "foreign"])
    return _save(fig, path)


def plot_trajectory(trajectory, classes, path):
    """Per-class average publications over the simulated weeks."""
    space = trajectory.space
    p_arr, _, _, u_arr = space.coordinate_arrays()
    fig, ax = _new_axes("Mean-field trajectory", "week", "avg publications per class")
    weeks = np.arange(len(trajectory.snapshots))
    for u in classes.class_ids():
        mask = u_arr == u
        series = []
        for snap in trajectory.snapshots:
            mass = snap.values[mask].sum()
            series.append((p_arr[mask] * snap.values[mask]).sum() / mass if mass > 0 else np.nan)
        ax.plot(weeks, series, label=classes.labels[u])
    if classes.n_classes <= 12:
        ax.legend(fontsize=7)
    return _save(fig, path)
