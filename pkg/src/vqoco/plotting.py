"""Line charts of cumulative regret and violation, written as deterministic SVG."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "vqoco",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "figure.figsize": (5.0, 3.2),
}


def _save(fig: Figure, path: Path) -> Path:
    path = Path(path)
    # a fixed hash salt and no timestamp keep the bytes identical across invocations
    with matplotlib.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def line_chart(series: dict, path, xlabel: str, ylabel: str, title: str = "") -> Path:
    """One curve per entry of ``series`` (label -> 1-D array indexed by round 1..T)."""
    with matplotlib.rc_context(STYLE):
        fig = Figure()
        ax = fig.add_subplot(111)
        for label, values in series.items():
            values = np.asarray(values, dtype=float)
            ax.plot(np.arange(1, len(values) + 1), values, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if series:
            ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_regret(series: dict, path) -> Path:
    return line_chart(series, path, "round t", "cumulative regret", "Cumulative regret")


def plot_violation(series: dict, path) -> Path:
    return line_chart(
        series, path, "round t", "cumulative constraint violation",
        "Cumulative constraint violation",
    )
