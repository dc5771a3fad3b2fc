"""Static figures for comparison and benchmark reports (PNG/SVG/PDF by suffix)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .eval import SETUP_TITLES  # noqa: E402


def plot_f1_bars(doc: dict, path, include_published: bool = True) -> Path:
    """Grouped bars of macro F1 per classifier, one group per stop-word setup.

    Published values are drawn as hollow bars next to the measured ones.
    """
    series = doc["figure_series"]
    names = series["classifiers"]
    modes = list(series["measured"])
    x = np.arange(len(names))
    n_bars = len(modes) * (2 if include_published else 1)
    width = 0.8 / n_bars
    fig, ax = plt.subplots(figsize=(8, 4.2))
    colors = {"remove": "tab:orange", "keep": "tab:blue"}
    slot = 0
    for mode in modes:
        c = colors.get(mode)
        ax.bar(x + (slot - (n_bars - 1) / 2) * width, series["measured"][mode], width,
               color=c, label=f"{SETUP_TITLES.get(mode, mode)}")
        slot += 1
        if include_published:
            ax.bar(x + (slot - (n_bars - 1) / 2) * width, series["published"][mode], width,
                   facecolor="none", edgecolor=c, hatch="//", label=f"{SETUP_TITLES.get(mode, mode)} (published)")
            slot += 1
    ax.set_xticks(x, names)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("macro F1")
    ax.set_title(f"F1 scores per classifier ({doc['granularity']}, {doc['folds']}-fold)")
    ax.legend(fontsize=8, loc="lower right")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_scaling(docs: Sequence[dict], path) -> Path:
    """Log-log timing curves with the fitted power law for each bench report."""
    docs = list(docs)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for d in docs:
        sizes = np.asarray(d["sizes"], dtype=float)
        times = np.asarray(d["times_s"], dtype=float)
        label = f"{d['classifier']} {d['phase']} vs {d['axis']} (slope {d['slope']:.2f})"
        line, = ax.loglog(sizes, times, "o-", label=label)
        # fitted line through the geometric mean of the points
        gx, gy = np.exp(np.log(sizes).mean()), np.exp(np.log(times).mean())
        ax.loglog(sizes, gy * (sizes / gx) ** d["slope"], "--", color=line.get_color(), alpha=0.6)
    ax.set_xlabel("size")
    ax.set_ylabel("median time (s)")
    ax.set_title("Empirical scaling")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
