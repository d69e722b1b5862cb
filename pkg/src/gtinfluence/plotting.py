"""Figures written next to the CSV reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.hashsalt": "gtinfluence",
}

MARKERS = {"greedy": "o", "degree": "s", "distance": "^", "random": "x", "exhaustive": "D"}


def figsize(width=4.5):
    return (width, width * 0.62)


def plot_influence_curve(rows: Sequence[dict], path, title: str | None = None) -> Path:
    """Influence against seed-set size, one line per method, CI as error bars."""
    path = Path(path)
    methods = list(dict.fromkeys(r["method"] for r in rows))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for method in methods:
            pts = sorted((r["k"], r["value"], r["ci"]) for r in rows if r["method"] == method)
            ks, vals, cis = zip(*pts)
            marker = MARKERS.get(method.split("-")[0], ".")
            if any(cis):
                ax.errorbar(ks, vals, yerr=cis, marker=marker, ms=4, capsize=2, lw=1, label=method)
            else:
                ax.plot(ks, vals, marker=marker, ms=4, lw=1, label=method)
        ax.set_xlabel("seed set size k")
        ax.set_ylabel(r"influence $\sigma_w$")
        if title:
            ax.set_title(title, fontsize=10)
        ax.xaxis.get_major_locator().set_params(integer=True)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=150, metadata={"Software": None} if path.suffix == ".png" else None)
        plt.close(fig)
    return path
