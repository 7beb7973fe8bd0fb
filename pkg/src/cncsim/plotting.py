"""Stacked-bar figures for cycle-breakdown reports.

Works headless: the Agg backend is forced before pyplot is imported, so
figures render straight to files with no display attached.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .program import BUCKETS

_COLORS = {
    "shift": "#4c72b0",
    "logic": "#dd8452",
    "ext_bit": "#55a868",
    "read_write": "#c44e52",
}


def breakdown_figure(reports: list[dict], path: str, *,
                     normalize: bool = True, title: str | None = None) -> str:
    """Render one stacked bar per report, segmented by cycle bucket.

    ``reports`` follow the breakdown-report schema (kernel, variant, cycles,
    fractions).  With ``normalize`` bars show bucket fractions of the total;
    otherwise absolute cycle counts.  Returns the path written.
    """
    if not reports:
        raise ValueError("no reports to plot")
    labels = [f"{r['kernel']}\n{r['variant']}" for r in reports]
    width = max(4.0, 1.1 * len(reports) + 2.0)
    fig, ax = plt.subplots(figsize=(width, 4.2))

    bottoms = [0.0] * len(reports)
    for bucket in BUCKETS:
        if normalize:
            vals = [r["fractions"].get(bucket, 0.0) for r in reports]
        else:
            vals = [r["cycles"].get(bucket, 0) for r in reports]
        ax.bar(labels, vals, bottom=bottoms, label=bucket,
               color=_COLORS[bucket], width=0.6, edgecolor="white")
        bottoms = [b + v for b, v in zip(bottoms, vals)]

    ax.set_ylabel("fraction of cycles" if normalize else "cycles")
    ax.set_title(title or "cycle breakdown")
    ax.legend(ncol=len(BUCKETS), loc="upper center",
              bbox_to_anchor=(0.5, -0.18), frameon=False)
    if not normalize:
        for x, total in enumerate(bottoms):
            ax.annotate(f"{int(total)}", (x, total), ha="center",
                        va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
