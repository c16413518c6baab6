"""Matplotlib figures for experiment reports.

Figures are drawn on a bare ``Figure`` (no pyplot state) so runs in worker
threads do not interfere.  SVG output is byte-stable: the id hash salt is
fixed, text stays as text and the date stamp is dropped.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

SVG_RC = {
    "svg.hashsalt": "optassign",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
SVG_METADATA = {"Date": None, "Creator": "optassign"}

# one color per mechanism, in report order
PALETTE = ["#1f5a96", "#c8553d", "#588b3a", "#8e6bb0"]


def _save(fig: Figure, path: Path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format=fmt, metadata=SVG_METADATA if fmt == "svg" else None)
    return path


def rank_histogram_chart(
    mean_counts: dict[str, list[float]], path, title: str = "", max_rank: int | None = None
) -> Path:
    """Grouped bars of the mean student count per assigned rank, one group per rank."""
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(7.0, 3.6))
        ax = fig.add_subplot()
        names = list(mean_counts)
        z = max((len(v) for v in mean_counts.values()), default=1)
        if max_rank is not None:
            z = min(z, max_rank)
        width = 0.8 / max(len(names), 1)
        for i, name in enumerate(names):
            vals = list(mean_counts[name])[:z]
            xs = [k + 1 + (i - (len(names) - 1) / 2) * width for k in range(len(vals))]
            ax.bar(xs, vals, width=width, label=name, color=PALETTE[i % len(PALETTE)])
        ax.set_xlabel("assigned preference rank")
        ax.set_ylabel("students (mean over seeds)")
        # rank-1 counts dwarf the tail
        ax.set_yscale("symlog", linthresh=1.0)
        ax.set_xticks(range(1, z + 1) if z <= 20 else range(1, z + 1, max(1, z // 10)))
        ax.set_xlim(0.4, z + 0.6)
        if title:
            ax.set_title(title)
        if names:
            ax.legend(frameon=False)
        fig.tight_layout()
    return _save(fig, path)


def duration_chart(mean_ms: dict[str, float], path, title: str = "") -> Path:
    """Bar chart of mean mechanism wall time."""
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(4.0, 3.0))
        ax = fig.add_subplot()
        names = list(mean_ms)
        ax.bar(names, [mean_ms[n] for n in names],
               color=[PALETTE[i % len(PALETTE)] for i in range(len(names))])
        ax.set_ylabel("mean duration (ms)")
        ax.set_yscale("log")
        if title:
            ax.set_title(title)
        fig.tight_layout()
    return _save(fig, path)
