"""Figure rendering for the evaluation and analysis commands.

Figures are written straight to files (Agg backend); nothing here opens
a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_mos_scatter(values, srocc: float, krocc: float, path) -> None:
    """Scatter of metric value vs MOS with the rank correlations in the title."""
    metrics = [v[0] for v in values]
    moses = [v[1] for v in values]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(metrics, moses, s=12, alpha=0.6)
    ax.set_xlabel("metric value (distortion)")
    ax.set_ylabel("MOS (quality)")
    ax.set_title(f"SROCC {srocc:.3f}  KROCC {krocc:.3f}  (n={len(metrics)})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_accuracy_bars(accuracy: float, ceiling: float | None, path) -> None:
    """Bar chart of triplet accuracy against the human inter-rater ceiling."""
    labels = ["metric"]
    heights = [accuracy]
    if ceiling is not None:
        labels.append("human ceiling")
        heights.append(ceiling)
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.bar(labels, heights, color=["tab:blue", "tab:gray"][: len(labels)])
    ax.set_ylim(0, 1)
    ax.set_ylabel("triplet accuracy")
    for i, h in enumerate(heights):
        ax.text(i, h + 0.02, f"{h:.3f}", ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pyramid_sums(level_sums, path) -> None:
    """Total heatmap mass (= metric value) per pyramid level."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(range(len(level_sums)), level_sums, marker="o")
    ax.set_xlabel("pyramid level (0 = full resolution)")
    ax.set_ylabel("metric value")
    ax.set_xticks(range(len(level_sums)))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
