"""Figure rendering for report outputs. Files only, no interactive backend."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_pr_curve(
    recall: Sequence[float],
    precision: Sequence[float],
    path: str | Path,
    title: str = "Unknown precision-recall",
):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(recall, precision, drawstyle="steps-post", color="tab:blue")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_threshold_curve(
    thresholds: Sequence[float],
    values: Sequence[float],
    path: str | Path,
    xlabel: str,
    ylabel: str,
    title: str,
    marker_at: float | None = None,
):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(thresholds, values, marker="o", color="tab:blue")
    if marker_at is not None:
        ax.axvline(marker_at, color="tab:red", linestyle="--", alpha=0.7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
