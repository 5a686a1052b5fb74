"""Figures written next to the CSV/JSON outputs (Agg backend, files only)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_histogram(hist, path, title: str | None = None) -> Path:
    centres = 0.5 * (hist.edges[:-1] + hist.edges[1:]) * 1e6
    width = np.diff(hist.edges) * 1e6
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(centres, hist.counts, width=width, color="0.4")
    for p in hist.peaks():
        ax.axvline(centres[p], color="C3", lw=1, ls="--")
    ax.set_xlabel("normalized phase difference [µs]")
    ax.set_ylabel("bins")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_sdr_boxes(box_data: dict, path, key: str = "improvement") -> Path:
    """Boxplots from :func:`mixclust.evaluation.write_boxplot_data` output."""
    labels = list(box_data)
    fig, ax = plt.subplots(figsize=(1.2 * len(labels) + 2, 3.5))
    ax.boxplot([box_data[m][key]["points"] for m in labels], showfliers=True)
    ax.set_xticks(range(1, len(labels) + 1), labels, rotation=20)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_ylabel("SDR improvement [dB]" if key == "improvement" else "SDR [dB]")
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, path)


def plot_loss(history, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(np.arange(1, len(history) + 1), history, marker="o", ms=3)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss / L²")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
