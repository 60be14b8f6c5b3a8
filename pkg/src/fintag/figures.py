"""Report figures rendered next to the delimited output files.

All plots use the Agg backend so report generation works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import CorpusStats
from .evaluation import AblationResult


def tag_frequency_figure(stats: CorpusStats, path) -> None:
    """Frequency of each tag over the corpus, most frequent first."""
    tags = list(stats.tag_frequency)
    counts = [stats.tag_frequency[t] for t in tags]
    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(tags)), 4))
    ax.bar(range(len(tags)), counts, color="#33658a")
    ax.set_xlabel("tag index (by frequency)")
    ax.set_ylabel("gold spans")
    ax.set_title("tag frequency distribution")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def hits_curve_figure(points, path) -> None:
    """Hits@k against k."""
    ks = [k for k, _ in points]
    values = [v for _, v in points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, values, marker="o", color="#2f4b7c")
    ax.set_xlabel("k")
    ax.set_ylabel("Hits@k")
    ax.set_ylim(0.0, 1.05)
    ax.set_xticks(ks)
    ax.grid(True, alpha=0.3)
    ax.set_title("top-k tag recommendation accuracy")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def ablation_figure(result: AblationResult, path) -> None:
    """Grouped bars of test micro-F1 per (policy, head, granularity) cell."""
    cells = [c for c in result.cells if c.status == "ok"]
    labels = [f"{c.policy}\n{c.head}/{c.granularity}" for c in cells]
    means = [c.test.means["micro_f1"] for c in cells]
    stds = [c.test.stds["micro_f1"] for c in cells]
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(cells)), 4))
    ax.bar(range(len(cells)), means, yerr=stds, capsize=4, color="#86bbd8")
    ax.set_xticks(range(len(cells)), labels, fontsize=8)
    ax.set_ylabel("test micro-F1")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("tokenization-policy ablation")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
