"""Figure rendering for training and evaluation reports.

Figures are written next to the delimited/JSON outputs so a run leaves a
self-contained report directory.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evalkit import MetricReport  # noqa: E402


def plot_training_curves(history, path: str):
    """Loss and validation AUC per epoch."""
    losses = [ep[0] for ep in history.epochs]
    aucs = [ep[1] for ep in history.epochs]
    fig, ax1 = plt.subplots(figsize=(7, 4))
    epochs = range(1, len(losses) + 1)
    ax1.plot(epochs, losses, color="tab:blue", label="train loss")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(epochs, aucs, color="tab:orange", label="validation AUC")
    ax2.set_ylabel("AUC", color="tab:orange")
    ax2.set_ylim(0.0, 1.05)
    if history.best_epoch >= 0:
        ax2.axvline(history.best_epoch + 1, color="gray", linestyle=":",
                    linewidth=1)
    ax1.set_title("link-prediction training")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_f_ranks(report: MetricReport, path: str):
    """Horizontal bar chart of per-query first-hit ranks; misses drawn at cutoff."""
    items = sorted(report.per_query.items())
    labels = [qid for qid, _ in items]
    ranks = [report.cutoff if r is None else r for _, r in items]
    colors = ["tab:red" if r is None else "tab:green" for _, r in items]
    fig, ax = plt.subplots(figsize=(7, max(2.0, 0.4 * len(items) + 1)))
    ax.barh(labels, ranks, color=colors)
    ax.set_xlabel("first-hit rank (lower is better)")
    ax.set_title(f"per-query rank, MRR = {report.mrr:.3f}")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
