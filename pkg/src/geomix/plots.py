"""Figure rendering for training runs and evaluation reports.

matplotlib is imported lazily with the Agg backend so headless runs work
and library users who never plot never pay the import.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def training_curves(trace: list[dict], path: str) -> None:
    """Loss components and validation AUC across epochs, two panels."""
    plt = _pyplot()
    epochs = [row["epoch"] for row in trace]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(epochs, [row["l_s"] for row in trace], label="spherical loss")
    ax1.plot(epochs, [row["l_h"] for row in trace], label="hyperbolic loss")
    ax1.plot(epochs, [row["unify"] for row in trace], label="unification")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax1.legend()
    val = np.array([row["val_auc"] for row in trace], dtype=float)
    if np.any(np.isfinite(val)):
        ax2.plot(epochs, val, color="tab:green")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("validation AUC")
    ax2.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def roc_points(pos_scores, neg_scores):
    """(false positive rate, true positive rate) sweep over thresholds."""
    pos = np.asarray(pos_scores, dtype=float).ravel()
    neg = np.asarray(neg_scores, dtype=float).ravel()
    scores = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    order = np.argsort(-scores, kind="mergesort")
    y = y[order]
    tp = np.concatenate([[0.0], np.cumsum(y)])
    fp = np.concatenate([[0.0], np.cumsum(1.0 - y)])
    tpr = tp / max(pos.size, 1)
    fpr = fp / max(neg.size, 1)
    return fpr, tpr


def report_roc(pos_scores, neg_scores, path: str) -> None:
    """ROC curve plus the score distributions behind it."""
    plt = _pyplot()
    fpr, tpr = roc_points(pos_scores, neg_scores)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(fpr, tpr, color="tab:blue")
    ax1.plot([0, 1], [0, 1], linestyle=":", color="gray")
    ax1.set_xlabel("false positive rate")
    ax1.set_ylabel("true positive rate")
    bins = np.linspace(0.0, 1.0, 30)
    ax2.hist(np.asarray(pos_scores, float).ravel(), bins=bins, alpha=0.6, label="positives")
    ax2.hist(np.asarray(neg_scores, float).ravel(), bins=bins, alpha=0.6, label="negatives")
    ax2.set_xlabel("link probability")
    ax2.set_ylabel("count")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
