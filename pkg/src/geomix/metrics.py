"""Ranking and multi-label classification metrics.

The AUC is the Mann-Whitney statistic with average ranks, so tied scores
contribute 1/2. Node classification trains a one-vs-rest logistic probe by
full-batch gradient descent on tangent-space features; its splits are
stratified by the exact label signature so rare combinations appear on
both sides whenever they have at least two members.
"""

from __future__ import annotations

import numpy as np

from .manifold import ball_log0, sphere_log0


def auc(pos_scores, neg_scores) -> float:
    """Probability a positive outranks a negative (ties count half)."""
    pos = np.asarray(pos_scores, dtype=float).ravel()
    neg = np.asarray(neg_scores, dtype=float).ravel()
    if pos.size == 0 or neg.size == 0:
        return float("nan")
    allscores = np.concatenate([pos, neg])
    _, inv, counts = np.unique(allscores, return_inverse=True, return_counts=True)
    # average 1-based rank of each tie class
    upper = np.cumsum(counts)
    avg_rank = upper - (counts - 1) / 2.0
    ranks = avg_rank[inv]
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def tangent_features(z_s, z_h, w_s: float, hom_space: str = "S", rank_space: str = "H"):
    """Per-node feature rows: both embeddings pulled to their tangent spaces."""
    fs = sphere_log0(z_s, w_s) if hom_space == "S" else np.asarray(z_s, float)
    fh = ball_log0(z_h) if rank_space == "H" else np.asarray(z_h, float)
    return np.concatenate([fs, fh], axis=1)


def stratified_split(labels: np.ndarray, seed: int, train_frac: float = 0.8):
    """Index split preserving label-signature proportions."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    groups: dict[bytes, list[int]] = {}
    for i, row in enumerate(labels):
        groups.setdefault(np.asarray(row, dtype=np.int8).tobytes(), []).append(i)
    train, test = [], []
    for key in sorted(groups):
        idx = np.array(groups[key], dtype=int)
        rng.shuffle(idx)
        if idx.size == 1:
            train.extend(idx.tolist())
            continue
        n_tr = int(round(train_frac * idx.size))
        n_tr = min(max(n_tr, 1), idx.size - 1)
        train.extend(idx[:n_tr].tolist())
        test.extend(idx[n_tr:].tolist())
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


def fit_ovr_logistic(x: np.ndarray, y: np.ndarray, epochs: int = 300, lr: float = 0.5):
    """One-vs-rest logistic weights by full-batch gradient descent."""
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd < 1e-12, 1.0, sd)
    xs = np.concatenate([(x - mu) / sd, np.ones((x.shape[0], 1))], axis=1)
    w = np.zeros((xs.shape[1], y.shape[1]))
    yf = y.astype(float)
    for _ in range(epochs):
        z = xs @ w
        e = np.exp(-np.abs(z))
        p = np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
        w -= lr * (xs.T @ (p - yf)) / xs.shape[0]
    return {"w": w, "mu": mu, "sd": sd}


def predict_ovr_logistic(model: dict, x: np.ndarray) -> np.ndarray:
    xs = np.concatenate(
        [(x - model["mu"]) / model["sd"], np.ones((x.shape[0], 1))], axis=1
    )
    return (xs @ model["w"] >= 0.0).astype(np.int8)


def jaccard_index(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean per-node |intersection| / |union|; two empty sets count as 1."""
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    inter = (t & p).sum(axis=1)
    union = (t | p).sum(axis=1)
    per = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return float(per.mean())


def hamming_loss(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    return float((t != p).mean())


def micro_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    tp = (t & p).sum()
    fp = (~t & p).sum()
    fn = (t & ~p).sum()
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 1.0
    return float(2 * tp / denom)


def classify(features: np.ndarray, labels: np.ndarray, seed: int = 0):
    """Train the probe on the stratified split; returns (test_idx, predictions)."""
    labels = np.asarray(labels)
    train_idx, test_idx = stratified_split(labels, seed)
    if test_idx.size == 0:
        return test_idx, np.zeros((0, labels.shape[1]), dtype=np.int8)
    model = fit_ovr_logistic(features[train_idx], labels[train_idx])
    return test_idx, predict_ovr_logistic(model, features[test_idx])


def multilabel_metrics(pred: np.ndarray, truth: np.ndarray):
    """(Jaccard index, Hamming loss, micro F1) for boolean label matrices."""
    return jaccard_index(truth, pred), hamming_loss(truth, pred), micro_f1(truth, pred)


def node_classification(features: np.ndarray, labels: np.ndarray, seed: int = 0):
    """Probe accuracy of the embeddings: returns (jaccard, hamming, micro f1)."""
    labels = np.asarray(labels)
    test_idx, pred = classify(features, labels, seed)
    if test_idx.size == 0:
        return float("nan"), float("nan"), float("nan")
    return multilabel_metrics(pred, labels[test_idx])
