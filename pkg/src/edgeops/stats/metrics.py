"""Accuracy metrics."""

from __future__ import annotations

import numpy as np

from ..errors import StatsError


def top_k_accuracy(ranked, labels, k: int) -> float:
    """Percent of samples whose true label is among the first ``k`` ranked labels."""
    if k < 1:
        raise StatsError("k must be at least 1")
    if len(ranked) != len(labels):
        raise StatsError(f"{len(ranked)} predictions for {len(labels)} labels")
    if not labels:
        raise StatsError("no samples")
    hits = 0
    for row, y in zip(ranked, labels):
        if len(row) < k:
            raise StatsError(f"ranked list shorter than k={k}")
        hits += y in list(row[:k])
    return 100.0 * hits / len(labels)


def mean_iou(pred, truth, n_classes: int) -> float:
    """Mean IoU in percent over classes present in the prediction or the truth."""
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise StatsError(f"mask shapes differ: {p.shape} vs {t.shape}")
    if p.size and (p.max() >= n_classes or t.max() >= n_classes or p.min() < 0 or t.min() < 0):
        raise StatsError(f"class ids must lie in [0, {n_classes})")
    conf = np.bincount(t.ravel() * n_classes + p.ravel(), minlength=n_classes * n_classes)
    conf = conf.reshape(n_classes, n_classes)
    tp = np.diag(conf).astype(float)
    union = conf.sum(0) + conf.sum(1) - tp
    present = union > 0
    if not present.any():
        raise StatsError("no class present in either mask")
    return float(100.0 * np.mean(tp[present] / union[present]))
