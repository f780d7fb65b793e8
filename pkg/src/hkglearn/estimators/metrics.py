"""Ranking metrics for binary classifiers."""

from __future__ import annotations

import numpy as np


def auroc(y_true, scores) -> float:
    """Area under the ROC curve via the rank-sum formulation.

    Tied scores receive their average rank, which matches the trapezoidal
    curve-based value exactly. Raises if only one class is present.
    """
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise ValueError("y_true and scores must be equal-length 1-d arrays")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both classes present")
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    # average rank within each tied block, 1-based
    _, inverse, counts = np.unique(sorted_s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts
    avg_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size)
    ranks[order] = avg_rank[inverse]
    rank_sum = ranks[y].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
