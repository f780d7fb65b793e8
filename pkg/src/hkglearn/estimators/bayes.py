"""Bernoulli naive Bayes over binary features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class NBModel:
    """Additive-smoothed conditional tables for binary features.

    log_p1[c, f] = log P(feature f = 1 | class c); log_p0 its complement.
    With alpha = 0 a zero count yields a -inf sentinel; prediction handles
    that by treating the impossible class as probability zero.
    """

    log_p1: np.ndarray          # (2, F)
    log_p0: np.ndarray          # (2, F)
    log_prior: np.ndarray       # (2,)
    alpha: float
    feature_names: tuple = ()

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x)
        on = x != 0
        joint = np.empty((x.shape[0], 2))
        for c in (0, 1):
            terms = np.where(on, self.log_p1[c], self.log_p0[c])
            joint[:, c] = self.log_prior[c] + terms.sum(axis=1)
        # stable two-class softmax; all--inf rows fall back to the prior
        m = np.max(joint, axis=1)
        bad = ~np.isfinite(m)
        safe = np.where(bad[:, None], 0.0, joint - m[:, None])
        e = np.exp(safe)
        p = e[:, 1] / (e[:, 0] + e[:, 1])
        if bad.any():
            p[bad] = np.exp(self.log_prior[1])
        return p


def conditional_table(x, y, alpha: float):
    """P(x_f = 1 | y = c) with additive smoothing, for c in {0, 1}.

    Returns (p1, n_per_class) where p1 is (2, F). alpha = 0 gives raw
    frequencies (0/0 when a class is empty is reported as nan).
    """
    x = np.asarray(x)
    y = np.asarray(y).astype(bool)
    counts = np.stack([x[~y].sum(axis=0), x[y].sum(axis=0)]).astype(np.float64)
    n = np.array([(~y).sum(), y.sum()], dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        p1 = (counts + alpha) / (n[:, None] + 2.0 * alpha)
    return p1, n


def fit_naive_bayes(x, y, alpha: float = 1.0, feature_names=()) -> NBModel:
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be (N,F) and y (N,)")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("y must be binary")
    p1, n = conditional_table(x, y, alpha)
    with np.errstate(divide="ignore"):
        log_p1 = np.log(p1)
        log_p0 = np.log1p(-p1)
        log_prior = np.log((n + alpha) / (n.sum() + 2.0 * alpha))
    return NBModel(log_p1=log_p1, log_p0=log_p0, log_prior=log_prior,
                   alpha=float(alpha), feature_names=tuple(feature_names))
