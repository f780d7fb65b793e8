"""Penalized logistic regression.

Both penalties are fit by the same engine in the active kernel backend:
outer iteratively-reweighted least squares with an inner cyclic
coordinate descent pass, line-searched on the true penalized
log-likelihood so the objective trace is monotone. The intercept is
never penalized. Models expose the trace so convergence is checkable
after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..backend import kernels
from ..util import sigmoid

PENALTIES = ("l1", "l2")


@dataclass
class LinearModel:
    beta: np.ndarray            # (F+1,), intercept first
    penalty: str
    c_value: float
    converged: bool
    n_iter: int
    obj_trace: list = field(default_factory=list)
    feature_names: tuple = ()

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    @property
    def coef(self) -> np.ndarray:
        return self.beta[1:]

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return sigmoid(self.beta[0] + x @ self.beta[1:])


def penalized_objective(x, y, beta, penalty: str, c_value: float) -> float:
    """Log-likelihood minus the penalty term; what fitting maximizes."""
    ll = kernels.logreg_loglik(np.asarray(x, dtype=np.float64),
                               np.asarray(y, dtype=np.float64), beta)
    b = beta[1:]
    if penalty == "l2":
        return ll - float(b @ b) / (2.0 * c_value)
    return ll - float(np.abs(b).sum()) / c_value


def penalized_grad(x, y, beta, c_value: float) -> np.ndarray:
    """Gradient of the L2-penalized objective (L1 is nonsmooth at zero)."""
    _, grad, _ = kernels.logreg_grad_hess(np.asarray(x, dtype=np.float64),
                                          np.asarray(y, dtype=np.float64), beta)
    out = grad.copy()
    out[1:] -= beta[1:] / c_value
    return out


def fit_logistic(
    x,
    y,
    penalty: str = "l2",
    c_value: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 100,
    feature_names=(),
) -> LinearModel:
    """Fit logistic regression of binary y on x.

    ``c_value`` is the inverse penalty strength: larger C, weaker
    penalty. ``tol`` bounds the KKT residual (max absolute subgradient
    component) per row, so the stopping rule is insensitive to cohort
    size, matching the per-record tolerance the noisy-OR fit uses.
    """
    if penalty not in PENALTIES:
        raise ValueError(f"penalty must be one of {PENALTIES}")
    if c_value <= 0:
        raise ValueError("c_value must be positive")
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be (N,F) and y (N,)")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("y must be binary")

    lam1 = 1.0 / c_value if penalty == "l1" else 0.0
    lam2 = 1.0 / c_value if penalty == "l2" else 0.0
    # start at the intercept-only optimum; saves a few damped outer steps
    rate = min(max(float(y.mean()), 1e-12), 1.0 - 1e-12)
    beta0 = np.zeros(x.shape[1] + 1)
    beta0[0] = np.log(rate / (1.0 - rate))
    beta, n_iter, trace, converged = kernels.logreg_cd(
        x, y, beta0, lam1, lam2, tol * x.shape[0], max_iter)
    return LinearModel(beta=beta, penalty=penalty, c_value=float(c_value),
                       converged=bool(converged), n_iter=int(n_iter),
                       obj_trace=list(trace), feature_names=tuple(feature_names))
