"""Noisy-OR parameter learning for the disease->symptom layer.

Each symptom i is on with probability 1 - (1-l_i) * prod_j f_ij^{Y_j}:
l_i is the leak, f_ij the failure probability of parent j. The EM loop
lives in the kernel backend; this wrapper owns initialization, optional
demographic parents and parameter extraction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..backend import kernels
from ..util import derive_seed, rng_for
from .scores import ScoreMatrix


@dataclass
class NoisyOrParams:
    parent_names: tuple         # diseases first, demographic parents after
    symptom_names: tuple
    n_diseases: int
    leak: np.ndarray            # (S,) in [0, 1)
    failure: np.ndarray         # (P, S) in (0, 1]
    loglik: float
    iterations: int
    converged: bool
    loglik_trace: np.ndarray

    def __post_init__(self):
        if ((self.leak < 0) | (self.leak >= 1)).any():
            raise ValueError("leak out of [0,1)")
        if ((self.failure <= 0) | (self.failure > 1)).any():
            raise ValueError("failure out of (0,1]")
        if not np.isfinite(self.loglik):
            raise ValueError("log-likelihood must be finite")


def fit_noisy_or(
    record_set,
    demo=None,
    tol_per_record: float = 1e-6,
    max_iter: int = 500,
    seed: int = 0,
) -> NoisyOrParams:
    """Run EM from the jittered init; returns parameters plus trace.

    ``demo`` may be a bracket-encoded FeatureMatrix; its indicator columns
    join the diseases as extra parents with their own failure entries.
    """
    y = np.ascontiguousarray(record_set.y, dtype=np.uint8)
    x = np.ascontiguousarray(record_set.x, dtype=np.uint8)
    names = list(record_set.vocabulary.diseases)
    if demo is not None:
        cols = demo.demo_columns
        if not np.isin(cols, (0.0, 1.0)).all():
            raise ValueError("demographic parents must be indicator-encoded")
        y = np.ascontiguousarray(
            np.concatenate([y, cols.astype(np.uint8)], axis=1))
        names.extend(demo.column_names[demo.n_base:])

    n, p = y.shape
    s = x.shape[1]
    rng = rng_for(derive_seed(seed, "nor-init"))
    fail0 = np.clip(0.9 * rng.uniform(0.95, 1.05, size=(p, s)), 1e-6, 1.0 - 1e-9)
    leak0 = x.mean(axis=0) / 2.0

    leak, fail, trace, iters, converged = kernels.noisy_or_em(
        y, x, leak0, fail0, tol_per_record, max_iter)
    if not converged:
        warnings.warn(f"noisy-OR EM hit max_iter={max_iter} before tolerance")
    return NoisyOrParams(
        parent_names=tuple(names),
        symptom_names=tuple(record_set.vocabulary.symptoms),
        n_diseases=record_set.vocabulary.n_diseases,
        leak=leak, failure=fail, loglik=float(trace[-1]),
        iterations=int(iters), converged=bool(converged),
        loglik_trace=np.asarray(trace))


def importance_noisy_or(params: NoisyOrParams) -> ScoreMatrix:
    """Importance is one minus failure; demographic parent rows are not
    exported as graph candidates."""
    d = params.n_diseases
    values = 1.0 - params.failure[:d]
    return ScoreMatrix(
        diseases=tuple(params.parent_names[:d]),
        symptoms=params.symptom_names,
        values=values,
        learner="nor",
        config={"iterations": params.iterations, "converged": params.converged},
    )
