"""Seeded stratified cross-validation and hyperparameter grids.

The three model families share one search loop: every (grid cell, fold)
fit is independent and seeded from (seed, cell index, fold index), so
results do not depend on evaluation order or thread count. Ties on mean
validation AUROC break toward the less complex cell, then grid order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..util import derive_seed, parallel_map, rng_for
from .bayes import fit_naive_bayes
from .forest import fit_random_forest
from .logistic import fit_logistic
from .metrics import auroc

FAMILIES = ("logistic", "forest", "nb")


def logistic_grid() -> list:
    """Both penalty norms crossed with 10 log-spaced C values in [0.001, 10]."""
    cs = np.logspace(np.log10(0.001), np.log10(10.0), 10)
    return [{"penalty": p, "c_value": float(c)} for p in ("l1", "l2") for c in cs]


def forest_grid() -> list:
    """8 log-spaced integer depths in [2, 1024] by 8 log-spaced integer
    minimum leaf sizes in [10, 200]."""
    depths = np.rint(np.logspace(np.log10(2), np.log10(1024), 8)).astype(int)
    leaves = np.rint(np.logspace(np.log10(10), np.log10(200), 8)).astype(int)
    return [{"max_depth": int(d), "min_samples_leaf": int(m)}
            for d in depths for m in leaves]


def nb_grid() -> list:
    return [{"alpha": 1.0}]


def default_grid(family: str) -> list:
    if family == "logistic":
        return logistic_grid()
    if family == "forest":
        return forest_grid()
    if family == "nb":
        return nb_grid()
    raise ValueError(f"unknown family {family!r}")


def complexity_key(family: str, cell: dict) -> tuple:
    """Sort key that orders grid cells from least to most complex."""
    if family == "logistic":
        return (cell["c_value"],)
    if family == "forest":
        return (cell["max_depth"], -cell["min_samples_leaf"])
    return (-cell.get("alpha", 0.0),)


def stratified_kfold(y, k: int, seed: int) -> list:
    """Partition row indices into k folds preserving class balance.

    Positives and negatives are shuffled separately (seeded) and dealt
    round-robin, so every fold's validation set holds both classes.
    """
    y = np.asarray(y).astype(bool)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos < k:
        raise ValueError(f"need at least k={k} positives, have {n_pos}")
    if n_neg < k:
        raise ValueError(f"need at least k={k} negatives, have {n_neg}")
    rng = rng_for(derive_seed(seed, "cv-folds"))
    pos = np.nonzero(y)[0]
    neg = np.nonzero(~y)[0]
    rng.shuffle(pos)
    rng.shuffle(neg)
    folds = [[] for _ in range(k)]
    for i, row in enumerate(pos):
        folds[i % k].append(int(row))
    for i, row in enumerate(neg):
        folds[i % k].append(int(row))
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def _fit_cell(family: str, x, y, cell: dict, seed: int):
    if family == "logistic":
        return fit_logistic(x, y, penalty=cell["penalty"], c_value=cell["c_value"])
    if family == "forest":
        return fit_random_forest(x, y, max_depth=cell["max_depth"],
                                 min_samples_leaf=cell["min_samples_leaf"],
                                 n_trees=cell.get("n_trees", 100), seed=seed)
    return fit_naive_bayes(x, y, alpha=cell["alpha"])


@dataclass
class CVResult:
    family: str
    grid: list
    fold_scores: np.ndarray     # (n_cells, k)
    mean_scores: np.ndarray     # (n_cells,)
    best_index: int
    best_params: dict
    model: object
    k: int
    seed: int


def grid_search_cv(x, y, family: str, grid=None, k: int = 3, seed: int = 0,
                   threads: int = 1) -> CVResult:
    """Select grid-cell hyperparameters by mean validation AUROC, then
    refit the winner on all rows."""
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y)
    if grid is None:
        grid = default_grid(family)
    if not grid:
        raise ValueError("grid must be non-empty")
    folds = stratified_kfold(y, k, seed)
    all_rows = np.arange(y.shape[0])

    jobs = [(ci, fi) for ci in range(len(grid)) for fi in range(k)]

    def run(job):
        ci, fi = job
        val = folds[fi]
        train = np.setdiff1d(all_rows, val, assume_unique=False)
        model = _fit_cell(family, x[train], y[train], grid[ci],
                          derive_seed(seed, "cell", ci, "fold", fi))
        return auroc(y[val], model.predict_proba(x[val]))

    scores = parallel_map(run, jobs, threads=threads)
    fold_scores = np.array(scores, dtype=np.float64).reshape(len(grid), k)
    mean_scores = fold_scores.mean(axis=1)

    best_index = min(
        range(len(grid)),
        key=lambda i: (-mean_scores[i], complexity_key(family, grid[i]), i),
    )
    model = _fit_cell(family, x, y, grid[best_index],
                      derive_seed(seed, "refit", best_index))
    return CVResult(family=family, grid=list(grid), fold_scores=fold_scores,
                    mean_scores=mean_scores, best_index=int(best_index),
                    best_params=dict(grid[best_index]), model=model,
                    k=int(k), seed=int(seed))
