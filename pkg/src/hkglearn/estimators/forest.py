"""Random forest over binary features.

Trees store parallel arrays (feature, left, right, value); leaves hold the
bootstrap positive fraction and predictions average leaf values over
trees. All randomness flows through one 64-bit mix-and-shift stream per
tree, so the compiled and pure-Python kernels grow identical forests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backend import kernels
from ..util import derive_seed


@dataclass
class ForestModel:
    trees: list                 # [(feature i32, left i32, right i32, value f64)]
    max_depth: int
    min_samples_leaf: int
    mtry: int
    seed: int
    feature_names: tuple = ()

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.uint8)
        total = np.zeros(x.shape[0])
        for feature, left, right, value in self.trees:
            total += kernels.tree_predict(feature, left, right, value, x)
        return total / len(self.trees)


def fit_random_forest(
    x,
    y,
    max_depth: int,
    min_samples_leaf: int,
    n_trees: int = 100,
    seed: int = 0,
    feature_names=(),
) -> ForestModel:
    """Fit n_trees bootstrap trees on binary x against binary y."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if not np.isin(x, (0.0, 1.0)).all():
        raise ValueError("forest features must be binary")
    xb = x.astype(np.uint8)
    y = np.asarray(y)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("y must be binary")
    yb = np.ascontiguousarray(y, dtype=np.uint8)
    if xb.ndim != 2 or yb.ndim != 1 or xb.shape[0] != yb.shape[0]:
        raise ValueError("x must be (N,F) and y (N,)")
    if max_depth < 1 or min_samples_leaf < 1 or n_trees < 1:
        raise ValueError("max_depth, min_samples_leaf and n_trees must be >= 1")

    n_features = xb.shape[1]
    mtry = min(n_features, int(np.ceil(np.sqrt(n_features))))
    trees = []
    for t in range(n_trees):
        state = derive_seed(seed, "tree", t)
        trees.append(kernels.build_tree(xb, yb, int(max_depth),
                                        int(min_samples_leaf), mtry, int(state)))
    return ForestModel(trees=trees, max_depth=int(max_depth),
                       min_samples_leaf=int(min_samples_leaf), mtry=mtry,
                       seed=int(seed), feature_names=tuple(feature_names))
