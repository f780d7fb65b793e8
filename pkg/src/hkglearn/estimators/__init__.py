from .bayes import NBModel, conditional_table, fit_naive_bayes
from .cv import (
    CVResult,
    complexity_key,
    default_grid,
    forest_grid,
    grid_search_cv,
    logistic_grid,
    nb_grid,
    stratified_kfold,
)
from .forest import ForestModel, fit_random_forest
from .logistic import (
    LinearModel,
    fit_logistic,
    penalized_grad,
    penalized_objective,
)
from .metrics import auroc

__all__ = [
    "NBModel", "conditional_table", "fit_naive_bayes",
    "CVResult", "complexity_key", "default_grid", "forest_grid",
    "grid_search_cv", "logistic_grid", "nb_grid", "stratified_kfold",
    "ForestModel", "fit_random_forest",
    "LinearModel", "fit_logistic", "penalized_grad", "penalized_objective",
    "auroc",
]
