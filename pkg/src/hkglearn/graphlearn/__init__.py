"""Importance-score learners for the disease->symptom graph.

Four families share one output type: per-disease logistic weights,
closed-form naive Bayes log-ratios, noisy-OR failure complements and
do-operator intervention ratios (with a logistic, forest or naive Bayes
predictor behind the interventions). ``learn`` dispatches on a model tag
and owns the per-family demographic encoding.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..cohort import attach_demographics, has_demographics
from ..estimators.bayes import conditional_table
from ..estimators.cv import grid_search_cv
from ..util import derive_seed, parallel_map
from .noisy_or import NoisyOrParams, fit_noisy_or, importance_noisy_or
from .scores import ScoreMatrix, load_scores, parse_scores, save_scores

MODELS = ("lr", "nb", "nor", "causal_lr", "causal_rf", "causal_nb")
NB_LOG_CLAMP = -30.0
CAUSAL_EPS = 1e-6

_CAUSAL_FAMILY = {"causal_lr": "logistic", "causal_rf": "forest", "causal_nb": "nb"}
# encoding and feature base for each model that honors demographics
_DEMO_PLAN = {
    "lr": ("continuous", "x"),
    "nor": ("bracket", "x"),
    "causal_lr": ("continuous", "y"),
    "causal_rf": ("bracket", "y"),
    "causal_nb": ("bracket", "y"),
}


def _target_features(record_set, demo, base: str):
    """Feature block for per-target fits: symptoms (base 'x') or diseases
    (base 'y'), with demographic columns appended when supplied."""
    if demo is not None:
        return demo.values, demo.n_base
    block = record_set.x if base == "x" else record_set.y
    return block.astype(np.float64), block.shape[1]


def importance_lr(record_set, demo=None, seed: int = 0, k: int = 3,
                  threads: int = 1, grid=None) -> ScoreMatrix:
    """Per-disease grid-searched logistic weights, floored at zero.

    Each disease is regressed on every symptom indicator (plus any
    demographic columns); the fitted symptom weights become that row of
    the matrix. Demographic weights never leave the model.
    """
    vocab = record_set.vocabulary
    feats, n_base = _target_features(record_set, demo, "x")
    values = np.zeros((vocab.n_diseases, vocab.n_symptoms))

    def run(j):
        y = record_set.y[:, j].astype(np.float64)
        pos = int(y.sum())
        neg = y.shape[0] - pos
        if pos < k or neg < k:
            return None
        res = grid_search_cv(feats, y, "logistic", grid=grid, k=k,
                             seed=derive_seed(seed, "lr", j))
        return res.model.beta[1:1 + n_base]

    rows = parallel_map(run, range(vocab.n_diseases), threads=threads)
    for j, row in enumerate(rows):
        if row is None:
            warnings.warn(
                f"disease {vocab.diseases[j]!r} has too few records in a "
                "class to cross-validate; scores zeroed")
            continue
        values[j] = np.maximum(0.0, row[:vocab.n_symptoms])
    return ScoreMatrix(diseases=vocab.diseases, symptoms=vocab.symptoms,
                       values=values, learner="lr",
                       config={"seed": seed, "k": k, "demo": demo is not None})


def importance_nb(record_set, alpha: float = 0.0) -> ScoreMatrix:
    """Closed-form log-frequency ratios log p(x|y=1) - log p(x|y=0).

    With alpha 0 a zero count drives the log to -inf; each log term is
    clamped at -30 so the difference stays within +-30. The signed value
    is kept as the raw companion; the exported score floors it at zero.
    """
    vocab = record_set.vocabulary
    d, s = vocab.n_diseases, vocab.n_symptoms
    raw = np.zeros((d, s))
    for j in range(d):
        yj = record_set.y[:, j]
        p1, n = conditional_table(record_set.x, yj, alpha)
        if n[1] == 0 or n[0] == 0:
            warnings.warn(
                f"disease {vocab.diseases[j]!r} observed in "
                f"{int(n[1])}/{int(n.sum())} records; scores zeroed")
            continue
        with np.errstate(divide="ignore"):
            lp1 = np.maximum(np.log(p1[1]), NB_LOG_CLAMP)
            lp0 = np.maximum(np.log(p1[0]), NB_LOG_CLAMP)
        raw[j] = lp1 - lp0
    return ScoreMatrix(diseases=vocab.diseases, symptoms=vocab.symptoms,
                       values=np.maximum(0.0, raw), learner="nb",
                       config={"alpha": alpha}, raw=raw)


def importance_causal(record_set, family: str, demo=None, eps: float = CAUSAL_EPS,
                      seed: int = 0, k: int = 3, threads: int = 1,
                      grid=None) -> ScoreMatrix:
    """Do-operator intervention ratios from a per-symptom predictor.

    For every symptom a predictor p(x | diseases [, demo]) is grid-search
    fitted; the score against disease j compares the mean predicted
    probability with coordinate j forced on versus forced off across the
    observed cohort. Raw ratios are kept; exports are max(0, ratio - 1).
    """
    if family not in ("logistic", "forest", "nb"):
        raise ValueError(f"unknown causal predictor family {family!r}")
    vocab = record_set.vocabulary
    d, s = vocab.n_diseases, vocab.n_symptoms
    feats, _ = _target_features(record_set, demo, "y")
    raw = np.ones((d, s))

    def run(i):
        x = record_set.x[:, i].astype(np.float64)
        pos = int(x.sum())
        neg = x.shape[0] - pos
        if pos < k or neg < k:
            return None
        res = grid_search_cv(feats, x, family, grid=grid, k=k,
                             seed=derive_seed(seed, "causal", family, i))
        model = res.model
        col = np.empty(d)
        for j in range(d):
            forced = np.array(feats, copy=True)
            forced[:, j] = 1.0
            num = float(model.predict_proba(forced).mean())
            forced[:, j] = 0.0
            den = float(model.predict_proba(forced).mean())
            col[j] = num / max(eps, den)
        return col

    cols = parallel_map(run, range(s), threads=threads)
    for i, col in enumerate(cols):
        if col is None:
            warnings.warn(
                f"symptom {vocab.symptoms[i]!r} has too few records in a "
                "class to cross-validate; scores zeroed")
            raw[:, i] = 1.0
            continue
        raw[:, i] = col
    return ScoreMatrix(diseases=vocab.diseases, symptoms=vocab.symptoms,
                       values=np.maximum(0.0, raw - 1.0), learner=f"causal_{family}",
                       config={"seed": seed, "k": k, "eps": eps,
                               "demo": demo is not None}, raw=raw)


def learn(record_set, model: str, demo: bool = False, seed=None,
          threads: int = 1, nor_tol: float = 1e-6, nor_max_iter: int = 500,
          nb_alpha: float = 0.0) -> ScoreMatrix:
    """Dispatch a model tag to its importance constructor."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    if seed is None and model != "nb":
        raise ValueError(f"model {model!r} needs a seed")
    demo_fm = None
    if demo:
        if model == "nb":
            raise ValueError("model 'nb' does not take demographics")
        if not has_demographics(record_set):
            raise ValueError("demographics requested but the records carry none")
        encoding, base = _DEMO_PLAN[model]
        demo_fm = attach_demographics(record_set, encoding, base=base)

    if model == "lr":
        return importance_lr(record_set, demo=demo_fm, seed=seed, threads=threads)
    if model == "nb":
        return importance_nb(record_set, alpha=nb_alpha)
    if model == "nor":
        params = fit_noisy_or(record_set, demo=demo_fm, tol_per_record=nor_tol,
                              max_iter=nor_max_iter, seed=seed)
        out = importance_noisy_or(params)
        out.config.update({"seed": seed, "demo": demo})
        return out
    return importance_causal(record_set, _CAUSAL_FAMILY[model], demo=demo_fm,
                             seed=seed, threads=threads)


__all__ = [
    "MODELS", "NB_LOG_CLAMP", "CAUSAL_EPS",
    "ScoreMatrix", "NoisyOrParams",
    "fit_noisy_or", "importance_noisy_or",
    "importance_lr", "importance_nb", "importance_causal", "learn",
    "save_scores", "load_scores", "parse_scores",
]
