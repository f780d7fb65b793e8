"""Robustness studies over a learned graph and its cohort.

Four views: per-disease covariate profiles with abnormality flags,
flag-rate comparison between the best- and worst-evaluated diseases,
relearning on demographic subgroups, and per-target cross-validated
predictability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cohort import AGE_BRACKET_NAMES, age_bracket_index
from .estimators.cv import grid_search_cv
from .evaluate import evaluate_scores
from .util import derive_seed, parallel_map

FLAG_COLUMNS = ("count", "disease", "symptom", "age", "female", "any")
PARTITIONS = ("age_brackets", "sex")


@dataclass
class DiseaseCovariates:
    diseases: tuple
    count: np.ndarray           # records with the disease bit set
    mean_diseases: np.ndarray   # mean disease total over those records (self included)
    mean_symptoms: np.ndarray
    mean_age: np.ndarray        # over records with known age; nan when none
    female_frac: np.ndarray     # over records with known sex; nan when none


@dataclass
class AbnormalityTable:
    diseases: tuple
    flags: dict                 # column name -> bool array
    bounds: dict                # column name -> bound(s) actually used

    def row(self, disease: str) -> dict:
        j = self.diseases.index(disease)
        return {c: bool(self.flags[c][j]) for c in FLAG_COLUMNS}


def disease_covariates(record_set) -> DiseaseCovariates:
    y = record_set.y.astype(bool)
    d = y.shape[1]
    dis_tot = record_set.y.sum(axis=1).astype(np.float64)
    sym_tot = record_set.x.sum(axis=1).astype(np.float64)
    age = record_set.age_years
    sex = record_set.sex

    count = y.sum(axis=0).astype(np.int64)
    mean_dis = np.full(d, np.nan)
    mean_sym = np.full(d, np.nan)
    mean_age = np.full(d, np.nan)
    female = np.full(d, np.nan)
    for j in range(d):
        rows = y[:, j]
        if not rows.any():
            continue
        mean_dis[j] = dis_tot[rows].mean()
        mean_sym[j] = sym_tot[rows].mean()
        known_age = rows & ~np.isnan(age)
        if known_age.any():
            mean_age[j] = age[known_age].mean()
        known_sex = rows & (sex >= 0)
        if known_sex.any():
            female[j] = (sex[known_sex] == 1).mean()
    return DiseaseCovariates(
        diseases=record_set.vocabulary.diseases, count=count,
        mean_diseases=mean_dis, mean_symptoms=mean_sym,
        mean_age=mean_age, female_frac=female)


def _bound(values, side: str, feasible_lo=None, feasible_hi=None):
    """mean +- sample SD, replaced by the 16th/84th percentile when the
    bound leaves the covariate's feasible range."""
    vals = np.asarray(values, dtype=np.float64)
    vals = vals[~np.isnan(vals)]
    mean = vals.mean()
    sd = vals.std(ddof=1)
    if side == "low":
        b = mean - sd
        if feasible_lo is not None and b < feasible_lo:
            b = float(np.percentile(vals, 16))
    else:
        b = mean + sd
        if feasible_hi is not None and b > feasible_hi:
            b = float(np.percentile(vals, 84))
    return float(b)


def abnormality_flags(cov: DiseaseCovariates) -> AbnormalityTable:
    """Flag diseases whose covariates sit strictly outside one sample
    standard deviation of the across-disease average.

    Low occurrence count, high co-occurring disease or symptom totals,
    and age or female fraction off in either direction each raise their
    flag; ``any`` is their disjunction. Values exactly on a bound stay
    unflagged. Needs at least two diseases for the SD to exist.
    """
    if len(cov.diseases) < 2:
        raise ValueError("abnormality flags need at least 2 diseases")
    bounds = {
        "count": _bound(cov.count, "low", feasible_lo=0.0),
        "disease": _bound(cov.mean_diseases, "high"),
        "symptom": _bound(cov.mean_symptoms, "high"),
        "age": (_bound(cov.mean_age, "low", feasible_lo=0.0),
                _bound(cov.mean_age, "high")),
        "female": (_bound(cov.female_frac, "low", feasible_lo=0.0),
                   _bound(cov.female_frac, "high", feasible_hi=1.0)),
    }
    with np.errstate(invalid="ignore"):
        flags = {
            "count": cov.count < bounds["count"],
            "disease": cov.mean_diseases > bounds["disease"],
            "symptom": cov.mean_symptoms > bounds["symptom"],
            "age": (cov.mean_age < bounds["age"][0])
            | (cov.mean_age > bounds["age"][1]),
            "female": (cov.female_frac < bounds["female"][0])
            | (cov.female_frac > bounds["female"][1]),
        }
    flags["any"] = (flags["count"] | flags["disease"] | flags["symptom"]
                    | flags["age"] | flags["female"])
    return AbnormalityTable(diseases=cov.diseases, flags=flags, bounds=bounds)


@dataclass
class TopBottomSummary:
    n: int
    top_pct: dict               # flag column -> percentage in [0, 100]
    bottom_pct: dict


def top_bottom_summary(f1_table: dict, table: AbnormalityTable,
                       n: int = 50) -> TopBottomSummary:
    """Flag percentages among the n best-F1 and n worst-F1 diseases."""
    items = sorted(f1_table.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(items) < 2 * n:
        n = len(items) // 2
        warnings.warn(f"fewer than 2n diseases scored; using n={n}")
    if n < 1:
        raise ValueError("need at least 2 scored diseases")
    idx = {d: j for j, d in enumerate(table.diseases)}

    def pct(group):
        out = {}
        for col in FLAG_COLUMNS:
            hits = sum(1 for d, _ in group if table.flags[col][idx[d]])
            out[col] = 100.0 * hits / len(group)
        return out

    return TopBottomSummary(n=n, top_pct=pct(items[:n]), bottom_pct=pct(items[-n:]))


@dataclass
class SubgroupRow:
    name: str
    size: int
    auprc: float | None         # None when skipped or not evaluated
    skipped: bool = False


def partition_records(record_set, partition: str) -> dict:
    """Row-index groups for a demographic partition; rows with the
    demographic missing go to an 'unknown' group (present only when
    non-empty)."""
    if partition not in PARTITIONS:
        raise ValueError(f"partition must be one of {PARTITIONS}")
    groups: dict[str, list] = {}
    if partition == "sex":
        groups["female"] = np.nonzero(record_set.sex == 1)[0].tolist()
        groups["male"] = np.nonzero(record_set.sex == 0)[0].tolist()
        unknown = np.nonzero(record_set.sex < 0)[0].tolist()
    else:
        age = record_set.age_years
        known = ~np.isnan(age)
        bracket = np.full(age.shape, -1, dtype=np.int64)
        bracket[known] = [age_bracket_index(a) for a in age[known]]
        for b, name in enumerate(AGE_BRACKET_NAMES):
            groups[name] = np.nonzero(bracket == b)[0].tolist()
        unknown = np.nonzero(~known)[0].tolist()
    if unknown:
        groups["unknown"] = unknown
    return groups


def subgroup_learn(record_set, partition: str, model: str, reference,
                   seed: int, min_size: int = 100, threads: int = 1,
                   b_mode: str = "all") -> list:
    """Relearn and evaluate per demographic subgroup.

    Groups smaller than min_size (and the unknown-demographics group) are
    reported with their size but no area value.
    """
    from . import graphlearn

    groups = partition_records(record_set, partition)
    if not any(groups.values()):
        raise ValueError("partition produced no rows")
    rows: list[SubgroupRow] = []
    for name, indices in groups.items():
        size = len(indices)
        if name == "unknown":
            if size:
                rows.append(SubgroupRow(name=name, size=size, auprc=None,
                                        skipped=True))
            continue
        if size < min_size:
            warnings.warn(f"subgroup {name!r} has {size} records; skipped")
            rows.append(SubgroupRow(name=name, size=size, auprc=None,
                                    skipped=True))
            continue
        sub = record_set.subset(indices)
        scores = graphlearn.learn(sub, model, seed=derive_seed(seed, "subgroup", name),
                                  threads=threads)
        report = evaluate_scores(scores, reference, b_mode=b_mode)
        rows.append(SubgroupRow(name=name, size=size, auprc=report.auprc))
    return rows


@dataclass
class PredictabilityRow:
    target: str
    family: str
    auroc: float
    n_pos: int


def predictability(record_set, target_kind: str, family: str, seed: int,
                   k: int = 3, threads: int = 1, grid=None) -> list:
    """Per-target best-grid-cell mean CV AUROC.

    Disease targets are predicted from symptom indicators and symptom
    targets from disease indicators; targets with under k records in
    either class are skipped with a warning.
    """
    if target_kind not in ("disease", "symptom"):
        raise ValueError("target_kind must be 'disease' or 'symptom'")
    if target_kind == "disease":
        targets = record_set.vocabulary.diseases
        labels, feats = record_set.y, record_set.x.astype(np.float64)
    else:
        targets = record_set.vocabulary.symptoms
        labels, feats = record_set.x, record_set.y.astype(np.float64)

    def run(t):
        y = labels[:, t].astype(np.float64)
        pos = int(y.sum())
        if pos < k or y.shape[0] - pos < k:
            return None
        res = grid_search_cv(feats, y, family, grid=grid, k=k,
                             seed=derive_seed(seed, "predict", target_kind, t))
        return float(res.mean_scores[res.best_index]), pos

    results = parallel_map(run, range(len(targets)), threads=threads)
    rows: list[PredictabilityRow] = []
    for t, res in enumerate(results):
        if res is None:
            warnings.warn(f"target {targets[t]!r} lacks class support; skipped")
            continue
        auroc_val, pos = res
        rows.append(PredictabilityRow(target=targets[t], family=family,
                                      auroc=auroc_val, n_pos=pos))
    return rows
