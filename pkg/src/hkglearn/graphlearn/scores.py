"""Importance score matrices and their TSV serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ScoreMatrix:
    """D x S table of nonnegative importance scores.

    ``raw`` optionally carries the untransformed companion values (signed
    log-ratios for naive Bayes, do-operator ratios for the causal
    families). Ranking consumers sort by ``ranking_values`` so floors
    applied for export never collapse rank order.
    """

    diseases: tuple
    symptoms: tuple
    values: np.ndarray
    learner: str
    config: dict = field(default_factory=dict)
    raw: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        d, s = len(self.diseases), len(self.symptoms)
        if self.values.shape != (d, s):
            raise ValueError("score matrix shape does not match vocabulary")
        if not np.isfinite(self.values).all():
            raise ValueError("scores must be finite")
        if (self.values < 0).any():
            raise ValueError("scores must be nonnegative")
        if self.raw is not None:
            self.raw = np.asarray(self.raw, dtype=np.float64)
            if self.raw.shape != (d, s):
                raise ValueError("raw matrix shape does not match vocabulary")
            if not np.isfinite(self.raw).all():
                raise ValueError("raw values must be finite")

    @property
    def ranking_values(self) -> np.ndarray:
        return self.values if self.raw is None else self.raw

    def row(self, disease: str) -> np.ndarray:
        return self.values[self.diseases.index(disease)]


def _write_table(fh, diseases, symptoms, values, header_lines):
    for line in header_lines:
        fh.write(f"# {line}\n")
    fh.write("disease\tsymptom\tscore\n")
    for j, d in enumerate(diseases):
        order = sorted(range(len(symptoms)),
                       key=lambda i: (-values[j, i], symptoms[i]))
        for i in order:
            fh.write(f"{d}\t{symptoms[i]}\t{values[j, i]:.12g}\n")


def save_scores(scores: ScoreMatrix, path, header_lines=()) -> None:
    """Write the full cross product, each disease block sorted by
    descending score then symptom name. A sibling ``<path>.raw.tsv`` is
    written when raw companion values exist."""
    path = str(path)
    with open(path, "w", encoding="utf-8") as fh:
        _write_table(fh, scores.diseases, scores.symptoms, scores.values,
                     header_lines)
    if scores.raw is not None:
        with open(path + ".raw.tsv", "w", encoding="utf-8") as fh:
            _write_table(fh, scores.diseases, scores.symptoms, scores.raw,
                         header_lines)


def _parse_table(lines):
    triples = []
    saw_header = False
    for lineno, rawline in enumerate(lines, start=1):
        line = rawline.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"bad score line {lineno}: {line!r}")
        if not saw_header:
            if parts != ["disease", "symptom", "score"]:
                raise ValueError(f"missing score header at line {lineno}")
            saw_header = True
            continue
        triples.append((parts[0], parts[1], float(parts[2])))
    if not triples:
        raise ValueError("score file holds no rows")

    diseases = tuple(dict.fromkeys(d for d, _, _ in triples))
    symptoms = tuple(sorted({s for _, s, _ in triples}))
    d_idx = {d: j for j, d in enumerate(diseases)}
    s_idx = {s: i for i, s in enumerate(symptoms)}
    values = np.full((len(diseases), len(symptoms)), np.nan)
    for d, s, v in triples:
        if not np.isnan(values[d_idx[d], s_idx[s]]):
            raise ValueError(f"duplicate pair {d!r}/{s!r}")
        values[d_idx[d], s_idx[s]] = v
    if np.isnan(values).any():
        raise ValueError("score file is not a full disease x symptom cross product")
    return diseases, symptoms, values


def parse_scores(lines, learner: str = "loaded") -> ScoreMatrix:
    diseases, symptoms, values = _parse_table(lines)
    return ScoreMatrix(diseases=diseases, symptoms=symptoms, values=values,
                       learner=learner)


def load_scores(path, learner: str = "loaded") -> ScoreMatrix:
    import os
    with open(path, encoding="utf-8") as fh:
        scores = parse_scores(fh, learner=learner)
    raw_path = str(path) + ".raw.tsv"
    if os.path.exists(raw_path):
        with open(raw_path, encoding="utf-8") as fh:
            rdis, rsym, rvals = _parse_table(fh)
        rd = {d: j for j, d in enumerate(rdis)}
        rs = {s: i for i, s in enumerate(rsym)}
        aligned = np.empty_like(scores.values)
        for j, d in enumerate(scores.diseases):
            for i, s in enumerate(scores.symptoms):
                aligned[j, i] = rvals[rd[d], rs[s]]
        scores.raw = aligned
    return scores
