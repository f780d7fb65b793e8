"""Cohort construction from concept-level note records.

Input is the tab-separated records format: one note per line with
``patient_id  date  age_years  sex  concepts`` where concepts are
semicolon-separated tokens prefixed ``d:`` (disease) or ``s:`` (symptom).
Notes become model-ready record sets at one of three granularities:
every note separately, 30-day episodes, or whole patient timelines.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_GAP_DAYS = 30
DEFAULT_MIN_DISEASE_COUNT = 100
DEFAULT_MIN_SYMPTOM_COUNT = 10
DEFAULT_EXCLUDED_SYMPTOMS = ("pain",)

AGE_BRACKETS = ((0, 21), (21, 45), (45, 65), (65, 85), (85, None))
AGE_BRACKET_NAMES = ("age_lt21", "age_21_44", "age_45_64", "age_65_84", "age_85_plus")

AGGREGATION_MODES = ("single", "episode", "patient")
DEMO_ENCODINGS = ("none", "continuous", "bracket")


class RecordsFormatError(ValueError):
    """Malformed line in a records file; message carries the line number."""


@dataclass(frozen=True)
class RawNote:
    patient_id: str
    date: datetime.date
    concepts: frozenset[str]  # tokens like "d:pneumonia", "s:cough"
    age_years: int | None = None
    sex: str | None = None  # "female" | "male"


@dataclass
class Vocabulary:
    """Ordered disease and symptom identifier lists; ordering is stable for
    the lifetime of a run and indexes every binary vector."""

    diseases: tuple[str, ...]
    symptoms: tuple[str, ...]
    disease_index: dict[str, int] = field(init=False, repr=False)
    symptom_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.diseases = tuple(self.diseases)
        self.symptoms = tuple(self.symptoms)
        if len(set(self.diseases)) != len(self.diseases):
            raise ValueError("duplicate disease identifiers in vocabulary")
        if len(set(self.symptoms)) != len(self.symptoms):
            raise ValueError("duplicate symptom identifiers in vocabulary")
        overlap = set(self.diseases) & set(self.symptoms)
        if overlap:
            raise ValueError(f"identifiers appear as both disease and symptom: {sorted(overlap)}")
        self.disease_index = {d: j for j, d in enumerate(self.diseases)}
        self.symptom_index = {s: i for i, s in enumerate(self.symptoms)}

    @property
    def n_diseases(self) -> int:
        return len(self.diseases)

    @property
    def n_symptoms(self) -> int:
        return len(self.symptoms)


@dataclass
class RecordSet:
    """Binary co-occurrence records over a fixed vocabulary.

    x is (N, S) symptom indicators, y is (N, D) disease indicators, both
    uint8. Unknown age is NaN; sex is 1 female, 0 male, -1 unknown.
    """

    vocabulary: Vocabulary
    x: np.ndarray
    y: np.ndarray
    age_years: np.ndarray
    sex: np.ndarray
    patient_ids: list[str]
    source_note_counts: np.ndarray

    def __post_init__(self):
        n = self.x.shape[0]
        if n < 1:
            raise ValueError("record set must contain at least one record")
        if self.x.shape != (n, self.vocabulary.n_symptoms):
            raise ValueError("x shape does not match vocabulary")
        if self.y.shape != (n, self.vocabulary.n_diseases):
            raise ValueError("y shape does not match vocabulary")
        if (self.source_note_counts < 1).any():
            raise ValueError("every record must come from at least one note")

    @property
    def n_records(self) -> int:
        return self.x.shape[0]

    def subset(self, indices) -> "RecordSet":
        indices = np.asarray(indices)
        return RecordSet(
            vocabulary=self.vocabulary,
            x=self.x[indices],
            y=self.y[indices],
            age_years=self.age_years[indices],
            sex=self.sex[indices],
            patient_ids=[self.patient_ids[i] for i in indices],
            source_note_counts=self.source_note_counts[indices],
        )


@dataclass
class FeatureMatrix:
    """A base block (x or y) with optional demographic columns appended.

    Column layout: base columns in vocabulary order, then for
    ``continuous`` encoding ``age_years`` and ``sex_female`` (female=1),
    or for ``bracket`` encoding five age-bracket indicators and
    ``sex_female`` / ``sex_male``. Records with unknown age or sex get
    all-zero demographic columns.
    """

    values: np.ndarray
    column_names: list[str]
    encoding: str
    n_base: int
    base: str  # "x" or "y"

    @property
    def demo_columns(self) -> np.ndarray:
        return self.values[:, self.n_base:]


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------

_SEX_TOKENS = {"F": "female", "M": "male"}


def parse_records(lines) -> list[RawNote]:
    """Parse an iterable of records-file lines into RawNote objects.

    Lines starting with '#' and blank lines are skipped; line numbers in
    error messages count all physical lines. Unknown concepts are kept
    verbatim (vocabulary filtering happens later).
    """
    notes = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise RecordsFormatError(
                f"expected 5 tab-separated fields, got {len(fields)} at line {lineno}"
            )
        patient_id, date_s, age_s, sex_s, concepts_s = fields
        if not patient_id:
            raise RecordsFormatError(f"empty patient_id at line {lineno}")
        try:
            date = datetime.date.fromisoformat(date_s)
        except ValueError:
            raise RecordsFormatError(f"invalid date {date_s!r} at line {lineno}") from None
        age = None
        if age_s:
            try:
                age = int(age_s)
            except ValueError:
                raise RecordsFormatError(f"invalid age {age_s!r} at line {lineno}") from None
            if age < 0:
                raise RecordsFormatError(f"negative age at line {lineno}")
        sex = None
        if sex_s:
            if sex_s not in _SEX_TOKENS:
                raise RecordsFormatError(f"invalid sex token {sex_s!r} at line {lineno}")
            sex = _SEX_TOKENS[sex_s]
        concepts = set()
        if concepts_s:
            for tok in concepts_s.split(";"):
                if len(tok) < 3 or tok[:2] not in ("d:", "s:"):
                    raise RecordsFormatError(f"invalid concept token {tok!r} at line {lineno}")
                concepts.add(tok)
        notes.append(RawNote(patient_id, date, frozenset(concepts), age, sex))
    return notes


def read_records(path) -> list[RawNote]:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh)


def write_records(notes, path, header_lines=()) -> None:
    """Serialize notes back to the records format (lossless round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for n in notes:
            age = "" if n.age_years is None else str(n.age_years)
            sex = "" if n.sex is None else ("F" if n.sex == "female" else "M")
            concepts = ";".join(sorted(n.concepts))
            fh.write(f"{n.patient_id}\t{n.date.isoformat()}\t{age}\t{sex}\t{concepts}\n")


# ----------------------------------------------------------------------
# vocabulary support filter
# ----------------------------------------------------------------------

def filter_support(
    notes,
    min_disease_count: int = DEFAULT_MIN_DISEASE_COUNT,
    min_symptom_count: int = DEFAULT_MIN_SYMPTOM_COUNT,
    exclude_symptoms=DEFAULT_EXCLUDED_SYMPTOMS,
) -> Vocabulary:
    """Build the vocabulary of sufficiently supported concepts.

    Support is counted at the note level (number of notes mentioning the
    concept), before any aggregation. Thresholds are inclusive. Symptoms
    on the exclusion list are dropped regardless of support.
    """
    excluded = set(exclude_symptoms or ())
    d_counts: dict[str, int] = {}
    s_counts: dict[str, int] = {}
    for note in notes:
        for tok in note.concepts:
            name = tok[2:]
            if tok.startswith("d:"):
                d_counts[name] = d_counts.get(name, 0) + 1
            else:
                s_counts[name] = s_counts.get(name, 0) + 1
    diseases = sorted(d for d, c in d_counts.items() if c >= min_disease_count)
    symptoms = sorted(
        s for s, c in s_counts.items() if c >= min_symptom_count and s not in excluded
    )
    if not diseases or not symptoms:
        raise ValueError(
            "no concepts survive the support filter "
            f"(diseases: {len(diseases)}, symptoms: {len(symptoms)})"
        )
    return Vocabulary(tuple(diseases), tuple(symptoms))


# ----------------------------------------------------------------------
# episode segmentation
# ----------------------------------------------------------------------

def segment_episodes(notes, gap_days: int = DEFAULT_GAP_DAYS) -> list[list[RawNote]]:
    """Split one patient's notes into episodes.

    Notes are sorted by date (stable, so same-day notes keep input order);
    a new episode starts when the gap to the previous note exceeds
    gap_days. A gap of exactly gap_days stays within the episode.
    """
    ordered = sorted(notes, key=lambda n: n.date)
    episodes: list[list[RawNote]] = []
    for note in ordered:
        if episodes and (note.date - episodes[-1][-1].date).days <= gap_days:
            episodes[-1].append(note)
        else:
            episodes.append([note])
    return episodes


# ----------------------------------------------------------------------
# aggregation
# ----------------------------------------------------------------------

def _vectorize(group, vocab):
    """OR the in-vocabulary concepts of a note group into (x, y) rows."""
    x = np.zeros(vocab.n_symptoms, dtype=np.uint8)
    y = np.zeros(vocab.n_diseases, dtype=np.uint8)
    for note in group:
        for tok in note.concepts:
            name = tok[2:]
            if tok.startswith("d:"):
                j = vocab.disease_index.get(name)
                if j is not None:
                    y[j] = 1
            else:
                i = vocab.symptom_index.get(name)
                if i is not None:
                    x[i] = 1
    return x, y


def _group_demographics(group):
    # age at the earliest member note; first known sex in note order
    age = group[0].age_years
    sex = next((n.sex for n in group if n.sex is not None), None)
    return age, sex


def aggregate(notes, vocabulary: Vocabulary, mode: str = "single",
              gap_days: int = DEFAULT_GAP_DAYS) -> RecordSet:
    """Aggregate notes into a RecordSet at the chosen granularity.

    single: one record per note. episode: notes within gap_days merge into
    one record (concepts ORed). patient: one record per patient. Records
    are ordered by patient id, then time, so output is deterministic.
    """
    if mode not in AGGREGATION_MODES:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    by_patient: dict[str, list[RawNote]] = {}
    for n in notes:
        by_patient.setdefault(n.patient_id, []).append(n)

    groups: list[list[RawNote]] = []
    for pid in sorted(by_patient):
        ordered = sorted(by_patient[pid], key=lambda n: n.date)
        if mode == "single":
            groups.extend([n] for n in ordered)
        elif mode == "episode":
            groups.extend(segment_episodes(by_patient[pid], gap_days))
        else:
            groups.append(ordered)

    if not groups:
        raise ValueError("no records to aggregate")

    n = len(groups)
    x = np.zeros((n, vocabulary.n_symptoms), dtype=np.uint8)
    y = np.zeros((n, vocabulary.n_diseases), dtype=np.uint8)
    age = np.full(n, np.nan)
    sex = np.full(n, -1, dtype=np.int8)
    pids = []
    counts = np.zeros(n, dtype=np.int64)
    for r, group in enumerate(groups):
        x[r], y[r] = _vectorize(group, vocabulary)
        a, s = _group_demographics(group)
        if a is not None:
            age[r] = a
        if s is not None:
            sex[r] = 1 if s == "female" else 0
        pids.append(group[0].patient_id)
        counts[r] = len(group)
    return RecordSet(vocabulary, x, y, age, sex, pids, counts)


# ----------------------------------------------------------------------
# demographic feature columns
# ----------------------------------------------------------------------

def age_bracket_index(age: float) -> int | None:
    """Bracket index for an age in years, or None for unknown age.

    Brackets are half-open: [0,21), [21,45), [45,65), [65,85), [85,inf).
    """
    if age is None or (isinstance(age, float) and math.isnan(age)):
        return None
    for k, (lo, hi) in enumerate(AGE_BRACKETS):
        if age >= lo and (hi is None or age < hi):
            return k
    return None


def demographic_columns(record_set: RecordSet, encoding: str):
    """Demographic columns and names for the chosen encoding."""
    if encoding not in DEMO_ENCODINGS:
        raise ValueError(f"unknown demographic encoding {encoding!r}")
    n = record_set.n_records
    if encoding == "none":
        return np.zeros((n, 0)), []
    age = record_set.age_years
    sex = record_set.sex
    if encoding == "continuous":
        cols = np.zeros((n, 2))
        known = ~np.isnan(age)
        cols[known, 0] = age[known]
        cols[sex == 1, 1] = 1.0
        return cols, ["age_years", "sex_female"]
    cols = np.zeros((n, 7))
    for r in range(n):
        k = age_bracket_index(age[r])
        if k is not None:
            cols[r, k] = 1.0
    cols[sex == 1, 5] = 1.0
    cols[sex == 0, 6] = 1.0
    return cols, list(AGE_BRACKET_NAMES) + ["sex_female", "sex_male"]


def attach_demographics(record_set: RecordSet, encoding: str, base: str = "x") -> FeatureMatrix:
    """Build a feature matrix from the x or y block plus demographic columns."""
    if base not in ("x", "y"):
        raise ValueError("base must be 'x' or 'y'")
    block = record_set.x if base == "x" else record_set.y
    base_names = list(
        record_set.vocabulary.symptoms if base == "x" else record_set.vocabulary.diseases
    )
    demo, demo_names = demographic_columns(record_set, encoding)
    values = np.hstack([block.astype(np.float64), demo])
    return FeatureMatrix(values, base_names + demo_names, encoding, block.shape[1], base)


def has_demographics(record_set: RecordSet) -> bool:
    return bool((~np.isnan(record_set.age_years)).any() or (record_set.sex >= 0).any())
