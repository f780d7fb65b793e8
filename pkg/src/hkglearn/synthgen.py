"""Synthetic cohort generation from a known noisy-OR ground truth.

A TruthSpec fixes disease priors, per-symptom leak probabilities and the
disease->symptom failure matrix (failure 1.0 means non-edge). Patients are
sampled independently: diseases from their priors (optionally mixed through
shared comorbidity latents), symptoms from the noisy-OR activation law

    P(symptom on | active diseases) = 1 - (1 - leak) * prod(failure over active)

and the active concepts are scattered across a sampled note timeline, so
the corpus exercises the full ingestion pipeline and every aggregation
granularity. Each patient draws from a generator seeded by (seed, patient
index), so parallel generation reproduces serial output byte for byte.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field

import numpy as np

from .cohort import RawNote
from .kgraph import KnowledgeGraph

BASE_DATE = datetime.date(2008, 1, 1)


class TruthSpecError(ValueError):
    """Invalid truth specification (range violation or parse failure)."""


@dataclass
class Distribution:
    """Integer-valued sampling distribution: fixed K | uniform LO HI |
    geometric P (support starting at 1)."""

    kind: str
    params: tuple[float, ...]

    def sample(self, rng: np.random.Generator) -> int:
        if self.kind == "fixed":
            return int(self.params[0])
        if self.kind == "uniform":
            lo, hi = int(self.params[0]), int(self.params[1])
            return int(rng.integers(lo, hi + 1))
        return int(rng.geometric(self.params[0]))

    @classmethod
    def parse(cls, text: str) -> "Distribution":
        parts = text.split()
        kind = parts[0]
        if kind == "fixed" and len(parts) == 2:
            return cls("fixed", (float(parts[1]),))
        if kind == "uniform" and len(parts) == 3:
            lo, hi = float(parts[1]), float(parts[2])
            if lo > hi:
                raise TruthSpecError(f"uniform bounds out of order: {text!r}")
            return cls("uniform", (lo, hi))
        if kind == "geometric" and len(parts) == 2:
            p = float(parts[1])
            if not 0 < p <= 1:
                raise TruthSpecError(f"geometric p out of range: {text!r}")
            return cls("geometric", (p,))
        raise TruthSpecError(f"cannot parse distribution {text!r}")

    def serialize(self) -> str:
        vals = " ".join(f"{v:g}" for v in self.params)
        return f"{self.kind} {vals}"


@dataclass
class ComorbidGroup:
    """Shared-latent disease mixing: with probability rho the latent is
    active and every member disease occurs with probability override."""

    rho: float
    override: float
    members: tuple[str, ...]


@dataclass
class TruthSpec:
    diseases: tuple[str, ...]
    symptoms: tuple[str, ...]
    priors: np.ndarray          # (D,) in (0,1)
    leak: np.ndarray            # (S,) in [0,1)
    failure: np.ndarray         # (D,S) in (0,1]; 1.0 exactly for non-edges
    notes_per_patient: Distribution = field(
        default_factory=lambda: Distribution("uniform", (1, 4)))
    gap_days: Distribution = field(
        default_factory=lambda: Distribution("uniform", (1, 40)))
    start_day_span: int = 3650
    female_fraction: float = 0.5
    age_mean: float = 45.0
    age_sd: float = 18.0
    age_shift: dict[str, float] = field(default_factory=dict)
    sex_logit: dict[str, float] = field(default_factory=dict)
    comorbid_groups: list[ComorbidGroup] = field(default_factory=list)

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=np.float64)
        self.leak = np.asarray(self.leak, dtype=np.float64)
        self.failure = np.asarray(self.failure, dtype=np.float64)
        d, s = len(self.diseases), len(self.symptoms)
        if self.priors.shape != (d,):
            raise TruthSpecError("priors length does not match diseases")
        if self.leak.shape != (s,):
            raise TruthSpecError("leak length does not match symptoms")
        if self.failure.shape != (d, s):
            raise TruthSpecError("failure matrix shape does not match vocabulary")
        if ((self.priors <= 0) | (self.priors >= 1)).any():
            raise TruthSpecError("disease priors must lie in (0,1)")
        if ((self.leak < 0) | (self.leak >= 1)).any():
            raise TruthSpecError("leak probabilities must lie in [0,1)")
        if ((self.failure <= 0) | (self.failure > 1)).any():
            raise TruthSpecError("failure probabilities must lie in (0,1]")
        if not 0 < self.female_fraction < 1:
            raise TruthSpecError("female fraction must lie in (0,1)")
        for g in self.comorbid_groups:
            if not 0 <= g.rho <= 1 or not 0 < g.override < 1:
                raise TruthSpecError("comorbid group parameters out of range")
            for m in g.members:
                if m not in self.diseases:
                    raise TruthSpecError(f"comorbid member {m!r} not a disease")
        for name in list(self.age_shift) + list(self.sex_logit):
            if name not in self.diseases:
                raise TruthSpecError(f"demographic shift for unknown disease {name!r}")

    @property
    def n_diseases(self) -> int:
        return len(self.diseases)

    @property
    def n_symptoms(self) -> int:
        return len(self.symptoms)

    def edge_set(self) -> KnowledgeGraph:
        edges = set()
        for j, d in enumerate(self.diseases):
            for i, s in enumerate(self.symptoms):
                if self.failure[j, i] < 1.0:
                    edges.add((d, s))
        return KnowledgeGraph(frozenset(edges))


# ----------------------------------------------------------------------
# spec file format
# ----------------------------------------------------------------------

def parse_truth_spec(lines) -> TruthSpec:
    """Parse the key-value truth-spec format.

    Required keys: ``diseases:``, ``symptoms:`` (whitespace-separated ids),
    ``prior: NAME P`` per disease, and ``edge: DISEASE SYMPTOM F`` per
    edge (failure probability in (0,1); unlisted pairs are non-edges).
    Optional: ``leak: NAME P`` (default 0), ``notes-per-patient: DIST``,
    ``gap-days: DIST``, ``age: MEAN SD``, ``age-shift: DISEASE DELTA``,
    ``sex-logit: DISEASE DELTA``, ``female-fraction: P``,
    ``start-day-span: DAYS``, ``comorbid: RHO OVERRIDE D1 D2 ...``.
    '#' lines are comments.
    """
    diseases: list[str] = []
    symptoms: list[str] = []
    priors: dict[str, float] = {}
    leaks: dict[str, float] = {}
    edges: list[tuple[str, str, float]] = []
    kw: dict[str, str] = {}
    age_shift: dict[str, float] = {}
    sex_logit: dict[str, float] = {}
    groups: list[ComorbidGroup] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise TruthSpecError(f"missing ':' at line {lineno}")
        key, _, rest = line.partition(":")
        key = key.strip()
        rest = rest.strip()
        try:
            if key == "diseases":
                diseases.extend(rest.split())
            elif key == "symptoms":
                symptoms.extend(rest.split())
            elif key == "prior":
                name, val = rest.split()
                priors[name] = float(val)
            elif key == "leak":
                name, val = rest.split()
                leaks[name] = float(val)
            elif key == "edge":
                d, s, val = rest.split()
                edges.append((d, s, float(val)))
            elif key == "age":
                mean, sd = rest.split()
                kw["age_mean"], kw["age_sd"] = mean, sd
            elif key == "age-shift":
                name, val = rest.split()
                age_shift[name] = float(val)
            elif key == "sex-logit":
                name, val = rest.split()
                sex_logit[name] = float(val)
            elif key == "comorbid":
                parts = rest.split()
                groups.append(ComorbidGroup(float(parts[0]), float(parts[1]),
                                            tuple(parts[2:])))
            elif key in ("notes-per-patient", "gap-days", "female-fraction",
                         "start-day-span"):
                kw[key] = rest
            else:
                raise TruthSpecError(f"unknown key {key!r} at line {lineno}")
        except (ValueError, IndexError):
            raise TruthSpecError(f"cannot parse line {lineno}: {line!r}") from None

    if not diseases or not symptoms:
        raise TruthSpecError("spec must list diseases and symptoms")
    missing = [d for d in diseases if d not in priors]
    if missing:
        raise TruthSpecError(f"missing priors for: {missing}")

    d_idx = {d: j for j, d in enumerate(diseases)}
    s_idx = {s: i for i, s in enumerate(symptoms)}
    failure = np.ones((len(diseases), len(symptoms)))
    for d, s, f in edges:
        if d not in d_idx or s not in s_idx:
            raise TruthSpecError(f"edge references unknown concept: {d} -> {s}")
        if not 0 < f < 1:
            raise TruthSpecError(f"edge failure probability must lie in (0,1): {d} -> {s}")
        failure[d_idx[d], s_idx[s]] = f

    spec = TruthSpec(
        diseases=tuple(diseases),
        symptoms=tuple(symptoms),
        priors=np.array([priors[d] for d in diseases]),
        leak=np.array([leaks.get(s, 0.0) for s in symptoms]),
        failure=failure,
        age_shift=age_shift,
        sex_logit=sex_logit,
        comorbid_groups=groups,
    )
    if "notes-per-patient" in kw:
        spec.notes_per_patient = Distribution.parse(kw["notes-per-patient"])
    if "gap-days" in kw:
        spec.gap_days = Distribution.parse(kw["gap-days"])
    if "female-fraction" in kw:
        spec.female_fraction = float(kw["female-fraction"])
    if "start-day-span" in kw:
        spec.start_day_span = int(kw["start-day-span"])
    if "age_mean" in kw:
        spec.age_mean = float(kw["age_mean"])
        spec.age_sd = float(kw["age_sd"])
    spec.__post_init__()
    return spec


def read_truth_spec(path) -> TruthSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_truth_spec(fh)


def write_truth_spec(spec: TruthSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("diseases: " + " ".join(spec.diseases) + "\n")
        fh.write("symptoms: " + " ".join(spec.symptoms) + "\n")
        for j, d in enumerate(spec.diseases):
            fh.write(f"prior: {d} {spec.priors[j]:g}\n")
        for i, s in enumerate(spec.symptoms):
            if spec.leak[i] > 0:
                fh.write(f"leak: {s} {spec.leak[i]:g}\n")
        for j, d in enumerate(spec.diseases):
            for i, s in enumerate(spec.symptoms):
                if spec.failure[j, i] < 1.0:
                    fh.write(f"edge: {d} {s} {spec.failure[j, i]:g}\n")
        fh.write(f"notes-per-patient: {spec.notes_per_patient.serialize()}\n")
        fh.write(f"gap-days: {spec.gap_days.serialize()}\n")
        fh.write(f"age: {spec.age_mean:g} {spec.age_sd:g}\n")
        fh.write(f"female-fraction: {spec.female_fraction:g}\n")
        fh.write(f"start-day-span: {spec.start_day_span}\n")
        for name, v in spec.age_shift.items():
            fh.write(f"age-shift: {name} {v:g}\n")
        for name, v in spec.sex_logit.items():
            fh.write(f"sex-logit: {name} {v:g}\n")
        for g in spec.comorbid_groups:
            fh.write(f"comorbid: {g.rho:g} {g.override:g} " + " ".join(g.members) + "\n")


# ----------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------

def _patient_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(index))))


def sample_patient(spec: TruthSpec, seed: int, index: int) -> list[RawNote]:
    """Sample one patient's notes. The draw order below is fixed; changing
    it changes every downstream byte."""
    rng = _patient_rng(seed, index)
    d, s = spec.n_diseases, spec.n_symptoms

    prob = spec.priors.copy()
    for g in spec.comorbid_groups:
        if rng.random() < g.rho:
            for m in g.members:
                prob[spec.diseases.index(m)] = g.override
    y = rng.random(d) < prob

    p_sym = 1.0 - (1.0 - spec.leak) * np.prod(spec.failure[y], axis=0)
    x = rng.random(s) < p_sym

    age = spec.age_mean + spec.age_sd * rng.standard_normal()
    for name, delta in spec.age_shift.items():
        if y[spec.diseases.index(name)]:
            age += delta
    age = int(np.clip(round(age), 0, 105))

    logit = math.log(spec.female_fraction / (1.0 - spec.female_fraction))
    for name, delta in spec.sex_logit.items():
        if y[spec.diseases.index(name)]:
            logit += delta
    female = rng.random() < 1.0 / (1.0 + math.exp(-logit))

    n_notes = max(1, spec.notes_per_patient.sample(rng))
    start = int(rng.integers(0, spec.start_day_span))
    days = [start]
    for _ in range(n_notes - 1):
        days.append(days[-1] + max(0, spec.gap_days.sample(rng)))

    note_concepts: list[set[str]] = [set() for _ in range(n_notes)]
    for j in np.nonzero(y)[0]:
        note_concepts[int(rng.integers(0, n_notes))].add("d:" + spec.diseases[j])
    for i in np.nonzero(x)[0]:
        note_concepts[int(rng.integers(0, n_notes))].add("s:" + spec.symptoms[i])

    pid = f"p{index:07d}"
    sex = "female" if female else "male"
    return [
        RawNote(pid, BASE_DATE + datetime.timedelta(days=day), frozenset(conc), age, sex)
        for day, conc in zip(days, note_concepts)
    ]


def sample_cohort(spec: TruthSpec, n_patients: int, seed: int):
    """Sample a cohort; returns (notes, truth_graph).

    Identical (spec, n_patients, seed) always produce identical output.
    """
    if n_patients < 1:
        raise ValueError("n_patients must be >= 1")
    notes: list[RawNote] = []
    for index in range(n_patients):
        notes.extend(sample_patient(spec, seed, index))
    return notes, spec.edge_set()
