"""Bipartite disease->symptom graphs and edge selection from score matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KnowledgeGraph:
    """An edge set of (disease, symptom) pairs."""

    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for e in self.edges:
            if not (isinstance(e, tuple) and len(e) == 2):
                raise ValueError(f"edge must be a (disease, symptom) pair: {e!r}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def diseases(self) -> list[str]:
        return sorted({d for d, _ in self.edges})

    def symptoms_of(self, disease: str) -> set[str]:
        return {s for d, s in self.edges if d == disease}

    def edge_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for d, _ in self.edges:
            counts[d] = counts.get(d, 0) + 1
        return counts

    def restrict(self, diseases, symptoms) -> "KnowledgeGraph":
        """Drop edges whose endpoints fall outside the given vocabularies."""
        dset, sset = set(diseases), set(symptoms)
        return KnowledgeGraph(frozenset(
            (d, s) for d, s in self.edges if d in dset and s in sset))


def serialize_graph(graph: KnowledgeGraph, path, header_lines=()) -> None:
    """Write one tab-separated 'disease<TAB>symptom' line per edge, sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for d, s in sorted(graph.edges):
            fh.write(f"{d}\t{s}\n")


def parse_graph(lines) -> KnowledgeGraph:
    edges = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValueError(f"bad edge line {lineno}: {line!r}")
        edge = (parts[0], parts[1])
        if edge in edges:
            raise ValueError(f"duplicate edge at line {lineno}: {line!r}")
        edges.add(edge)
    return KnowledgeGraph(frozenset(edges))


def read_graph(path) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh)


def select_edges(scores, k=None, reference=None) -> KnowledgeGraph:
    """Threshold a ScoreMatrix into a graph.

    Exactly one of ``k`` (edges per disease) or ``reference`` (match each
    disease's reference edge count; diseases absent from the reference get
    none) must be given. Per disease the top-scoring symptoms win; ties
    break by symptom name so selection is deterministic.
    """
    if (k is None) == (reference is None):
        raise ValueError("pass exactly one of k or reference")
    ref_counts = reference.edge_counts() if reference is not None else None
    if ref_counts is not None:
        missing = sorted(set(ref_counts) - set(scores.diseases))
        if missing:
            warnings.warn(
                f"reference diseases absent from scores, skipped: {missing}")

    vals = scores.ranking_values
    edges = set()
    for j, disease in enumerate(scores.diseases):
        if ref_counts is None:
            budget = int(k)
        else:
            budget = ref_counts.get(disease, 0)
        if budget <= 0:
            continue
        order = sorted(range(len(scores.symptoms)),
                       key=lambda i: (-vals[j, i], scores.symptoms[i]))
        for i in order[:budget]:
            edges.add((disease, scores.symptoms[i]))
    return KnowledgeGraph(frozenset(edges))
