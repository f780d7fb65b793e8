"""F1 and precision-recall evaluation of scores against a reference graph.

The protocol is rank-based: per disease only the top-E_j scores survive
(E_j = that disease's reference edge count), everything else is zeroed,
and the surviving positive scores are pooled into one threshold sweep.
The curve is closed with a terminal point at recall 1 whose precision is
the reference prevalence B, then integrated by trapezoid over recall.

B defaults to (reference edges) / (D*S), the chance that a uniformly
random candidate pair is a reference edge. ``b_mode="pool"`` divides by
the retained-pool size instead; with reference-matched retention that
pool is about as large as the reference itself, so B degenerates toward
1 and is only useful for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kgraph import KnowledgeGraph, parse_graph

B_MODES = ("all", "pool")


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float


@dataclass
class EvalReport:
    auprc: float
    f1_by_disease: dict
    b: float
    points: list
    degenerate: bool
    config: dict = field(default_factory=dict)

    @property
    def mean_f1(self) -> float:
        if not self.f1_by_disease:
            return float("nan")
        return float(np.mean(list(self.f1_by_disease.values())))


def _restricted(scores, reference: KnowledgeGraph) -> KnowledgeGraph:
    if reference.n_edges == 0:
        raise ValueError("reference graph is empty")
    ref = reference.restrict(scores.diseases, scores.symptoms)
    if ref.n_edges == 0:
        raise ValueError("no reference edge touches the scored vocabulary")
    return ref


def _row_order(scores, j: int) -> list:
    vals = scores.ranking_values
    return sorted(range(len(scores.symptoms)),
                  key=lambda i: (-vals[j, i], scores.symptoms[i]))


def f1_per_disease(scores, reference: KnowledgeGraph, budget="ref") -> dict:
    """F1 per disease after per-row edge selection.

    ``budget`` is "ref" (select as many edges as the reference holds for
    that disease) or a fixed integer per-disease count. Diseases without
    reference edges are left out of the table.
    """
    ref = _restricted(scores, reference)
    counts = ref.edge_counts()
    out: dict[str, float] = {}
    for j, disease in enumerate(scores.diseases):
        e_j = counts.get(disease, 0)
        if e_j == 0:
            continue
        take = e_j if budget == "ref" else int(budget)
        order = _row_order(scores, j)[:take]
        ref_syms = ref.symptoms_of(disease)
        tp = sum(1 for i in order if scores.symptoms[i] in ref_syms)
        fp = len(order) - tp
        fn = e_j - tp
        out[disease] = 2.0 * tp / (2.0 * tp + fp + fn)
    return out


def _pooled(scores, ref: KnowledgeGraph):
    """Retained-pool entries as (export value, is reference edge)."""
    counts = ref.edge_counts()
    pool = []
    for j, disease in enumerate(scores.diseases):
        e_j = counts.get(disease, 0)
        if e_j == 0:
            continue
        ref_syms = ref.symptoms_of(disease)
        for i in _row_order(scores, j)[:e_j]:
            v = scores.values[j, i]
            if v > 0:
                pool.append((v, scores.symptoms[i] in ref_syms))
    return pool


def auprc(scores, reference: KnowledgeGraph, b_mode: str = "all"):
    """Area under the pooled precision-recall curve.

    Returns (area, points). Points carry the swept thresholds plus the
    terminal (recall 1, precision B) extension; with an empty pool the
    curve is just that terminal level and the area is B (degenerate,
    detectable as a single-point curve).
    """
    if b_mode not in B_MODES:
        raise ValueError(f"b_mode must be one of {B_MODES}")
    ref = _restricted(scores, reference)
    ref_total = ref.n_edges
    pool = _pooled(scores, ref)
    if b_mode == "all":
        b = ref_total / (len(scores.diseases) * len(scores.symptoms))
    else:
        b = ref_total / max(1, len(pool))

    points: list[PRPoint] = []
    if pool:
        vals = np.array([v for v, _ in pool])
        hits = np.array([h for _, h in pool], dtype=np.int64)
        order = np.argsort(-vals, kind="stable")
        vals, hits = vals[order], hits[order]
        tp_cum = np.cumsum(hits)
        n_cum = np.arange(1, len(pool) + 1)
        # last index of each distinct threshold block
        block_end = np.nonzero(np.diff(vals, append=-np.inf) != 0)[0]
        for idx in block_end:
            tp = int(tp_cum[idx])
            n = int(n_cum[idx])
            points.append(PRPoint(float(vals[idx]), tp / n, tp / ref_total))
    points.append(PRPoint(0.0, b, 1.0))

    area = 0.0
    prev_r, prev_p = 0.0, points[0].precision
    for pt in points:
        area += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0
        prev_r, prev_p = pt.recall, pt.precision
    return float(area), points


def evaluate_scores(scores, reference: KnowledgeGraph, budget="ref",
                    b_mode: str = "all") -> EvalReport:
    area, points = auprc(scores, reference, b_mode=b_mode)
    return EvalReport(
        auprc=area,
        f1_by_disease=f1_per_disease(scores, reference, budget=budget),
        b=points[-1].precision,
        points=points,
        degenerate=len(points) == 1,
        config={"budget": budget, "b_mode": b_mode, "learner": scores.learner},
    )


def load_reference(path, exclusions=()):
    """Load a reference graph, dropping edges that touch excluded
    symptoms. Returns (graph, dropped edge count)."""
    with open(path, encoding="utf-8") as fh:
        graph = parse_graph(fh)
    excluded = set(exclusions or ())
    if not excluded:
        return graph, 0
    kept = frozenset((d, s) for d, s in graph.edges if s not in excluded)
    return KnowledgeGraph(kept), graph.n_edges - len(kept)


def format_report(report: EvalReport) -> str:
    lines = [
        f"auprc\t{report.auprc:.6f}",
        f"terminal_precision_b\t{report.b:.6g}",
        f"mean_f1\t{report.mean_f1:.6f}",
        f"diseases_scored\t{len(report.f1_by_disease)}",
        f"degenerate\t{int(report.degenerate)}",
    ]
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path, header_lines=()) -> None:
    """Per-disease F1 TSV followed by a summary block of comment lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for line in format_report(report).splitlines():
            fh.write(f"# {line}\n")
        fh.write("disease\tf1\n")
        for disease, f1 in report.f1_by_disease.items():
            fh.write(f"{disease}\t{f1:.6f}\n")
