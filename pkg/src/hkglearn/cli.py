"""Command-line pipeline: synth, ingest, learn, eval, analyze, predictability.

Every stochastic stage takes a mandatory 64-bit seed; per-stage streams
are derived from it, so reruns with identical inputs and flags reproduce
every output byte for byte. Each command writes a manifest before any
result and stamps the manifest digest as the first line of every output.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis, cohort, evaluate, graphlearn, kgraph, synthgen
from .cohort import RecordsFormatError
from .estimators.cv import forest_grid, logistic_grid, nb_grid
from .manifest import RunManifest, file_digest
from .synthgen import TruthSpecError

_GRID_OF = {
    "lr": {"logistic": None},
    "causal_lr": {"logistic": None},
    "causal_rf": {"forest": None},
    "causal_nb": {"nb": None},
}


def _seed_type(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _split_csv(text: str) -> tuple:
    return tuple(t for t in text.split(",") if t)


def _add_ingest_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--records", required=True, help="raw note records TSV")
    p.add_argument("--mode", choices=cohort.AGGREGATION_MODES, default="patient")
    p.add_argument("--gap-days", type=int, default=cohort.DEFAULT_GAP_DAYS)
    p.add_argument("--min-disease-count", type=int,
                   default=cohort.DEFAULT_MIN_DISEASE_COUNT)
    p.add_argument("--min-symptom-count", type=int,
                   default=cohort.DEFAULT_MIN_SYMPTOM_COUNT)
    p.add_argument("--exclude", type=_split_csv,
                   default=cohort.DEFAULT_EXCLUDED_SYMPTOMS,
                   help="comma-separated symptoms dropped everywhere")


def _ingest(args):
    notes = cohort.read_records(args.records)
    vocab = cohort.filter_support(
        notes,
        min_disease_count=args.min_disease_count,
        min_symptom_count=args.min_symptom_count,
        exclude_symptoms=args.exclude)
    rs = cohort.aggregate(notes, vocab, args.mode, gap_days=args.gap_days)
    return notes, vocab, rs


def _grids_echo(model: str | None) -> dict | None:
    if model is None or model not in _GRID_OF:
        return None
    out = {}
    for name in _GRID_OF[model]:
        out[name] = {"logistic": logistic_grid, "forest": forest_grid,
                     "nb": nb_grid}[name]()
    return out


def _manifest(argv, inputs, seed=None, model=None, vocab=None,
              grids=None) -> RunManifest:
    return RunManifest(
        command=["hkglearn", *argv],
        inputs={p: file_digest(p) for p in inputs},
        seed=seed,
        n_diseases=None if vocab is None else vocab.n_diseases,
        n_symptoms=None if vocab is None else vocab.n_symptoms,
        model=model,
        grids=grids,
    )


def _write_tsv(path, header_lines, columns, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return "NA" if np.isnan(value) else f"{value:.6g}"
    return str(value)


# ----------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------

def cmd_synth(args, argv) -> int:
    spec = synthgen.read_truth_spec(args.spec)
    man = _manifest(argv, [args.spec], seed=args.seed, model="synth")
    man.n_diseases = spec.n_diseases
    man.n_symptoms = spec.n_symptoms
    man.write(args.out + ".manifest.json")
    notes, truth = synthgen.sample_cohort(spec, args.patients, args.seed)
    cohort.write_records(notes, args.out, header_lines=[man.header_line])
    if args.truth:
        kgraph.serialize_graph(truth, args.truth, header_lines=[man.header_line])
    print(f"synth: {len(notes)} notes for {args.patients} patients, "
          f"{truth.n_edges} truth edges")
    return 0


def cmd_ingest(args, argv) -> int:
    notes, vocab, rs = _ingest(args)
    man = _manifest(argv, [args.records], seed=args.seed, vocab=vocab)
    man.write(args.out_vocab + ".manifest.json")
    rows = [("disease", d) for d in vocab.diseases]
    rows += [("symptom", s) for s in vocab.symptoms]
    _write_tsv(args.out_vocab, [man.header_line], ("kind", "name"), rows)
    if args.out_stats:
        stats = [
            ("notes", len(notes)),
            ("records", rs.n_records),
            ("mode", args.mode),
            ("diseases", vocab.n_diseases),
            ("symptoms", vocab.n_symptoms),
            ("known_age", int((~np.isnan(rs.age_years)).sum())),
            ("known_sex", int((rs.sex >= 0).sum())),
        ]
        _write_tsv(args.out_stats, [man.header_line], ("stat", "value"), stats)
    print(f"ingest: {rs.n_records} records, {vocab.n_diseases} diseases, "
          f"{vocab.n_symptoms} symptoms")
    return 0


def cmd_learn(args, argv) -> int:
    _, vocab, rs = _ingest(args)
    man = _manifest(argv, [args.records], seed=args.seed, model=args.model,
                    vocab=vocab, grids=_grids_echo(args.model))
    man.write(args.out + ".manifest.json")
    scores = graphlearn.learn(
        rs, args.model, demo=args.demo, seed=args.seed, threads=args.threads,
        nor_max_iter=args.nor_max_iter, nb_alpha=args.nb_alpha)
    graphlearn.save_scores(scores, args.out, header_lines=[man.header_line])
    print(f"learn: {args.model} scores for {vocab.n_diseases}x"
          f"{vocab.n_symptoms} pairs -> {args.out}")
    return 0


def cmd_eval(args, argv) -> int:
    scores = graphlearn.load_scores(args.scores)
    reference, dropped = evaluate.load_reference(args.reference, args.exclude)
    budget = "ref" if args.budget == "ref" else int(args.budget)
    man = _manifest(argv, [args.scores, args.reference], seed=args.seed)
    man.write(args.out + ".manifest.json")
    report = evaluate.evaluate_scores(scores, reference, budget=budget,
                                      b_mode=args.b_mode)
    report.config["reference_edges_dropped"] = dropped
    evaluate.write_report(report, args.out, header_lines=[man.header_line])
    sys.stdout.write(evaluate.format_report(report))
    return 0


def _flags_rows(cov, table):
    rows = []
    for j, d in enumerate(cov.diseases):
        rows.append((
            d, cov.count[j], _fmt(float(cov.mean_diseases[j])),
            _fmt(float(cov.mean_symptoms[j])), _fmt(float(cov.mean_age[j])),
            _fmt(float(cov.female_frac[j])),
            *(int(table.flags[c][j]) for c in analysis.FLAG_COLUMNS),
        ))
    return rows


_FLAG_HEADER = ("disease", "count", "mean_diseases", "mean_symptoms",
                "mean_age", "female_frac",
                *(f"flag_{c}" for c in analysis.FLAG_COLUMNS))


def cmd_analyze(args, argv) -> int:
    if args.what == "predictability":
        return cmd_predictability(args, argv)
    _, vocab, rs = _ingest(args)
    inputs = [args.records]
    for extra in (args.scores, args.reference):
        if extra:
            inputs.append(extra)
    man = _manifest(argv, inputs, seed=args.seed, model=args.model, vocab=vocab)
    man.write(args.out + ".manifest.json")

    if args.what == "flags":
        cov = analysis.disease_covariates(rs)
        table = analysis.abnormality_flags(cov)
        _write_tsv(args.out, [man.header_line], _FLAG_HEADER,
                   _flags_rows(cov, table))
        print(f"analyze flags: {int(table.flags['any'].sum())} of "
              f"{vocab.n_diseases} diseases flagged")
        return 0

    if args.what == "topbottom":
        if not (args.scores and args.reference):
            raise ValueError("topbottom needs --scores and --reference")
        scores = graphlearn.load_scores(args.scores)
        reference, _ = evaluate.load_reference(args.reference, args.exclude)
        f1 = evaluate.f1_per_disease(scores, reference)
        cov = analysis.disease_covariates(rs)
        table = analysis.abnormality_flags(cov)
        tb = analysis.top_bottom_summary(f1, table, n=args.n)
        rows = [
            ("top", tb.n, *(f"{tb.top_pct[c]:.1f}" for c in analysis.FLAG_COLUMNS)),
            ("bottom", tb.n, *(f"{tb.bottom_pct[c]:.1f}" for c in analysis.FLAG_COLUMNS)),
        ]
        _write_tsv(args.out, [man.header_line],
                   ("group", "n", *analysis.FLAG_COLUMNS), rows)
        print(f"analyze topbottom: n={tb.n}, any top {tb.top_pct['any']:.1f}% "
              f"bottom {tb.bottom_pct['any']:.1f}%")
        return 0

    # subgroups
    if not (args.reference and args.model):
        raise ValueError("subgroups needs --reference and --model")
    reference, _ = evaluate.load_reference(args.reference, args.exclude)
    rows = analysis.subgroup_learn(
        rs, args.partition, args.model, reference, seed=args.seed,
        min_size=args.min_size, threads=args.threads, b_mode=args.b_mode)
    out_rows = [(r.name, r.size, _fmt(r.auprc)) for r in rows]
    _write_tsv(args.out, [man.header_line], ("subgroup", "size", "auprc"),
               out_rows)
    for r in rows:
        print(f"subgroup {r.name}: size {r.size}, auprc {_fmt(r.auprc)}")
    return 0


def cmd_predictability(args, argv) -> int:
    _, vocab, rs = _ingest(args)
    family_grid = {"logistic": logistic_grid(), "forest": forest_grid(),
                   "nb": nb_grid()}[args.family]
    man = _manifest(argv, [args.records], seed=args.seed, vocab=vocab,
                    grids={args.family: family_grid})
    man.write(args.out + ".manifest.json")
    rows = analysis.predictability(rs, args.target_kind, args.family,
                                   seed=args.seed, threads=args.threads)
    out_rows = [(r.target, r.family, f"{r.auroc:.6f}", r.n_pos) for r in rows]
    _write_tsv(args.out, [man.header_line],
               ("target", "family", "auroc", "n_pos"), out_rows)
    mean_auc = np.mean([r.auroc for r in rows]) if rows else float("nan")
    print(f"predictability: {len(rows)} {args.target_kind} targets, "
          f"mean auroc {_fmt(float(mean_auc))}")
    return 0


def cmd_pipeline(args, argv) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    _, vocab, rs = _ingest(args)
    man = _manifest(argv, [args.records, args.reference], seed=args.seed,
                    model=args.model, vocab=vocab, grids=_grids_echo(args.model))
    man.write(os.path.join(args.out_dir, "manifest.json"))
    header = [man.header_line]

    scores = graphlearn.learn(rs, args.model, demo=args.demo, seed=args.seed,
                              threads=args.threads,
                              nor_max_iter=args.nor_max_iter,
                              nb_alpha=args.nb_alpha)
    graphlearn.save_scores(scores, os.path.join(args.out_dir, "scores.tsv"),
                           header_lines=header)

    reference, dropped = evaluate.load_reference(args.reference, args.exclude)
    graph = kgraph.select_edges(scores, reference=reference)
    kgraph.serialize_graph(graph, os.path.join(args.out_dir, "graph.tsv"),
                           header_lines=header)

    report = evaluate.evaluate_scores(scores, reference, b_mode=args.b_mode)
    report.config["reference_edges_dropped"] = dropped
    evaluate.write_report(report, os.path.join(args.out_dir, "report.tsv"),
                          header_lines=header)

    cov = analysis.disease_covariates(rs)
    table = analysis.abnormality_flags(cov)
    _write_tsv(os.path.join(args.out_dir, "flags.tsv"), header, _FLAG_HEADER,
               _flags_rows(cov, table))
    tb = analysis.top_bottom_summary(report.f1_by_disease, table, n=args.n)
    _write_tsv(os.path.join(args.out_dir, "topbottom.tsv"), header,
               ("group", "n", *analysis.FLAG_COLUMNS),
               [("top", tb.n, *(f"{tb.top_pct[c]:.1f}" for c in analysis.FLAG_COLUMNS)),
                ("bottom", tb.n, *(f"{tb.bottom_pct[c]:.1f}" for c in analysis.FLAG_COLUMNS))])

    print(f"pipeline: model {args.model}, auprc {report.auprc:.4f}, "
          f"mean f1 {report.mean_f1:.4f} -> {args.out_dir}")
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hkglearn",
        description="Learn and evaluate disease-symptom graphs from binary "
                    "co-occurrence records.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="sample a synthetic cohort from a truth spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--patients", type=int, required=True)
    p.add_argument("--seed", type=_seed_type, required=True)
    p.add_argument("--out", required=True, help="records TSV to write")
    p.add_argument("--truth", help="also write the truth graph TSV here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="filter, segment and aggregate records")
    _add_ingest_args(p)
    p.add_argument("--seed", type=_seed_type, default=None)
    p.add_argument("--out-vocab", required=True)
    p.add_argument("--out-stats")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("learn", help="fit importance scores")
    _add_ingest_args(p)
    p.add_argument("--model", choices=graphlearn.MODELS, required=True)
    p.add_argument("--demo", action="store_true",
                   help="append demographic features")
    p.add_argument("--seed", type=_seed_type, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--nor-max-iter", type=int, default=500)
    p.add_argument("--nb-alpha", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="score a score matrix against a reference graph")
    p.add_argument("--scores", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--budget", default="ref",
                   help="'ref' or an integer edges-per-disease budget")
    p.add_argument("--b-mode", choices=evaluate.B_MODES, default="all")
    p.add_argument("--exclude", type=_split_csv,
                   default=cohort.DEFAULT_EXCLUDED_SYMPTOMS)
    p.add_argument("--seed", type=_seed_type, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="abnormality, top/bottom and subgroup studies")
    _add_ingest_args(p)
    p.add_argument("--what", choices=("flags", "topbottom", "subgroups",
                                      "predictability"), required=True)
    p.add_argument("--scores")
    p.add_argument("--reference")
    p.add_argument("--model", choices=graphlearn.MODELS, default=None)
    p.add_argument("--partition", choices=analysis.PARTITIONS,
                   default="sex")
    p.add_argument("--min-size", type=int, default=100)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--b-mode", choices=evaluate.B_MODES, default="all")
    p.add_argument("--target-kind", choices=("disease", "symptom"),
                   default="disease")
    p.add_argument("--family", choices=("logistic", "forest", "nb"),
                   default="logistic")
    p.add_argument("--seed", type=_seed_type, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("predictability", help="per-target cross-validated AUROC")
    _add_ingest_args(p)
    p.add_argument("--target-kind", choices=("disease", "symptom"),
                   required=True)
    p.add_argument("--family", choices=("logistic", "forest", "nb"),
                   required=True)
    p.add_argument("--seed", type=_seed_type, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predictability)

    p = sub.add_parser("pipeline", help="learn, select, evaluate and analyze in one run")
    _add_ingest_args(p)
    p.add_argument("--reference", required=True)
    p.add_argument("--model", choices=graphlearn.MODELS, required=True)
    p.add_argument("--demo", action="store_true")
    p.add_argument("--seed", type=_seed_type, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--nor-max-iter", type=int, default=500)
    p.add_argument("--nb-alpha", type=float, default=0.0)
    p.add_argument("--b-mode", choices=evaluate.B_MODES, default="all")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, list(argv))
    except OSError as exc:
        path = getattr(exc, "filename", None) or "unknown path"
        print(f"error: {path}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except (RecordsFormatError, TruthSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
