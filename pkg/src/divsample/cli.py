"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import json
import sys

import click

from divsample import corpus as corpus_mod
from divsample import pipeline as pipeline_mod
from divsample import sampler as sampler_mod
from divsample import score as score_mod
from divsample import stats as stats_mod
from divsample import synthgen
from divsample.errors import BackendError, DataError, NoKneeError
from divsample.mention import classify_document_mentions, load_synonyms
from divsample.verbalise import build_exclusion_list, derive_seed, make_instructions


@click.group()
def cli():
    """Diversity sampling and dataset tooling for organism/chemical relation extraction."""


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="tsv")
@click.option("--max-relations", type=int, default=20, show_default=True)
@click.option("--max-label-chars", type=int, default=60, show_default=True)
@click.option("--require-abstract/--no-require-abstract", default=True, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def preprocess(input_path, fmt, max_relations, max_label_chars, require_abstract, out_path):
    """Load a relation dump and apply the preprocessing filters."""
    raw = corpus_mod.load_corpus(input_path, fmt)
    pre = corpus_mod.preprocess(
        raw,
        max_relations=max_relations,
        max_label_chars=max_label_chars,
        require_abstract=require_abstract,
    )
    corpus_mod.save_corpus(pre, out_path)
    click.echo(
        f"kept {len(pre)}/{len(raw)} documents, "
        f"{pre.total_relations()} relations -> {out_path}"
    )


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="jsonl")
@click.option(
    "--strategy",
    type=click.Choice(["gme", "random", "top-organisms", "top-chemicals", "top-relations"]),
    default="gme",
    show_default=True,
)
@click.option("--n", type=int, default=500, show_default=True)
@click.option("--stratify/--no-stratify", default=True, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--full-trace", is_flag=True, help="Rank every document, not just the top n.")
@click.option("--exclude", default="", help="Comma-separated doc ids excluded before sampling.")
@click.option("--trace-out", type=click.Path(), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def sample(input_path, fmt, strategy, n, stratify, seed, full_trace, exclude, trace_out, out_path):
    """Rank or sample documents with the greedy or baseline samplers."""
    corpus = corpus_mod.load_corpus(input_path, fmt)
    excluded = {x for x in exclude.split(",") if x}
    if excluded:
        corpus = corpus_mod.Corpus([d for d in corpus.documents if d.id not in excluded])
    if not stratify:
        corpus = corpus_mod.Corpus(
            [
                corpus_mod.Document(d.id, d.title, d.abstract, "all", d.relations)
                for d in corpus.documents
            ]
        )

    traces = {}
    if strategy == "gme":
        per_stratum = sampler_mod.stratified_gme(corpus, n, full_trace=full_trace)
        sampled = {s: ids for s, (ids, _) in per_stratum.items()}
        traces = {s: trace for s, (_, trace) in per_stratum.items()}
    elif strategy == "random":
        sampled = sampler_mod.random_sample(corpus, n, seed)
    else:
        criterion = strategy.split("-", 1)[1]
        sampled = sampler_mod.top_entity_sample(corpus, n, criterion)

    records = [
        {"rank": rank + 1, "doc_id": doc_id, "stratum": stratum}
        for stratum, ids in sorted(sampled.items())
        for rank, doc_id in enumerate(ids)
    ]
    pipeline_mod.write_jsonl(records, out_path)
    if trace_out:
        if not traces:
            raise DataError(f"strategy {strategy!r} produces no trace")
        sampler_mod.write_trace_csv(traces, trace_out)
    click.echo(f"sampled {len(records)} documents over {len(sampled)} strata -> {out_path}")


@cli.command("analyze-trace")
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--knee", is_flag=True, help="Report knee points per stratum and curve.")
@click.option("--percent-of-max", "ranks", default="", help="Comma-separated ranks, e.g. 250,500.")
@click.option("--out", "out_path", type=click.Path(), default=None)
def analyze_trace(trace_path, knee, ranks, out_path):
    """Knee points and percent-of-max analysis of a sampling trace."""
    traces = sampler_mod.read_trace_csv(trace_path)
    rank_list = [int(r) for r in ranks.split(",") if r]
    report = {}
    for stratum, trace in sorted(traces.items()):
        entry = {"length": len(trace)}
        for curve in ("organisms", "chemicals"):
            curve_entry = {}
            if knee:
                try:
                    k = sampler_mod.detect_knee(trace, curve)
                    curve_entry["knee"] = {"rank": k.rank, "entropy": k.entropy_at_knee}
                except NoKneeError as exc:
                    curve_entry["knee"] = {"error": str(exc)}
            if rank_list:
                curve_entry["percent_of_max"] = {
                    str(r): round(sampler_mod.percent_of_max(trace, r, curve), 3)
                    for r in rank_list
                    if r <= len(trace)
                }
            entry[curve] = curve_entry
        report[stratum] = entry
    payload = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        click.echo(payload)


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="jsonl")
@click.option("--synonyms", "synonyms_path", type=click.Path(exists=True), default=None)
@click.option("--report", "report_path", required=True, type=click.Path())
def mismatch(corpus_path, fmt, synonyms_path, report_path):
    """Label/abstract mismatch diagnostics: per-kind counts of mention statuses."""
    corpus = corpus_mod.load_corpus(corpus_path, fmt)
    synonyms = load_synonyms(synonyms_path) if synonyms_path else {}
    totals: dict[str, dict[str, int]] = {}
    skipped = 0
    for doc in corpus.documents:
        if not doc.has_abstract():
            skipped += 1
            continue
        report = classify_document_mentions(doc, synonyms)
        for kind, statuses in report.summary.items():
            bucket = totals.setdefault(kind, {})
            for status, count in statuses.items():
                bucket[status] = bucket.get(status, 0) + count
    payload = {"counts": totals, "documents_without_abstract": skipped}
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"mismatch report -> {report_path}")


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="jsonl")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--m", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--template", default="default", show_default=True)
@click.option("--classes", "classes_path", type=click.Path(exists=True), default=None)
@click.option("--synonyms", "synonyms_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def verbalise(corpus_path, fmt, config_path, m, seed, template, classes_path, synonyms_path, out_path):
    """Sample verbalised findings and assemble generation instructions."""
    corpus = corpus_mod.load_corpus(corpus_path, fmt)
    vcfg = pipeline_mod.VerbaliseConfig()
    if config_path:
        cfg = pipeline_mod.PipelineConfig.from_toml(config_path)
        vcfg = cfg.verbalise
    class_map = pipeline_mod.load_class_map(classes_path) if classes_path else {}
    synonyms = load_synonyms(synonyms_path) if synonyms_path else {}
    instructions = []
    for doc in corpus.documents:
        exclusion = build_exclusion_list(doc, synonyms=synonyms)
        keywords = pipeline_mod.title_keywords(doc, exclusion, vcfg.max_keywords)
        instructions.extend(
            make_instructions(
                doc,
                keywords,
                vcfg.transformation_config(),
                m=m,
                root_seed=seed,
                class_map=class_map,
                template_id=template,
            )
        )
    pipeline_mod.write_jsonl(
        [pipeline_mod.instruction_to_json(i) for i in instructions], out_path
    )
    click.echo(f"wrote {len(instructions)} instructions -> {out_path}")


@cli.command()
@click.option("--instructions", "instructions_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["mock", "http"]), default="mock", show_default=True)
@click.option("--backend-url", default="", help="Completion endpoint URL for the http backend.")
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--q", type=float, default=1.0, show_default=True)
@click.option("--parallelism", type=int, default=4, show_default=True)
@click.option("--max-tokens", type=int, default=1024, show_default=True)
@click.option("--retries", type=int, default=2, show_default=True)
@click.option("--timeout", type=float, default=60.0, show_default=True)
@click.option("--synonyms", "synonyms_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def generate(
    instructions_path, backend, backend_url, k, q, parallelism,
    max_tokens, retries, timeout, synonyms_path, out_path,
):
    """Generate candidate abstracts and apply the top-k selector per seed document."""
    instructions = [
        pipeline_mod.instruction_from_json(obj)
        for obj in pipeline_mod.read_jsonl(instructions_path)
    ]
    if backend == "mock":
        backend_impl = synthgen.MockBackend()
    else:
        if not backend_url:
            raise click.UsageError("--backend-url is required with --backend http")
        backend_impl = synthgen.HTTPBackend(backend_url, timeout=timeout)
    synonyms = load_synonyms(synonyms_path) if synonyms_path else None
    candidates = synthgen.generate_candidates(
        instructions, backend_impl, parallelism=parallelism,
        max_tokens=max_tokens, retries=retries, synonyms=synonyms,
    )
    by_seed: dict[str, list[synthgen.GeneratedCandidate]] = {}
    for cand in candidates:
        by_seed.setdefault(cand.seed_doc_id, []).append(cand)
    n_accepted = 0
    for seed_id in sorted(by_seed):
        n_accepted += len(synthgen.select_top_k(by_seed[seed_id], k=k, q=q))
    pipeline_mod.write_jsonl(
        [pipeline_mod.candidate_to_json(c) for c in candidates], out_path
    )
    click.echo(f"{len(candidates)} candidates, {n_accepted} accepted -> {out_path}")


@cli.command()
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True))
@click.option("--split", type=float, default=0.9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-train", required=True, type=click.Path())
@click.option("--out-valid", required=True, type=click.Path())
def assemble(candidates_path, split, seed, out_train, out_valid):
    """Assemble accepted candidates into leakage-free train/valid datasets."""
    candidates = [
        pipeline_mod.candidate_from_json(obj)
        for obj in pipeline_mod.read_jsonl(candidates_path)
    ]
    accepted = [c for c in candidates if c.accepted]
    train, valid = synthgen.assemble_dataset(accepted, split_ratio=split, seed=seed)
    synthgen.write_dataset(train, out_train)
    synthgen.write_dataset(valid, out_valid)
    click.echo(f"train={len(train.examples)} valid={len(valid.examples)}")


@cli.command()
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--matching", type=click.Choice(["casefold", "exact"]), default="casefold")
@click.option("--macro", is_flag=True, help="Also report macro-averaged P/R/F1.")
@click.option("--ignore-classes", is_flag=True)
@click.option("--report", "report_path", required=True, type=click.Path())
def score(gold_path, pred_path, matching, macro, ignore_classes, report_path):
    """Exact-match micro P/R/F1 of predicted relations against a curated gold file."""
    gold = score_mod.load_gold(gold_path, ignore_classes=ignore_classes)
    pred, malformed = score_mod.load_predictions(pred_path)
    report = score_mod.score(gold, pred, matching=matching)
    payload = {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
        "malformed_clauses": malformed,
        "n_documents": len(report.per_document),
    }
    if macro:
        mp, mr, mf = score_mod.macro_average(report)
        payload["macro"] = {"precision": mp, "recall": mr, "f1": mf}
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"P={report.precision:.4f} R={report.recall:.4f} F1={report.f1:.4f}")


@cli.command("stats")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="jsonl")
@click.option("--sample", "sample_path", type=click.Path(exists=True), default=None,
              help="Ranked JSONL; restrict statistics to the sampled documents.")
@click.option("--out", "out_path", type=click.Path(), default=None)
def stats_cmd(corpus_path, fmt, sample_path, out_path):
    """Diversity statistics (distinct counts, pareto shares) of a corpus or sample."""
    corpus = corpus_mod.load_corpus(corpus_path, fmt)
    docs = corpus
    if sample_path:
        ids = [rec["doc_id"] for rec in pipeline_mod.read_jsonl(sample_path)]
        docs = [corpus.get(doc_id) for doc_id in ids]
    s = stats_mod.stats(docs)
    payload = {
        "n_documents": s.n_documents,
        "distinct_organisms": s.distinct_organisms,
        "distinct_chemicals": s.distinct_chemicals,
        "distinct_relations": s.distinct_relations,
        "pareto_share_top20pct": {
            kind: round(stats_mod.pareto_share(curve, 0.2), 4)
            for kind, curve in s.pareto_curve.items()
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="jsonl")
@click.option("--sample", "sample_specs", multiple=True,
              help="name=path.jsonl; repeatable. Repeated names form a replicate group.")
@click.option("--out", "out_path", type=click.Path(), default=None)
def compare(corpus_path, fmt, sample_specs, out_path):
    """Compare the diversity statistics of several named samples."""
    corpus = corpus_mod.load_corpus(corpus_path, fmt)
    groups: dict[str, list[list[str]]] = {}
    for spec in sample_specs:
        name, _, path = spec.partition("=")
        if not path:
            raise click.UsageError(f"--sample expects name=path, got {spec!r}")
        ids = [rec["doc_id"] for rec in pipeline_mod.read_jsonl(path)]
        groups.setdefault(name, []).append(ids)
    samples = {
        name: (reps[0] if len(reps) == 1 else reps) for name, reps in groups.items()
    }
    rows = stats_mod.compare_samples(samples, corpus)
    text = json.dumps(rows, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def run(config_path, out_dir):
    """Run the full pipeline from a TOML config, writing artifacts and a manifest."""
    config = pipeline_mod.PipelineConfig.from_toml(config_path)
    manifest = pipeline_mod.run_pipeline(config, out_dir)
    click.echo(f"manifest -> {manifest}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
