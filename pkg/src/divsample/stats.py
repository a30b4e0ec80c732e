"""Diversity statistics and sample comparison reports.

Pareto curves order entities by descending relation contribution and
accumulate the fraction of relations they hold; duplicate relations from
distinct documents count as distinct items. Frequency histograms count in
how many distinct documents each entity is mentioned.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from divsample.corpus import Corpus, Document
from divsample.errors import DataError


@dataclass
class DiversityStats:
    n_documents: int
    distinct_organisms: int
    distinct_chemicals: int
    distinct_relations: int
    pareto_curve: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    frequency_histogram: dict[str, dict[int, int]] = field(default_factory=dict)


def _pareto(contributions: Counter) -> list[tuple[float, float]]:
    total = sum(contributions.values())
    if total == 0:
        return []
    n = len(contributions)
    curve = []
    cum = 0
    # descending contribution, deterministic tie-break on entity id
    for i, (eid, c) in enumerate(
        sorted(contributions.items(), key=lambda kv: (-kv[1], kv[0])), start=1
    ):
        cum += c
        curve.append((i / n, cum / total))
    return curve


def stats(docs: Corpus | Sequence[Document]) -> DiversityStats:
    """Diversity statistics of a corpus or a list of sampled documents."""
    documents = list(docs.documents) if isinstance(docs, Corpus) else list(docs)
    if not documents:
        raise DataError("cannot compute statistics of an empty input")

    org_contrib: Counter = Counter()
    chem_contrib: Counter = Counter()
    org_docs: dict[str, set[str]] = {}
    chem_docs: dict[str, set[str]] = {}
    relations = 0
    for doc in documents:
        for rel in doc.relations:
            relations += 1
            org_contrib[rel.organism.id] += 1
            chem_contrib[rel.chemical.id] += 1
            org_docs.setdefault(rel.organism.id, set()).add(doc.id)
            chem_docs.setdefault(rel.chemical.id, set()).add(doc.id)

    def histogram(doc_sets: dict[str, set[str]]) -> dict[int, int]:
        return dict(Counter(len(s) for s in doc_sets.values()))

    return DiversityStats(
        n_documents=len(documents),
        distinct_organisms=len(org_contrib),
        distinct_chemicals=len(chem_contrib),
        distinct_relations=relations,
        pareto_curve={
            "organisms": _pareto(org_contrib),
            "chemicals": _pareto(chem_contrib),
        },
        frequency_histogram={
            "organisms": histogram(org_docs),
            "chemicals": histogram(chem_docs),
        },
    )


def pareto_share(curve: list[tuple[float, float]], entity_fraction: float) -> float:
    """Cumulative relation fraction held by the top `entity_fraction` of entities."""
    share = 0.0
    for frac, cum in curve:
        if frac <= entity_fraction + 1e-12:
            share = cum
        else:
            break
    return share


def compare_samples(
    samples: dict[str, Sequence[str] | Sequence[Sequence[str]]],
    corpus: Corpus,
) -> list[dict]:
    """Tabular diversity comparison of named samples against one corpus.

    A sample value is either a list of doc ids, or a list of replicate
    id-lists (e.g. random seeds), reported as mean +/- stddev.
    """
    by_id = {d.id: d for d in corpus.documents}

    def resolve(ids: Sequence[str]) -> list[Document]:
        docs = []
        for doc_id in ids:
            if doc_id not in by_id:
                raise DataError(f"unknown document id {doc_id!r}")
            docs.append(by_id[doc_id])
        return docs

    rows = []
    for name in sorted(samples):
        value = samples[name]
        replicates = (
            [list(v) for v in value]
            if value and not isinstance(value[0], str)
            else [list(value)]
        )
        metrics = []
        for ids in replicates:
            s = stats(resolve(ids))
            metrics.append(
                (s.n_documents, s.distinct_organisms, s.distinct_chemicals, s.distinct_relations)
            )
        cols = list(zip(*metrics))
        row = {"name": name, "replicates": len(replicates)}
        for label, values in zip(
            ("n_documents", "distinct_organisms", "distinct_chemicals", "distinct_relations"),
            cols,
        ):
            row[label] = statistics.mean(values)
            row[f"{label}_std"] = statistics.pstdev(values) if len(values) > 1 else 0.0
        rows.append(row)
    return rows
