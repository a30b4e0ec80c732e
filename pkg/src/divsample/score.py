"""Relation linearisation, output parsing and exact-match evaluation.

Relations are serialized as "ORGANISM produces CHEMICAL; ..." and decoded
outputs are parsed back into relation pairs. Scoring is micro-aggregated
exact-match precision/recall/F1 over per-document relation sets; keyword
precision follows the top-k exact-match protocol.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from divsample.corpus import Relation
from divsample.errors import DataError

VERB = "produces"
SEPARATOR = "; "


def linearise(relations: Sequence[Relation]) -> str:
    """Serialize relations as verb clauses joined by '; ', preserving order."""
    clauses = []
    for rel in relations:
        for label in (rel.organism.label, rel.chemical.label):
            if ";" in label:
                raise DataError(f"label {label!r} contains ';' and cannot be linearised")
        clauses.append(f"{rel.organism.label} {VERB} {rel.chemical.label}")
    return SEPARATOR.join(clauses)


class ParsedOutput(NamedTuple):
    pairs: set[tuple[str, str]]
    malformed: int


def parse_output(text: str) -> ParsedOutput:
    """Parse a decoded output into a set of (organism, chemical) pairs.

    Clauses split on ';'; each clause splits at the first ' produces '
    token. Clauses lacking the verb are tallied as malformed, not fatal.
    """
    pairs: set[tuple[str, str]] = set()
    malformed = 0
    for clause in text.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        head, sep, tail = clause.partition(f" {VERB} ")
        if not sep or not head.strip() or not tail.strip():
            malformed += 1
            continue
        pairs.add((head.strip(), tail.strip()))
    return ParsedOutput(pairs=pairs, malformed=malformed)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class DocumentScore:
    doc_id: str
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float


@dataclass
class ScoreReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    per_document: list[DocumentScore] = field(default_factory=list)


def _normalize(pair: tuple[str, str], matching: str) -> tuple[str, str]:
    if matching == "exact":
        return (pair[0].strip(), pair[1].strip())
    if matching == "casefold":
        return (
            re.sub(r"\s+", " ", pair[0].strip()).casefold(),
            re.sub(r"\s+", " ", pair[1].strip()).casefold(),
        )
    raise DataError(f"unknown matching mode {matching!r}")


def score(
    gold: dict[str, Iterable[tuple[str, str]]],
    pred: dict[str, Iterable[tuple[str, str]]],
    matching: str = "casefold",
) -> ScoreReport:
    """Micro-aggregated exact-match P/R/F1 of predicted relation pairs.

    A predicted pair is a true positive only if both head and tail match a
    gold pair under the matching mode. Documents missing from `pred` count
    all their gold pairs as false negatives.
    """
    per_document = []
    tp = fp = fn = 0
    for doc_id in sorted(set(gold) | set(pred)):
        gold_pairs = {_normalize(p, matching) for p in gold.get(doc_id, ())}
        pred_pairs = {_normalize(p, matching) for p in pred.get(doc_id, ())}
        doc_tp = len(gold_pairs & pred_pairs)
        doc_fp = len(pred_pairs - gold_pairs)
        doc_fn = len(gold_pairs - pred_pairs)
        p, r, f = _prf(doc_tp, doc_fp, doc_fn)
        per_document.append(DocumentScore(doc_id, doc_tp, doc_fp, doc_fn, p, r, f))
        tp += doc_tp
        fp += doc_fp
        fn += doc_fn
    p, r, f = _prf(tp, fp, fn)
    return ScoreReport(tp, fp, fn, p, r, f, per_document)


def macro_average(report: ScoreReport) -> tuple[float, float, float]:
    """Mean of per-document precision/recall/F1 (macro aggregation)."""
    docs = report.per_document
    if not docs:
        return (0.0, 0.0, 0.0)
    n = len(docs)
    return (
        sum(d.precision for d in docs) / n,
        sum(d.recall for d in docs) / n,
        sum(d.f1 for d in docs) / n,
    )


def keyword_precision(predicted: Sequence[str], gold: Iterable[str], k: int) -> float:
    """Exact-match precision within the first k predicted keywords of one document."""
    if k < 1:
        raise DataError("k must be >= 1")
    considered = [p.strip().casefold() for p in predicted[:k]]
    if not considered:
        return 0.0
    gold_set = {g.strip().casefold() for g in gold}
    hits = sum(1 for p in considered if p in gold_set)
    return hits / len(considered)


def keyword_precision_many(
    per_document: Sequence[tuple[Sequence[str], Iterable[str]]], k: int
) -> float:
    """Aggregated top-k keyword precision over many documents."""
    if k < 1:
        raise DataError("k must be >= 1")
    hits = considered = 0
    for predicted, gold in per_document:
        gold_set = {g.strip().casefold() for g in gold}
        top = [p.strip().casefold() for p in predicted[:k]]
        hits += sum(1 for p in top if p in gold_set)
        considered += len(top)
    return hits / considered if considered else 0.0


_ORG_KEYS = ("organism", "organism_label", "head")
_CHEM_KEYS = ("chemical", "chemical_label", "tail")


def _first_key(obj: dict, keys: Sequence[str], context: str) -> str:
    for key in keys:
        if key in obj and isinstance(obj[key], str):
            return obj[key]
    raise DataError(f"{context}: no {'/'.join(keys)} field in {obj!r}")


def load_gold(path: str, ignore_classes: bool = False) -> dict[str, set[tuple[str, str]]]:
    """Load a curated evaluation file: per document, a list of labelled relations.

    Accepts either a doc_id -> [relation, ...] mapping or a list of records
    with a doc_id/pmid field; relation records need organism and chemical
    labels and may carry any extra fields (identifiers etc.).
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(data, dict):
        items = list(data.items())
    elif isinstance(data, list):
        items = []
        for record in data:
            doc_id = record.get("doc_id") or record.get("pmid") or record.get("id")
            if doc_id is None:
                raise DataError(f"{path}: record without doc id: {record!r}")
            items.append((str(doc_id), record.get("relations", [])))
    else:
        raise DataError(f"{path}: expected a JSON object or array at top level")

    gold: dict[str, set[tuple[str, str]]] = {}
    for doc_id, relations in items:
        if doc_id in gold:
            raise DataError(f"{path}: duplicate doc id {doc_id!r}")
        pairs = set()
        for rel in relations:
            if ignore_classes and rel.get("is_class"):
                continue
            pairs.add((
                _first_key(rel, _ORG_KEYS, f"{path} doc {doc_id}"),
                _first_key(rel, _CHEM_KEYS, f"{path} doc {doc_id}"),
            ))
        gold[doc_id] = pairs
    return gold


def load_predictions(path: str) -> tuple[dict[str, set[tuple[str, str]]], int]:
    """Load a predictions JSONL ({doc_id, output}) and parse each output."""
    pred: dict[str, set[tuple[str, str]]] = {}
    malformed = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            doc_id = str(obj["doc_id"])
            if doc_id in pred:
                raise DataError(f"{path}:{lineno}: duplicate doc id {doc_id!r}")
            parsed = parse_output(obj.get("output", ""))
            pred[doc_id] = parsed.pairs
            malformed += parsed.malformed
    return pred, malformed
