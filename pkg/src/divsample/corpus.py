"""Data model, ingestion and preprocessing filters for relation dumps.

A corpus is an ordered list of documents, each reporting a list of
(organism, chemical) relations annotated with a stratum (biological
kingdom). Ingestion supports a one-relation-per-row TSV dump and a
one-document-per-line JSONL mirror of the data model.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from divsample.errors import DataError

TSV_COLUMNS = [
    "doc_id",
    "title",
    "abstract",
    "stratum",
    "organism_id",
    "organism_label",
    "organism_synonyms",
    "chemical_id",
    "chemical_label",
    "chemical_synonyms",
]


class EntityKind(str, Enum):
    organism = "organism"
    chemical = "chemical"
    chemical_class = "chemical_class"


@dataclass(frozen=True)
class Entity:
    id: str
    label: str
    synonyms: frozenset[str] = frozenset()
    kind: EntityKind = EntityKind.chemical

    def __post_init__(self):
        label = self.label.strip()
        if not label:
            raise DataError(f"entity {self.id!r}: empty label")
        object.__setattr__(self, "label", label)
        syns = frozenset(s.strip() for s in self.synonyms if s.strip()) - {label}
        object.__setattr__(self, "synonyms", syns)
        if not isinstance(self.kind, EntityKind):
            object.__setattr__(self, "kind", EntityKind(self.kind))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "synonyms": sorted(self.synonyms),
            "kind": self.kind.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Entity":
        return cls(
            id=obj["id"],
            label=obj["label"],
            synonyms=frozenset(obj.get("synonyms", ())),
            kind=EntityKind(obj["kind"]),
        )


@dataclass(frozen=True)
class Relation:
    organism: Entity
    chemical: Entity

    def __post_init__(self):
        if self.organism.kind is not EntityKind.organism:
            raise DataError(
                f"relation head {self.organism.id!r} has kind {self.organism.kind.value}, expected organism"
            )
        if self.chemical.kind is EntityKind.organism:
            raise DataError(
                f"relation tail {self.chemical.id!r} must be a chemical or chemical class"
            )

    def to_json(self) -> dict:
        return {"organism": self.organism.to_json(), "chemical": self.chemical.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Relation":
        return cls(
            organism=Entity.from_json(obj["organism"]),
            chemical=Entity.from_json(obj["chemical"]),
        )


@dataclass
class Document:
    id: str
    title: str
    abstract: str | None
    stratum: str
    relations: list[Relation] = field(default_factory=list)

    @property
    def n_d(self) -> int:
        return len(self.relations)

    def has_abstract(self) -> bool:
        return self.abstract is not None and bool(self.abstract.strip())

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "stratum": self.stratum,
            "relations": [r.to_json() for r in self.relations],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Document":
        return cls(
            id=obj["id"],
            title=obj.get("title", ""),
            abstract=obj.get("abstract"),
            stratum=obj.get("stratum", ""),
            relations=[Relation.from_json(r) for r in obj.get("relations", ())],
        )


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    @property
    def strata(self) -> set[str]:
        return {d.stratum for d in self.documents}

    def entity_index(self) -> Counter:
        """Global occurrence count per entity id (one count per relation)."""
        idx = Counter()
        for doc in self.documents:
            for rel in doc.relations:
                idx[rel.organism.id] += 1
                idx[rel.chemical.id] += 1
        return idx

    def distinct_organisms(self) -> set[str]:
        return {r.organism.id for d in self.documents for r in d.relations}

    def distinct_chemicals(self) -> set[str]:
        return {r.chemical.id for d in self.documents for r in d.relations}

    def total_relations(self) -> int:
        return sum(d.n_d for d in self.documents)

    def get(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.id == doc_id:
                return doc
        raise DataError(f"unknown document id {doc_id!r}")


def _dedup_relations(relations: Iterable[Relation]) -> list[Relation]:
    """Collapse identical (organism id, chemical id) pairs, keeping first occurrence."""
    seen = set()
    out = []
    for rel in relations:
        key = (rel.organism.id, rel.chemical.id)
        if key not in seen:
            seen.add(key)
            out.append(rel)
    return out


def _majority_stratum(strata: list[str]) -> str:
    """Single-membership rule for multi-kingdom documents.

    The kingdom of the majority of the document's relations wins; ties are
    broken lexicographically by stratum name.
    """
    counts = Counter(strata)
    best = max(counts.values())
    return min(s for s, c in counts.items() if c == best)


def _parse_synonyms(raw: str) -> frozenset[str]:
    return frozenset(s.strip() for s in raw.split("|") if s.strip())


def _load_tsv(path: str) -> Corpus:
    doc_rows: dict[str, list] = {}
    order: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            return Corpus([])
        if header != TSV_COLUMNS:
            missing = [c for c in TSV_COLUMNS if c not in header]
            raise DataError(
                f"{path}: unexpected TSV header; missing column(s): {', '.join(missing) or header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(TSV_COLUMNS):
                raise DataError(f"{path}:{lineno}: expected {len(TSV_COLUMNS)} fields, got {len(row)}")
            rec = dict(zip(TSV_COLUMNS, row))
            for required in ("doc_id", "organism_id", "organism_label", "chemical_id", "chemical_label"):
                if not rec[required].strip():
                    raise DataError(f"{path}:{lineno}: missing value for field {required!r}")
            try:
                organism = Entity(
                    id=rec["organism_id"],
                    label=rec["organism_label"],
                    synonyms=_parse_synonyms(rec["organism_synonyms"]),
                    kind=EntityKind.organism,
                )
                chemical = Entity(
                    id=rec["chemical_id"],
                    label=rec["chemical_label"],
                    synonyms=_parse_synonyms(rec["chemical_synonyms"]),
                    kind=EntityKind.chemical,
                )
                rel = Relation(organism=organism, chemical=chemical)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            doc_id = rec["doc_id"]
            if doc_id not in doc_rows:
                doc_rows[doc_id] = []
                order.append(doc_id)
            doc_rows[doc_id].append((rec["title"], rec["abstract"], rec["stratum"], rel))

    documents = []
    for doc_id in order:
        rows = doc_rows[doc_id]
        title = next((t for t, _, _, _ in rows if t), "")
        abstract = next((a for _, a, _, _ in rows if a.strip()), None)
        stratum = _majority_stratum([s for _, _, s, _ in rows])
        relations = _dedup_relations(r for _, _, _, r in rows)
        documents.append(Document(doc_id, title, abstract, stratum, relations))
    return Corpus(documents)


def _load_jsonl(path: str) -> Corpus:
    documents = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                doc = Document.from_json(obj)
            except (KeyError, TypeError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: bad document record: {exc}") from exc
            doc.relations = _dedup_relations(doc.relations)
            documents.append(doc)
    return Corpus(documents)


def load_corpus(path: str, format: str = "tsv") -> Corpus:
    """Load a relation dump, deduplicating relations within each document."""
    if format == "tsv":
        return _load_tsv(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise DataError(f"unknown corpus format {format!r} (expected tsv or jsonl)")


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def filter_by_relation_count(corpus: Corpus, max_relations: int) -> Corpus:
    """Keep documents reporting strictly fewer than `max_relations` relations."""
    if max_relations < 1:
        raise DataError("max_relations must be >= 1")
    return Corpus([d for d in corpus.documents if d.n_d < max_relations])


def filter_by_label_length(corpus: Corpus, max_chars: int) -> Corpus:
    """Drop relations whose chemical label exceeds `max_chars` characters.

    Documents left without relations are removed entirely. Length is counted
    in unicode scalar values, not bytes.
    """
    if max_chars < 1:
        raise DataError("max_chars must be >= 1")
    out = []
    for doc in corpus.documents:
        kept = [r for r in doc.relations if len(r.chemical.label) <= max_chars]
        if kept:
            out.append(Document(doc.id, doc.title, doc.abstract, doc.stratum, kept))
    return Corpus(out)


def filter_by_abstract_availability(corpus: Corpus) -> Corpus:
    """Keep documents with a non-empty abstract."""
    return Corpus([d for d in corpus.documents if d.has_abstract()])


def preprocess(
    corpus: Corpus,
    max_relations: int | None = 20,
    max_label_chars: int | None = 60,
    require_abstract: bool = True,
) -> Corpus:
    """Default preprocessing chain: abstract presence, label length, relation count."""
    out = corpus
    if require_abstract:
        out = filter_by_abstract_availability(out)
    if max_label_chars is not None:
        out = filter_by_label_length(out, max_label_chars)
    if max_relations is not None:
        out = filter_by_relation_count(out, max_relations)
    return out


def stratify(corpus: Corpus) -> dict[str, Corpus]:
    """Split a corpus into per-stratum sub-corpora, preserving document order."""
    groups: dict[str, list[Document]] = {}
    for doc in corpus.documents:
        groups.setdefault(doc.stratum, []).append(doc)
    return {stratum: Corpus(docs) for stratum, docs in groups.items()}
