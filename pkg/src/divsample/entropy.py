"""Incremental Shannon entropy over entity occurrence distributions.

Entropy is computed in nats through the identity

    H = ln(total) - (sum_i c_i * ln c_i) / total

so that adding or removing a document only touches the accumulator terms of
the entities it mentions. Accumulators are rebuilt from scratch every
REBUILD_EVERY mutations to bound floating-point drift.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

from divsample.corpus import Document
from divsample.errors import DataError

REBUILD_EVERY = 4096


class EntropyPair(NamedTuple):
    h_organisms: float
    h_chemicals: float


def _xlogx(c: int) -> float:
    return c * math.log(c) if c > 0 else 0.0


@dataclass
class EntityDistribution:
    """Multiset of entity occurrence counts with a cached c*ln(c) accumulator."""

    counts: dict[str, int] = field(default_factory=dict)
    total: int = 0
    sum_c_log_c: float = 0.0
    _mutations: int = 0

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "EntityDistribution":
        counts = {k: int(v) for k, v in counts.items() if v > 0}
        dist = cls(counts=counts, total=sum(counts.values()))
        dist.sum_c_log_c = sum(_xlogx(c) for c in counts.values())
        return dist

    def copy(self) -> "EntityDistribution":
        return EntityDistribution(
            counts=dict(self.counts),
            total=self.total,
            sum_c_log_c=self.sum_c_log_c,
            _mutations=self._mutations,
        )

    def add(self, entity_id: str, k: int = 1) -> None:
        c = self.counts.get(entity_id, 0)
        self.counts[entity_id] = c + k
        self.total += k
        self.sum_c_log_c += _xlogx(c + k) - _xlogx(c)
        self._tick()

    def remove(self, entity_id: str, k: int = 1) -> None:
        c = self.counts.get(entity_id, 0)
        if c < k:
            raise DataError(f"cannot remove {k} occurrences of {entity_id!r} (has {c})")
        if c == k:
            del self.counts[entity_id]
        else:
            self.counts[entity_id] = c - k
        self.total -= k
        self.sum_c_log_c += _xlogx(c - k) - _xlogx(c)
        self._tick()

    def _tick(self) -> None:
        self._mutations += 1
        if self._mutations >= REBUILD_EVERY:
            self.sum_c_log_c = sum(_xlogx(c) for c in self.counts.values())
            self._mutations = 0

    def entropy(self) -> float:
        """Shannon entropy in nats; 0 for a single-entity distribution."""
        if self.total < 1:
            raise DataError("entropy is undefined for an empty distribution")
        return math.log(self.total) - self.sum_c_log_c / self.total


def entropy(dist: EntityDistribution) -> float:
    return dist.entropy()


def doc_entity_counts(doc: Document) -> tuple[Counter, Counter]:
    """Occurrence counts of organisms and chemicals in one document, one per relation."""
    orgs: Counter = Counter()
    chems: Counter = Counter()
    for rel in doc.relations:
        orgs[rel.organism.id] += 1
        chems[rel.chemical.id] += 1
    return orgs, chems


DistPair = tuple[EntityDistribution, EntityDistribution]


def apply_document(dist_pair: DistPair, doc: Document) -> DistPair:
    """Add a document's relation counts to the (organism, chemical) distributions in place."""
    organisms, chemicals = dist_pair
    org_counts, chem_counts = doc_entity_counts(doc)
    for eid, k in org_counts.items():
        organisms.add(eid, k)
    for eid, k in chem_counts.items():
        chemicals.add(eid, k)
    return dist_pair


def remove_document(dist_pair: DistPair, doc: Document) -> DistPair:
    organisms, chemicals = dist_pair
    org_counts, chem_counts = doc_entity_counts(doc)
    for eid, k in org_counts.items():
        organisms.remove(eid, k)
    for eid, k in chem_counts.items():
        chemicals.remove(eid, k)
    return dist_pair


def _peek_entropy(dist: EntityDistribution, delta: Counter) -> float:
    added = sum(delta.values())
    new_total = dist.total + added
    if new_total < 1:
        raise DataError("entropy is undefined for an empty distribution")
    acc = dist.sum_c_log_c
    for eid, k in delta.items():
        c = dist.counts.get(eid, 0)
        acc += _xlogx(c + k) - _xlogx(c)
    return math.log(new_total) - acc / new_total


def peek_entropy_after(dist_pair: DistPair, doc: Document) -> EntropyPair:
    """Entropies after hypothetically adding `doc`, without mutating the distributions."""
    organisms, chemicals = dist_pair
    org_counts, chem_counts = doc_entity_counts(doc)
    return EntropyPair(
        h_organisms=_peek_entropy(organisms, org_counts),
        h_chemicals=_peek_entropy(chemicals, chem_counts),
    )


def utopian_distance(h: EntropyPair, max_o: float, max_c: float) -> float:
    """Euclidean distance of an entropy pair to the utopian point (max_o, max_c)."""
    return math.hypot(h.h_organisms - max_o, h.h_chemicals - max_c)
