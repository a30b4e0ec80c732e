"""Dictionary matching of entity labels in abstracts and expansion of
co-joined chemical enumerations ("cystodiones A-D", "wortmannins C and D").

Matching is case-insensitive exact substring matching at word boundaries;
a boundary means the match is not flanked by letters or digits, so hyphens
and parentheses terminate tokens. The enumeration pattern inventory is a
declared superset of the forms observed in the NP literature and is kept
here, versioned, for auditability.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from divsample.corpus import Document, Entity, EntityKind
from divsample.errors import DataError

DASH = r"[-–—]"
# Stem word: letters/hyphens, ends in a lowercase letter, length >= 3.
STEM = r"[A-Za-z][A-Za-z-]+[a-z]"
# A single series letter, not glued to another letter or digit.
LETTER = r"[A-Z](?![A-Za-z0-9])"

RE_LETTER_RANGE = re.compile(
    rf"\b({STEM})\s+([A-Z])\s*{DASH}\s*({LETTER})"
    rf"(?:\s*\(\s*\d+\s*{DASH}\s*\d+\s*\))?"
)
RE_LETTER_LIST = re.compile(
    rf"\b({STEM})\s+((?:[A-Z]\s*,\s*)*{LETTER}(?:\s*,)?\s+and\s+{LETTER})"
)
RE_NUMBER_RANGE = re.compile(rf"\b({STEM}s)\s+(\d{{1,2}})\s*{DASH}\s*(\d{{1,2}})\b")

MAX_SERIES_WIDTH = 26


class MentionStatus(str, Enum):
    matched_label = "matched_label"
    matched_synonym = "matched_synonym"
    multiple_implicit = "multiple_implicit"
    not_found = "not_found"


@dataclass(frozen=True)
class MentionVerdict:
    entity_id: str
    status: MentionStatus
    matched_surface: str | None = None
    span: tuple[int, int] | None = None


@dataclass(frozen=True)
class EnumerationPattern:
    stem: str
    kind: str  # letter_range | letter_list | numbered_range
    members: tuple[str, ...]
    span: tuple[int, int] = (0, 0)


def singularize_stem(stem: str) -> str:
    """Strip the plural 's' from an enumeration stem ("cystodiones" -> "cystodione")."""
    return stem[:-1] if stem.endswith("s") and len(stem) > 2 else stem


def split_series_label(label: str) -> tuple[str, str] | None:
    """Split "cystodione A" into ("cystodione", "A"); None for non-series labels."""
    m = re.fullmatch(rf"({STEM})\s+([A-Z])", label)
    if m:
        return m.group(1), m.group(2)
    return None


def _find_at_boundary(abstract: str, surface: str) -> tuple[int, int] | None:
    """Leftmost case-insensitive occurrence of `surface` at word boundaries."""
    if not surface:
        return None
    for m in re.finditer(re.escape(surface), abstract, re.IGNORECASE):
        start, end = m.start(), m.end()
        before = abstract[start - 1] if start > 0 else ""
        after = abstract[end] if end < len(abstract) else ""
        if (not before or not before.isalnum()) and (not after or not after.isalnum()):
            return start, end
    return None


def match_entity(abstract: str, entity: Entity, extra_synonyms: Iterable[str] = ()) -> MentionVerdict:
    """Match an entity in an abstract: label first, then synonyms, leftmost wins."""
    if not abstract:
        raise DataError("cannot match against an empty abstract")
    span = _find_at_boundary(abstract, entity.label)
    if span:
        return MentionVerdict(
            entity_id=entity.id,
            status=MentionStatus.matched_label,
            matched_surface=abstract[span[0]:span[1]],
            span=span,
        )
    best: tuple[int, int] | None = None
    for synonym in sorted(set(entity.synonyms) | set(extra_synonyms)):
        span = _find_at_boundary(abstract, synonym)
        if span and (best is None or span[0] < best[0]):
            best = span
    if best:
        return MentionVerdict(
            entity_id=entity.id,
            status=MentionStatus.matched_synonym,
            matched_surface=abstract[best[0]:best[1]],
            span=best,
        )
    return MentionVerdict(entity_id=entity.id, status=MentionStatus.not_found)


def detect_enumerations(abstract: str) -> list[EnumerationPattern]:
    """Find co-joined enumerations and expand them to singular member labels."""
    found: list[EnumerationPattern] = []
    taken: list[tuple[int, int]] = []

    def overlaps(span):
        return any(s < span[1] and span[0] < e for s, e in taken)

    for m in RE_LETTER_RANGE.finditer(abstract):
        first, last = m.group(2), m.group(3)
        width = ord(last) - ord(first) + 1
        if width < 2 or width > MAX_SERIES_WIDTH:
            continue
        stem = singularize_stem(m.group(1))
        members = tuple(f"{stem} {chr(c)}" for c in range(ord(first), ord(last) + 1))
        found.append(EnumerationPattern(stem, "letter_range", members, m.span()))
        taken.append(m.span())

    for m in RE_LETTER_LIST.finditer(abstract):
        if overlaps(m.span()):
            continue
        letters = re.findall(r"[A-Z]", m.group(2))
        if len(letters) < 2:
            continue
        stem = singularize_stem(m.group(1))
        members = tuple(f"{stem} {letter}" for letter in letters)
        found.append(EnumerationPattern(stem, "letter_list", members, m.span()))
        taken.append(m.span())

    for m in RE_NUMBER_RANGE.finditer(abstract):
        if overlaps(m.span()):
            continue
        first, last = int(m.group(2)), int(m.group(3))
        width = last - first + 1
        if width < 2 or width > MAX_SERIES_WIDTH:
            continue
        stem = singularize_stem(m.group(1))
        members = tuple(f"{stem} {n}" for n in range(first, last + 1))
        found.append(EnumerationPattern(stem, "numbered_range", members, m.span()))
        taken.append(m.span())

    return sorted(found, key=lambda p: p.span)


@dataclass
class MentionReport:
    verdicts: list[tuple[Entity, MentionVerdict]]
    summary: dict[str, dict[str, int]]


def load_synonyms(path: str) -> dict[str, set[str]]:
    """Load a sidecar TSV synonym table: entity_id <TAB> synonym, one per line."""
    table: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise DataError(f"{path}:{lineno}: expected 'entity_id<TAB>synonym'")
            table.setdefault(parts[0].strip(), set()).add(parts[1].strip())
    return table


def classify_document_mentions(
    doc: Document, synonyms: dict[str, set[str]] | None = None
) -> MentionReport:
    """Verdict for every relation partner of a document, plus per-kind status tallies.

    Chemicals that are not matched directly but whose label equals a member
    of a detected enumeration are classified multiple_implicit.
    """
    if not doc.has_abstract():
        raise DataError(f"document {doc.id!r} has no abstract")
    synonyms = synonyms or {}
    abstract = doc.abstract or ""

    enum_members = {
        member.casefold()
        for pattern in detect_enumerations(abstract)
        for member in pattern.members
    }

    entities: list[Entity] = []
    seen: set[str] = set()
    for rel in doc.relations:
        for entity in (rel.organism, rel.chemical):
            if entity.id not in seen:
                seen.add(entity.id)
                entities.append(entity)

    verdicts = []
    summary: dict[str, Counter] = {kind.value: Counter() for kind in EntityKind}
    for entity in entities:
        verdict = match_entity(abstract, entity, synonyms.get(entity.id, ()))
        if (
            verdict.status is MentionStatus.not_found
            and entity.kind is not EntityKind.organism
            and entity.label.casefold() in enum_members
        ):
            verdict = MentionVerdict(entity_id=entity.id, status=MentionStatus.multiple_implicit)
        verdicts.append((entity, verdict))
        summary[entity.kind.value][verdict.status.value] += 1

    return MentionReport(
        verdicts=verdicts,
        summary={kind: dict(counter) for kind, counter in summary.items()},
    )
