"""Findings verbalisation and instruction assembly for synthetic-abstract
generation.

The verbaliser is a seeded sampler over five expression transformations:
(1) replacement of a same-class chemical group by its class mention,
(2) contraction of derivative series into "Stem A-D" surfaces,
(3) shuffling of the relation order (also applied to the output labels),
(4) numbering of contracted series, e.g. "(1-4)",
(5) flipping the direction to "C was isolated from O".
Class replacement rewrites the expected output labels; contraction and
numbering change the text only.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from divsample.corpus import Document, Entity, EntityKind, Relation
from divsample.errors import DataError
from divsample.mention import split_series_label

COUNT_WORDS = [
    "Zero", "One", "Two", "Three", "Four", "Five", "Six", "Seven", "Eight",
    "Nine", "Ten", "Eleven", "Twelve", "Thirteen", "Fourteen", "Fifteen",
    "Sixteen", "Seventeen", "Eighteen", "Nineteen", "Twenty",
]


@dataclass(frozen=True)
class TransformationConfig:
    p_class_replace: float = 0.2
    p_contract: float = 0.9
    p_shuffle: float = 0.25
    p_number: float = 0.9
    p_direction: float = 0.5
    temperatures: frozenset[float] = frozenset({0.5, 0.6, 0.7, 0.8})
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("p_class_replace", "p_contract", "p_shuffle", "p_number", "p_direction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DataError(f"{name}={p} outside [0, 1]")
        if not self.temperatures:
            raise DataError("temperatures must be non-empty")
        object.__setattr__(self, "temperatures", frozenset(self.temperatures))


@dataclass
class VerbalisedFindings:
    text: str
    expected_relations: list[Relation]
    applied: set[str]
    direction: str  # "produces" | "isolated_from"
    temperature: float


@dataclass
class GenerationInstruction:
    seed_doc_id: str
    title: str
    keywords: list[str]
    findings: VerbalisedFindings
    prompt_text: str


def build_exclusion_list(
    doc: Document,
    annotations: Iterable[str] = (),
    synonyms: dict[str, set[str]] | None = None,
) -> set[str]:
    """Case-folded union of entity labels, synonyms and external NER surfaces."""
    synonyms = synonyms or {}
    out: set[str] = set()
    for rel in doc.relations:
        for entity in (rel.organism, rel.chemical):
            out.add(entity.label.casefold())
            out.update(s.casefold() for s in entity.synonyms)
            out.update(s.casefold() for s in synonyms.get(entity.id, ()))
    out.update(s.casefold() for s in annotations)
    return out


def filter_keywords(candidates: Sequence[str], exclusion: set[str]) -> list[str]:
    """Drop keywords equal to, containing, or contained in any exclusion entry."""
    kept = []
    for candidate in candidates:
        cf = candidate.casefold()
        if any(cf == entry or cf in entry or entry in cf for entry in exclusion):
            continue
        kept.append(candidate)
    return kept


def _count_word(n: int) -> str:
    return COUNT_WORDS[n] if n < len(COUNT_WORDS) else str(n)


def _join_surfaces(surfaces: list[str]) -> str:
    if len(surfaces) == 1:
        return surfaces[0]
    return ", ".join(surfaces[:-1]) + " and " + surfaces[-1]


@dataclass
class _Unit:
    surface: str
    relations: list[Relation]
    plural: bool = False


def _contract_surface(stem: str, letters: list[str], numbered: bool) -> str:
    plural = stem + "s" if not stem.endswith("s") else stem
    consecutive = all(
        ord(b) - ord(a) == 1 for a, b in zip(letters, letters[1:])
    )
    if consecutive and len(letters) > 2:
        body = f"{plural} {letters[0]}-{letters[-1]}"
    elif consecutive and len(letters) == 2:
        body = f"{plural} {letters[0]} and {letters[1]}"
    else:
        body = f"{plural} " + _join_surfaces(letters)
    if numbered:
        body += f" (1-{len(letters)})"
    return body


def verbalise_findings(
    relations: Sequence[Relation],
    class_map: dict[str, Entity] | None = None,
    cfg: TransformationConfig = TransformationConfig(),
) -> VerbalisedFindings:
    """Render a findings block from relations, sampling the transformations.

    Deterministic given (relations, class_map, cfg): all randomness flows
    from cfg.rng_seed.
    """
    if not relations:
        raise DataError("cannot verbalise an empty relation list")
    class_map = class_map or {}
    rng = random.Random(cfg.rng_seed)
    applied: set[str] = set()

    order = list(relations)
    if rng.random() < cfg.p_shuffle:
        rng.shuffle(order)
        applied.add("shuffle")

    # group by organism, in order of first appearance
    groups: list[tuple[Entity, list[Relation]]] = []
    pos: dict[str, int] = {}
    for rel in order:
        if rel.organism.id not in pos:
            pos[rel.organism.id] = len(groups)
            groups.append((rel.organism, []))
        groups[pos[rel.organism.id]][1].append(rel)

    direction = "produces"
    if rng.random() < cfg.p_direction:
        direction = "isolated_from"
        applied.add("direction_flip")

    sentences = []
    expected: list[Relation] = []
    for organism, rels in groups:
        units: list[_Unit] = []
        remaining = list(rels)

        # (1) class replacement for whole same-class groups of >= 2 chemicals
        by_class: dict[str, list[Relation]] = {}
        for rel in remaining:
            cls = class_map.get(rel.chemical.id)
            if cls is not None:
                by_class.setdefault(cls.id, []).append(rel)
        replaced: set[int] = set()
        for cls_id in sorted(by_class):
            members = by_class[cls_id]
            if len(members) < 2:
                continue
            if rng.random() < cfg.p_class_replace:
                cls = class_map[members[0].chemical.id]
                surface = f"{_count_word(len(members))} {cls.label}"
                class_entity = Entity(
                    id=cls.id, label=cls.label, synonyms=cls.synonyms,
                    kind=EntityKind.chemical_class,
                )
                units.append(_Unit(surface, [Relation(organism, class_entity)], plural=len(members) > 1))
                replaced.update(id(rel) for rel in members)
                applied.add("class_replace")
        remaining = [rel for rel in remaining if id(rel) not in replaced]

        # (2) contraction of derivative series sharing a stem
        by_stem: dict[str, list[tuple[str, Relation]]] = {}
        for rel in remaining:
            parts = split_series_label(rel.chemical.label)
            if parts:
                by_stem.setdefault(parts[0], []).append((parts[1], rel))
        contracted: set[int] = set()
        stem_units: list[_Unit] = []
        for stem in sorted(by_stem):
            if stem.endswith("s"):
                # pluralized surface would not round-trip through the
                # enumeration grammar (singularization strips the 's')
                continue
            series = sorted(by_stem[stem], key=lambda t: t[0])
            letters = [letter for letter, _ in series]
            if len(series) < 2 or len(set(letters)) != len(letters):
                continue
            if rng.random() < cfg.p_contract:
                numbered = rng.random() < cfg.p_number
                if numbered:
                    applied.add("number")
                surface = _contract_surface(stem, letters, numbered)
                stem_units.append(_Unit(surface, [rel for _, rel in series], plural=True))
                contracted.update(id(rel) for _, rel in series)
                applied.add("contract")
        remaining = [rel for rel in remaining if id(rel) not in contracted]

        for rel in remaining:
            units.append(_Unit(rel.chemical.label, [rel]))
        units.extend(stem_units)

        joined = _join_surfaces([u.surface for u in units])
        many = len(units) > 1 or any(u.plural for u in units)
        if direction == "produces":
            sentences.append(f"{organism.label} produces {joined}.")
        else:
            verb = "were" if many else "was"
            sentences.append(f"{joined} {verb} isolated from {organism.label}.")
        for unit in units:
            expected.extend(unit.relations)

    temperature = rng.choice(sorted(cfg.temperatures))
    return VerbalisedFindings(
        text=" ".join(sentences),
        expected_relations=expected,
        applied=applied,
        direction=direction,
        temperature=temperature,
    )


def _load_template(template_id: str, templates_dir: str | None = None) -> str:
    if templates_dir is not None:
        path = Path(templates_dir) / f"{template_id}.txt"
        if not path.is_file():
            raise DataError(f"unknown template {template_id!r} (no {path})")
        return path.read_text(encoding="utf-8")
    ref = resources.files("divsample") / "templates" / f"{template_id}.txt"
    if not ref.is_file():
        raise DataError(f"unknown template {template_id!r}")
    return ref.read_text(encoding="utf-8")


def build_instruction(
    doc: Document,
    keywords: Sequence[str],
    findings: VerbalisedFindings,
    template_id: str = "default",
    templates_dir: str | None = None,
) -> GenerationInstruction:
    """Render the generation prompt from a named template file."""
    template = _load_template(template_id, templates_dir)
    prompt = template.format(
        title=doc.title,
        keywords=", ".join(keywords),
        findings=findings.text,
    )
    return GenerationInstruction(
        seed_doc_id=doc.id,
        title=doc.title,
        keywords=list(keywords),
        findings=findings,
        prompt_text=prompt,
    )


def derive_seed(root_seed: int, *parts) -> int:
    """Stable per-document / per-instruction seed from a root seed."""
    key = ":".join([str(root_seed), *map(str, parts)]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def make_instructions(
    doc: Document,
    keywords: Sequence[str],
    cfg: TransformationConfig,
    m: int,
    root_seed: int,
    class_map: dict[str, Entity] | None = None,
    template_id: str = "default",
    templates_dir: str | None = None,
) -> list[GenerationInstruction]:
    """Sample m instruction prompts with independent verbalisation patterns."""
    if not doc.relations:
        raise DataError(f"document {doc.id!r} has no relations to verbalise")
    out = []
    for j in range(m):
        seeded = TransformationConfig(
            p_class_replace=cfg.p_class_replace,
            p_contract=cfg.p_contract,
            p_shuffle=cfg.p_shuffle,
            p_number=cfg.p_number,
            p_direction=cfg.p_direction,
            temperatures=cfg.temperatures,
            rng_seed=derive_seed(root_seed, doc.id, j),
        )
        findings = verbalise_findings(doc.relations, class_map, seeded)
        out.append(build_instruction(doc, keywords, findings, template_id, templates_dir))
    return out
