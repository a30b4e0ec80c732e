"""Synthetic-abstract generation orchestration: backend fan-out, candidate
selection and dataset assembly.

The generation backend is pluggable: an HTTP completion endpoint for real
models, and a deterministic mock (template stuffing) for tests and dry
runs. The selector keeps, per seed document, the top-k candidates whose
text explicitly covers at least a proportion q of the expected relation
labels.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from divsample.corpus import Relation
from divsample.errors import BackendError, DataError
from divsample.mention import MentionStatus, detect_enumerations, match_entity
from divsample.score import linearise
from divsample.verbalise import GenerationInstruction, VerbalisedFindings


class GenerationBackend(Protocol):
    def generate(self, prompt: str, temperature: float, max_tokens: int) -> str: ...


class MockBackend:
    """Deterministic template-stuffing backend for tests and dry runs.

    Echoes the prompt into a pseudo-abstract, so every expected label is
    present and coverage is 1.0 by construction.
    """

    def generate(self, prompt: str, temperature: float, max_tokens: int) -> str:
        return f"[synthetic t={temperature:.1f}] {prompt}"


class HTTPBackend:
    """JSON-over-HTTP completion client: {prompt, temperature, max_tokens} -> {text}."""

    def __init__(self, url: str, timeout: float = 60.0):
        self.url = url
        self.timeout = timeout

    def generate(self, prompt: str, temperature: float, max_tokens: int) -> str:
        import requests

        try:
            resp = requests.post(
                self.url,
                json={"prompt": prompt, "temperature": temperature, "max_tokens": max_tokens},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise BackendError(f"backend request failed: {exc}") from exc
        if not isinstance(payload, dict) or "text" not in payload:
            raise BackendError(f"backend response missing 'text' field: {payload!r}")
        return payload["text"]


def relation_coverage(
    text: str,
    relations: Sequence[Relation],
    synonyms: dict[str, set[str]] | None = None,
) -> float:
    """Fraction of relations whose both labels are found in `text`.

    The organism counts as found on a label or synonym match; the chemical
    on a direct match or through an expanded co-joined enumeration.
    """
    if not relations:
        return 0.0
    if not text.strip():
        return 0.0
    synonyms = synonyms or {}
    enum_members = {
        member.casefold()
        for pattern in detect_enumerations(text)
        for member in pattern.members
    }
    covered = 0
    for rel in relations:
        org = match_entity(text, rel.organism, synonyms.get(rel.organism.id, ()))
        if org.status not in (MentionStatus.matched_label, MentionStatus.matched_synonym):
            continue
        chem = match_entity(text, rel.chemical, synonyms.get(rel.chemical.id, ()))
        if chem.status in (MentionStatus.matched_label, MentionStatus.matched_synonym):
            covered += 1
        elif rel.chemical.label.casefold() in enum_members:
            covered += 1
    return covered / len(relations)


@dataclass
class GeneratedCandidate:
    seed_doc_id: str
    instruction: GenerationInstruction
    index: int
    text: str
    mention_coverage: float
    accepted: bool = False
    failed: bool = False
    error: str | None = None


def generate_candidates(
    instructions: Sequence[GenerationInstruction],
    backend: GenerationBackend,
    parallelism: int = 1,
    max_tokens: int = 1024,
    retries: int = 2,
    synonyms: dict[str, set[str]] | None = None,
) -> list[GeneratedCandidate]:
    """One candidate per instruction, in input order regardless of completion order.

    Failed calls are retried up to `retries` times, then recorded as failed
    candidates; if every call fails the run itself fails.
    """
    if parallelism < 1:
        raise DataError("parallelism must be >= 1")

    def call(item):
        index, instruction = item
        last_error = None
        for _ in range(retries + 1):
            try:
                text = backend.generate(
                    instruction.prompt_text,
                    instruction.findings.temperature,
                    max_tokens,
                )
                coverage = relation_coverage(
                    text, instruction.findings.expected_relations, synonyms
                )
                return GeneratedCandidate(
                    seed_doc_id=instruction.seed_doc_id,
                    instruction=instruction,
                    index=index,
                    text=text,
                    mention_coverage=coverage,
                )
            except BackendError as exc:
                last_error = str(exc)
        return GeneratedCandidate(
            seed_doc_id=instruction.seed_doc_id,
            instruction=instruction,
            index=index,
            text="",
            mention_coverage=0.0,
            failed=True,
            error=last_error,
        )

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        candidates = list(pool.map(call, enumerate(instructions)))

    if candidates and all(c.failed for c in candidates):
        raise BackendError("all generation calls failed; aborting run")
    return candidates


def select_top_k(
    candidates: Sequence[GeneratedCandidate],
    k: int,
    q: float = 1.0,
    seed_abstract_length: int | None = None,
) -> list[GeneratedCandidate]:
    """Keep the up-to-k most relevant candidates of one seed document.

    Eligibility is mention_coverage >= q; ordering is coverage descending,
    then closeness of the text length to the seed abstract length, then
    candidate index.
    """
    if k < 1:
        raise DataError("k must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise DataError("q must be within [0, 1]")
    eligible = [c for c in candidates if not c.failed and c.mention_coverage >= q]

    def sort_key(c: GeneratedCandidate):
        length_penalty = (
            abs(len(c.text) - seed_abstract_length) if seed_abstract_length is not None else 0
        )
        return (-c.mention_coverage, length_penalty, c.index)

    chosen = sorted(eligible, key=sort_key)[:k]
    for c in chosen:
        c.accepted = True
    return chosen


@dataclass
class SyntheticDataset:
    examples: list[dict] = field(default_factory=list)
    split: str = "train"


def assemble_dataset(
    accepted: Sequence[GeneratedCandidate],
    split_ratio: float = 0.9,
    seed: int = 0,
) -> tuple[SyntheticDataset, SyntheticDataset]:
    """Split accepted candidates into train/valid by seed document id.

    All candidates of one seed land in the same split to prevent leakage.
    """
    if not 0.0 < split_ratio < 1.0:
        raise DataError("split_ratio must be strictly between 0 and 1")
    by_seed: dict[str, list[GeneratedCandidate]] = {}
    for cand in accepted:
        by_seed.setdefault(cand.seed_doc_id, []).append(cand)
    seed_ids = sorted(by_seed)
    rng = random.Random(seed)
    rng.shuffle(seed_ids)
    n_train = int(round(len(seed_ids) * split_ratio))
    train_ids = set(seed_ids[:n_train])

    def example(cand: GeneratedCandidate) -> dict:
        findings: VerbalisedFindings = cand.instruction.findings
        return {
            "input": cand.text,
            "output": linearise(findings.expected_relations),
            "provenance": {
                "seed_doc_id": cand.seed_doc_id,
                "applied": sorted(findings.applied),
                "temperature": findings.temperature,
                "coverage": cand.mention_coverage,
            },
        }

    train = SyntheticDataset(split="train")
    valid = SyntheticDataset(split="valid")
    for sid in sorted(by_seed):
        target = train if sid in train_ids else valid
        for cand in sorted(by_seed[sid], key=lambda c: c.index):
            target.examples.append(example(cand))
    return train, valid


def write_dataset(dataset: SyntheticDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset.examples:
            fh.write(json.dumps(ex, ensure_ascii=False, sort_keys=True) + "\n")
