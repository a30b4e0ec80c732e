"""Pipeline configuration and end-to-end orchestration.

A single TOML file with sections mirroring the module names drives the
whole run; unknown keys are rejected so that a config is a faithful
manifest of what executed. All randomness flows from one root seed, split
per stage and per document id, so reruns are byte-identical (mock
backend).
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from divsample import corpus as corpus_mod
from divsample import sampler as sampler_mod
from divsample import synthgen
from divsample.errors import BackendError, DataError
from divsample.mention import load_synonyms
from divsample.verbalise import (
    GenerationInstruction,
    TransformationConfig,
    VerbalisedFindings,
    build_exclusion_list,
    derive_seed,
    filter_keywords,
    make_instructions,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class CorpusConfig:
    input: str = ""
    format: str = "tsv"
    max_relations: int = 20
    max_label_chars: int = 60
    require_abstract: bool = True


@dataclass
class SamplerConfig:
    strategy: str = "gme"
    n: int = 500
    stratify: bool = True


@dataclass
class VerbaliseConfig:
    m: int = 10
    template: str = "default"
    max_keywords: int = 10
    p_class_replace: float = 0.2
    p_contract: float = 0.9
    p_shuffle: float = 0.25
    p_number: float = 0.9
    p_direction: float = 0.5
    temperatures: list[float] = field(default_factory=lambda: [0.5, 0.6, 0.7, 0.8])
    classes: str = ""  # optional sidecar TSV: chemical_id, class_id, class_label

    def transformation_config(self, rng_seed: int = 0) -> TransformationConfig:
        return TransformationConfig(
            p_class_replace=self.p_class_replace,
            p_contract=self.p_contract,
            p_shuffle=self.p_shuffle,
            p_number=self.p_number,
            p_direction=self.p_direction,
            temperatures=frozenset(self.temperatures),
            rng_seed=rng_seed,
        )


@dataclass
class GenerateConfig:
    backend: str = "mock"  # "mock" or "http"
    url: str = ""
    timeout: float = 60.0
    retries: int = 2
    parallelism: int = 4
    max_tokens: int = 1024
    k: int = 3
    q: float = 1.0
    synonyms: str = ""  # optional sidecar synonym TSV


@dataclass
class AssembleConfig:
    split_ratio: float = 0.9


@dataclass
class ScoreConfig:
    gold: str = ""
    matching: str = "casefold"


@dataclass
class PipelineConfig:
    seed: int = 0
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    verbalise: VerbaliseConfig = field(default_factory=VerbaliseConfig)
    generate: GenerateConfig = field(default_factory=GenerateConfig)
    assemble: AssembleConfig = field(default_factory=AssembleConfig)
    score: ScoreConfig = field(default_factory=ScoreConfig)

    _SECTIONS = {
        "corpus": CorpusConfig,
        "sampler": SamplerConfig,
        "verbalise": VerbaliseConfig,
        "generate": GenerateConfig,
        "assemble": AssembleConfig,
        "score": ScoreConfig,
    }

    @classmethod
    def from_toml(cls, path: str) -> "PipelineConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        cfg = cls()
        for key, value in raw.items():
            if key == "seed":
                cfg.seed = int(value)
            elif key in cls._SECTIONS:
                section_cls = cls._SECTIONS[key]
                section = getattr(cfg, key)
                known = set(section_cls.__dataclass_fields__)
                unknown = set(value) - known
                if unknown:
                    raise DataError(
                        f"{path}: unknown key(s) in [{key}]: {', '.join(sorted(unknown))}"
                    )
                for k, v in value.items():
                    setattr(section, k, v)
            else:
                raise DataError(f"{path}: unknown config section or key {key!r}")
        return cfg

    def to_dict(self) -> dict:
        return {"seed": self.seed, **{name: asdict(getattr(self, name)) for name in self._SECTIONS}}


def load_class_map(path: str) -> dict[str, corpus_mod.Entity]:
    """Sidecar TSV: chemical_id <TAB> class_id <TAB> class_label."""
    out: dict[str, corpus_mod.Entity] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 'chemical_id<TAB>class_id<TAB>class_label'")
            out[parts[0]] = corpus_mod.Entity(
                id=parts[1], label=parts[2], kind=corpus_mod.EntityKind.chemical_class
            )
    return out


# --- artifact serialization -------------------------------------------------

def instruction_to_json(instr: GenerationInstruction) -> dict:
    return {
        "doc_id": instr.seed_doc_id,
        "title": instr.title,
        "keywords": instr.keywords,
        "prompt_text": instr.prompt_text,
        "findings_text": instr.findings.text,
        "expected_relations": [r.to_json() for r in instr.findings.expected_relations],
        "applied": sorted(instr.findings.applied),
        "direction": instr.findings.direction,
        "temperature": instr.findings.temperature,
    }


def instruction_from_json(obj: dict) -> GenerationInstruction:
    findings = VerbalisedFindings(
        text=obj.get("findings_text", ""),
        expected_relations=[corpus_mod.Relation.from_json(r) for r in obj["expected_relations"]],
        applied=set(obj.get("applied", ())),
        direction=obj.get("direction", "produces"),
        temperature=float(obj["temperature"]),
    )
    return GenerationInstruction(
        seed_doc_id=obj["doc_id"],
        title=obj.get("title", ""),
        keywords=list(obj.get("keywords", ())),
        findings=findings,
        prompt_text=obj["prompt_text"],
    )


def candidate_to_json(cand: synthgen.GeneratedCandidate) -> dict:
    out = instruction_to_json(cand.instruction)
    out.update({
        "index": cand.index,
        "text": cand.text,
        "mention_coverage": cand.mention_coverage,
        "accepted": cand.accepted,
        "failed": cand.failed,
        "error": cand.error,
    })
    return out


def candidate_from_json(obj: dict) -> synthgen.GeneratedCandidate:
    return synthgen.GeneratedCandidate(
        seed_doc_id=obj["doc_id"],
        instruction=instruction_from_json(obj),
        index=int(obj["index"]),
        text=obj.get("text", ""),
        mention_coverage=float(obj["mention_coverage"]),
        accepted=bool(obj.get("accepted", False)),
        failed=bool(obj.get("failed", False)),
        error=obj.get("error"),
    )


def write_jsonl(records: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return out


def title_keywords(doc: corpus_mod.Document, exclusion: set[str], limit: int) -> list[str]:
    """Cheap keyword candidates from the title, filtered by the exclusion list.

    Stands in for a model-based keyword extractor, which is delegated to the
    generation backend and out of scope here.
    """
    words = [w.strip(".,;:()[]") for w in doc.title.split()]
    candidates = [w for w in words if len(w) >= 4]
    return filter_keywords(candidates, exclusion)[:limit]


# --- orchestration ----------------------------------------------------------

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_pipeline(config: PipelineConfig, out_dir: str) -> Path:
    """Execute preprocess -> sample -> verbalise -> generate/select -> assemble
    (-> score, when a gold file is configured), writing every intermediate
    artifact and a manifest with content hashes.

    A stage failure aborts with the stage name; artifacts of completed
    stages are preserved.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, dict[str, str]] = {}

    def record(stage: str, *paths: Path) -> None:
        artifacts.setdefault(stage, {})
        for path in paths:
            artifacts[stage][path.name] = _sha256(path)

    def run_stage(stage: str, fn):
        try:
            return fn()
        except (DataError, BackendError, OSError) as exc:
            raise type(exc)(f"stage {stage!r} failed: {exc}") from exc

    # preprocess
    def stage_preprocess():
        raw = corpus_mod.load_corpus(config.corpus.input, config.corpus.format)
        pre = corpus_mod.preprocess(
            raw,
            max_relations=config.corpus.max_relations,
            max_label_chars=config.corpus.max_label_chars,
            require_abstract=config.corpus.require_abstract,
        )
        path = out / "corpus.jsonl"
        corpus_mod.save_corpus(pre, str(path))
        record("preprocess", path)
        return pre

    pre = run_stage("preprocess", stage_preprocess)

    # sample
    def stage_sample():
        cfg = config.sampler
        if cfg.strategy == "gme":
            if cfg.stratify:
                per_stratum = sampler_mod.stratified_gme(pre, cfg.n)
            else:
                ranked, trace = sampler_mod.gme_sample(pre, min(cfg.n, len(pre)))
                per_stratum = {"all": (ranked, trace)}
            ranked_ids = []
            traces = {}
            for stratum, (ids, trace) in sorted(per_stratum.items()):
                traces[stratum] = trace
                ranked_ids.extend((rank + 1, doc_id, stratum) for rank, doc_id in enumerate(ids))
        elif cfg.strategy == "random":
            sampled = sampler_mod.random_sample(pre, cfg.n, derive_seed(config.seed, "sample"))
            traces = {}
            ranked_ids = [
                (rank + 1, doc_id, stratum)
                for stratum, ids in sorted(sampled.items())
                for rank, doc_id in enumerate(ids)
            ]
        else:
            raise DataError(f"unsupported pipeline sampling strategy {cfg.strategy!r}")
        ranked_path = out / "ranked.jsonl"
        write_jsonl(
            [{"rank": r, "doc_id": d, "stratum": s} for r, d, s in ranked_ids],
            str(ranked_path),
        )
        trace_path = out / "trace.csv"
        sampler_mod.write_trace_csv(traces, str(trace_path))
        record("sample", ranked_path, trace_path)
        return [doc_id for _, doc_id, _ in ranked_ids]

    sampled_ids = run_stage("sample", stage_sample)

    # verbalise
    def stage_verbalise():
        vcfg = config.verbalise
        class_map = load_class_map(vcfg.classes) if vcfg.classes else {}
        synonyms = load_synonyms(config.generate.synonyms) if config.generate.synonyms else {}
        instructions = []
        for doc_id in sampled_ids:
            doc = pre.get(doc_id)
            exclusion = build_exclusion_list(doc, synonyms=synonyms)
            keywords = title_keywords(doc, exclusion, vcfg.max_keywords)
            instructions.extend(
                make_instructions(
                    doc,
                    keywords,
                    vcfg.transformation_config(),
                    m=vcfg.m,
                    root_seed=derive_seed(config.seed, "verbalise"),
                    class_map=class_map,
                    template_id=vcfg.template,
                )
            )
        path = out / "instructions.jsonl"
        write_jsonl([instruction_to_json(i) for i in instructions], str(path))
        record("verbalise", path)
        return instructions

    instructions = run_stage("verbalise", stage_verbalise)

    # generate + select
    def stage_generate():
        gcfg = config.generate
        if gcfg.backend == "mock":
            backend = synthgen.MockBackend()
        elif gcfg.backend == "http":
            backend = synthgen.HTTPBackend(gcfg.url, timeout=gcfg.timeout)
        else:
            raise DataError(f"unknown backend {gcfg.backend!r} (expected mock or http)")
        candidates = synthgen.generate_candidates(
            instructions,
            backend,
            parallelism=gcfg.parallelism,
            max_tokens=gcfg.max_tokens,
            retries=gcfg.retries,
        )
        by_seed: dict[str, list[synthgen.GeneratedCandidate]] = {}
        for cand in candidates:
            by_seed.setdefault(cand.seed_doc_id, []).append(cand)
        accepted = []
        for seed_id in sorted(by_seed):
            doc = pre.get(seed_id)
            length = len(doc.abstract) if doc.abstract else None
            accepted.extend(
                synthgen.select_top_k(
                    by_seed[seed_id], k=gcfg.k, q=gcfg.q, seed_abstract_length=length
                )
            )
        path = out / "candidates.jsonl"
        write_jsonl([candidate_to_json(c) for c in candidates], str(path))
        record("generate", path)
        return accepted

    accepted = run_stage("generate", stage_generate)

    # assemble
    def stage_assemble():
        train, valid = synthgen.assemble_dataset(
            accepted,
            split_ratio=config.assemble.split_ratio,
            seed=derive_seed(config.seed, "assemble"),
        )
        train_path = out / "train.jsonl"
        valid_path = out / "valid.jsonl"
        synthgen.write_dataset(train, str(train_path))
        synthgen.write_dataset(valid, str(valid_path))
        record("assemble", train_path, valid_path)

    run_stage("assemble", stage_assemble)

    # score (optional)
    if config.score.gold:
        def stage_score():
            from divsample import score as score_mod

            gold = score_mod.load_gold(config.score.gold)
            pred_path = out / "valid.jsonl"
            pred = {}
            for rec in read_jsonl(str(pred_path)):
                doc_id = rec["provenance"]["seed_doc_id"]
                pred.setdefault(doc_id, set()).update(
                    score_mod.parse_output(rec["output"]).pairs
                )
            report = score_mod.score(gold, pred, matching=config.score.matching)
            path = out / "score.json"
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(
                    {
                        "precision": report.precision,
                        "recall": report.recall,
                        "f1": report.f1,
                        "true_positives": report.true_positives,
                        "false_positives": report.false_positives,
                        "false_negatives": report.false_negatives,
                    },
                    fh,
                    indent=2,
                    sort_keys=True,
                )
                fh.write("\n")
            record("score", path)

        run_stage("score", stage_score)

    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(
            {"config": config.to_dict(), "artifacts": artifacts},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return manifest_path
