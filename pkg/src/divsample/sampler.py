"""Greedy maximum-entropy ranking, baseline samplers and trace analysis.

The greedy loop ranks documents by repeatedly selecting the candidate whose
addition minimizes the Euclidean distance of the sample's (organism,
chemical) entropies to the utopian point (ln|O|, ln|C|) of the candidate
pool. The inner candidate scan runs in the compiled kernel when available
(see divsample._kernel).
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from typing import Literal

import numpy as np

from divsample import _kernel
from divsample.corpus import Corpus
from divsample.entropy import doc_entity_counts
from divsample.errors import DataError, NoKneeError

Curve = Literal["organisms", "chemicals"]


@dataclass(frozen=True)
class TraceStep:
    rank: int
    doc_id: str
    h_organisms: float
    h_chemicals: float
    distance: float


@dataclass
class SamplerTrace:
    steps: list[TraceStep]

    def __len__(self) -> int:
        return len(self.steps)

    def curve(self, which: Curve) -> list[float]:
        if which == "organisms":
            return [s.h_organisms for s in self.steps]
        if which == "chemicals":
            return [s.h_chemicals for s in self.steps]
        raise DataError(f"unknown curve {which!r}")


@dataclass(frozen=True)
class KneeReport:
    rank: int
    entropy_at_knee: float
    curve: Curve
    sensitivity: float


def _corpus_arrays(corpus: Corpus):
    """CSR layout of per-document aggregated entity counts, docs sorted by id."""
    docs = sorted(corpus.documents, key=lambda d: d.id)
    for doc in docs:
        if doc.n_d == 0:
            raise DataError(f"document {doc.id!r} has no relations; not admissible for sampling")
    org_ids = sorted({r.organism.id for d in docs for r in d.relations})
    chem_ids = sorted({r.chemical.id for d in docs for r in d.relations})
    org_pos = {e: i for i, e in enumerate(org_ids)}
    chem_pos = {e: i for i, e in enumerate(chem_ids)}

    org_indptr, org_idx, org_cnt = [0], [], []
    chem_indptr, chem_idx, chem_cnt = [0], [], []
    n_rel = []
    for doc in docs:
        orgs, chems = doc_entity_counts(doc)
        for eid in sorted(orgs):
            org_idx.append(org_pos[eid])
            org_cnt.append(orgs[eid])
        org_indptr.append(len(org_idx))
        for eid in sorted(chems):
            chem_idx.append(chem_pos[eid])
            chem_cnt.append(chems[eid])
        chem_indptr.append(len(chem_idx))
        n_rel.append(doc.n_d)

    arr = lambda x: np.asarray(x, dtype=np.int64)
    return (
        docs,
        (arr(org_indptr), arr(org_idx), arr(org_cnt)),
        (arr(chem_indptr), arr(chem_idx), arr(chem_cnt)),
        arr(n_rel),
        len(org_ids),
        len(chem_ids),
    )


def gme_sample(corpus: Corpus, l: int | str = "all") -> tuple[list[str], SamplerTrace]:
    """Rank documents greedily by utopian-distance minimization.

    `l` is the number of steps, or "all" to rank the whole corpus. Returns
    the ranked document ids and the per-step entropy/distance trace.
    """
    if len(corpus) == 0:
        raise DataError("cannot sample from an empty corpus")
    n_steps = len(corpus) if l == "all" else int(l)
    if n_steps < 1 or n_steps > len(corpus):
        raise DataError(f"l={l!r} out of range for corpus of {len(corpus)} documents")

    docs, org_csr, chem_csr, n_rel, n_org, n_chem = _corpus_arrays(corpus)
    order, h_o, h_c, dist = _kernel.gme_rank(
        *org_csr, *chem_csr, n_rel, n_org, n_chem, n_steps
    )
    ranked = [docs[i].id for i in order]
    steps = [
        TraceStep(rank=i + 1, doc_id=ranked[i], h_organisms=float(h_o[i]),
                  h_chemicals=float(h_c[i]), distance=float(dist[i]))
        for i in range(n_steps)
    ]
    return ranked, SamplerTrace(steps)


def stratified_gme(
    corpus: Corpus, n_per_stratum: int, full_trace: bool = False
) -> dict[str, tuple[list[str], SamplerTrace]]:
    """Run the greedy ranking independently within each stratum, keeping the top n."""
    if n_per_stratum < 1:
        raise DataError("n_per_stratum must be >= 1")
    from divsample.corpus import stratify

    out = {}
    for stratum, sub in sorted(stratify(corpus).items()):
        l = len(sub) if full_trace else min(n_per_stratum, len(sub))
        ranked, trace = gme_sample(sub, l)
        out[stratum] = (ranked[:n_per_stratum], trace)
    return out


def _stratum_rng(seed: int, stratum: str) -> random.Random:
    return random.Random(f"{seed}:{stratum}")


def random_sample(
    corpus: Corpus, n_per_stratum: int, seed: int, exclude: set[str] | None = None
) -> dict[str, list[str]]:
    """Uniform without-replacement sample per stratum, reproducible from `seed`."""
    from divsample.corpus import stratify

    exclude = exclude or set()
    out = {}
    for stratum, sub in sorted(stratify(corpus).items()):
        ids = [d.id for d in sub.documents if d.id not in exclude]
        rng = _stratum_rng(seed, stratum)
        out[stratum] = rng.sample(ids, min(n_per_stratum, len(ids)))
    return out


def top_entity_sample(
    corpus: Corpus,
    n_per_stratum: int,
    criterion: Literal["organisms", "chemicals", "relations"],
) -> dict[str, list[str]]:
    """Per stratum, the top-n documents by per-document distinct-entity count."""
    from divsample.corpus import stratify

    def key(doc):
        if criterion == "organisms":
            score = len({r.organism.id for r in doc.relations})
        elif criterion == "chemicals":
            score = len({r.chemical.id for r in doc.relations})
        elif criterion == "relations":
            score = doc.n_d
        else:
            raise DataError(f"unknown criterion {criterion!r}")
        return (-score, doc.id)

    out = {}
    for stratum, sub in sorted(stratify(corpus).items()):
        ranked = sorted(sub.documents, key=key)
        out[stratum] = [d.id for d in ranked[:n_per_stratum]]
    return out


def detect_knee(trace: SamplerTrace, curve: Curve, sensitivity: float = 1.0) -> KneeReport:
    """Find the bending point of an entropy-vs-rank curve.

    The knee is the interior rank with maximal discrete bending (second
    difference) of the min-max normalized curve; invariant under affine
    rescaling of the entropy axis. A curve without curvature (straight
    line) has no knee.
    """
    if len(trace) < 3:
        raise DataError("knee detection needs a trace of length >= 3")
    y = trace.curve(curve)
    y_min, y_max = min(y), max(y)
    if y_max - y_min <= 0.0:
        raise NoKneeError(f"{curve} trace is constant; no knee")
    y_n = [(v - y_min) / (y_max - y_min) for v in y]
    bend = [abs(y_n[i - 1] - 2.0 * y_n[i] + y_n[i + 1]) for i in range(1, len(y_n) - 1)]
    best = max(bend)
    if best < 1e-9:
        raise NoKneeError(f"{curve} trace has no curvature; no knee")
    rank = bend.index(best) + 2  # interior index i -> 1-based rank i+1
    return KneeReport(
        rank=rank,
        entropy_at_knee=y[rank - 1],
        curve=curve,
        sensitivity=sensitivity,
    )


def percent_of_max(trace: SamplerTrace, at_rank: int, curve: Curve) -> float:
    """Entropy at a rank as a percentage of the trace's maximal observed entropy."""
    if not 1 <= at_rank <= len(trace):
        raise DataError(f"at_rank={at_rank} out of range for trace of length {len(trace)}")
    y = trace.curve(curve)
    peak = max(y)
    if peak <= 0.0:
        raise DataError("maximal entropy is zero; percent-of-max undefined")
    return 100.0 * y[at_rank - 1] / peak


def write_trace_csv(traces: dict[str, SamplerTrace], path: str) -> None:
    """Write per-stratum traces as CSV with 9-decimal fixed formatting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "doc_id", "stratum", "h_organisms", "h_chemicals", "distance"])
        for stratum in sorted(traces):
            for step in traces[stratum].steps:
                writer.writerow([
                    step.rank,
                    step.doc_id,
                    stratum,
                    f"{step.h_organisms:.9f}",
                    f"{step.h_chemicals:.9f}",
                    f"{step.distance:.9f}",
                ])


def read_trace_csv(path: str) -> dict[str, SamplerTrace]:
    traces: dict[str, list[TraceStep]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"rank", "doc_id", "stratum", "h_organisms", "h_chemicals", "distance"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise DataError(f"{path}: not a trace CSV (header {reader.fieldnames})")
        for row in reader:
            step = TraceStep(
                rank=int(row["rank"]),
                doc_id=row["doc_id"],
                h_organisms=float(row["h_organisms"]),
                h_chemicals=float(row["h_chemicals"]),
                distance=float(row["distance"]),
            )
            traces.setdefault(row["stratum"], []).append(step)
    return {s: SamplerTrace(steps) for s, steps in traces.items()}
