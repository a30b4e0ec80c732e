import math
import random
from collections import Counter

import pytest

from divsample.corpus import Corpus, Document, Entity, EntityKind, Relation


def make_org(i):
    return Entity(id=f"O{i}", label=f"Organism {i}", kind=EntityKind.organism)


def make_chem(i):
    return Entity(id=f"C{i}", label=f"chemical{i}", kind=EntityKind.chemical)


def make_rel(o, c):
    return Relation(organism=make_org(o), chemical=make_chem(c))


def make_doc(doc_id, pairs, stratum="Fungi", abstract="An abstract.", title=""):
    return Document(
        id=doc_id,
        title=title or f"Title {doc_id}",
        abstract=abstract,
        stratum=stratum,
        relations=[make_rel(o, c) for o, c in pairs],
    )


def random_corpus(rng, n_docs=6, n_orgs=5, n_chems=5, max_rels=4, stratum="Fungi"):
    docs = []
    for i in range(n_docs):
        n = rng.randint(1, max_rels)
        pairs = set()
        while len(pairs) < n:
            pairs.add((rng.randrange(n_orgs), rng.randrange(n_chems)))
        docs.append(make_doc(f"d{i:03d}", sorted(pairs), stratum=stratum))
    return Corpus(docs)


def zipf_corpus(rng, n_docs=500, n_orgs=120, n_chems=200, max_rels=6, stratum="Fungi"):
    """Pareto-skewed corpus: entity popularity follows a Zipf-like law."""
    org_weights = [1.0 / (i + 1) for i in range(n_orgs)]
    chem_weights = [1.0 / (i + 1) for i in range(n_chems)]
    docs = []
    for i in range(n_docs):
        n = rng.randint(1, max_rels)
        pairs = set()
        attempts = 0
        while len(pairs) < n and attempts < 50:
            o = rng.choices(range(n_orgs), weights=org_weights)[0]
            c = rng.choices(range(n_chems), weights=chem_weights)[0]
            pairs.add((o, c))
            attempts += 1
        docs.append(make_doc(f"d{i:04d}", sorted(pairs), stratum=stratum))
    return Corpus(docs)


def oracle_gme(corpus):
    """From-scratch exhaustive greedy oracle: re-evaluates every candidate's
    entropies by direct -sum(p ln p) at every step. Independent of the
    incremental entropy machinery."""
    docs = {d.id: d for d in corpus.documents}
    all_o = {r.organism.id for d in corpus.documents for r in d.relations}
    all_c = {r.chemical.id for d in corpus.documents for r in d.relations}
    uo, uc = math.log(len(all_o)), math.log(len(all_c))

    def entropies(selected_ids):
        orgs, chems = Counter(), Counter()
        for sid in selected_ids:
            for rel in docs[sid].relations:
                orgs[rel.organism.id] += 1
                chems[rel.chemical.id] += 1

        def h(counter):
            tot = sum(counter.values())
            return -sum((c / tot) * math.log(c / tot) for c in counter.values())

        return h(orgs), h(chems)

    selected = []
    remaining = sorted(docs)
    trace = []
    while remaining:
        scored = []
        for did in remaining:
            ho, hc = entropies(selected + [did])
            scored.append((did, math.hypot(ho - uo, hc - uc), ho, hc))
        dmin = min(s[1] for s in scored)
        best = next(s for s in scored if s[1] <= dmin + 1e-12)
        selected.append(best[0])
        remaining.remove(best[0])
        trace.append(best)
    return selected, trace


@pytest.fixture
def rng():
    return random.Random(20240817)
