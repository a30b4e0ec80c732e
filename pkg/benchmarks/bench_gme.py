"""Benchmark of the greedy ranking kernel: compiled extension vs numpy fallback.

Generates Zipf-skewed synthetic corpora of increasing size and times a full
ranking with each kernel implementation, verifying that both return the same
order. Run from the repository root:

    python benchmarks/bench_gme.py [--sizes 200,500,1000,2000] [--repeats 3]
"""

import argparse
import random
import statistics
import time

from divsample import _kernel
from divsample._kernel import _gme_py
from divsample.corpus import Corpus, Document, Entity, EntityKind, Relation
from divsample.sampler import _corpus_arrays


def zipf_corpus(rng, n_docs, n_orgs=None, n_chems=None, max_rels=6):
    n_orgs = n_orgs or max(20, n_docs // 4)
    n_chems = n_chems or max(30, n_docs // 2)
    org_weights = [1.0 / (i + 1) for i in range(n_orgs)]
    chem_weights = [1.0 / (i + 1) for i in range(n_chems)]
    docs = []
    for i in range(n_docs):
        pairs = set()
        for _ in range(rng.randint(1, max_rels)):
            pairs.add((
                rng.choices(range(n_orgs), weights=org_weights)[0],
                rng.choices(range(n_chems), weights=chem_weights)[0],
            ))
        relations = [
            Relation(
                Entity(id=f"O{o}", label=f"org {o}", kind=EntityKind.organism),
                Entity(id=f"C{c}", label=f"chem {c}", kind=EntityKind.chemical),
            )
            for o, c in sorted(pairs)
        ]
        docs.append(Document(f"d{i:05d}", f"t{i}", "a", "Fungi", relations))
    return Corpus(docs)


def time_kernel(fn, args, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="200,500,1000,2000",
                        help="comma-separated corpus sizes")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s]

    compiled = _kernel.BACKEND == "cython"
    print(f"active kernel backend: {_kernel.BACKEND}")
    if not compiled:
        print("compiled extension unavailable; timing the numpy fallback only\n")

    header = f"{'n_docs':>8} {'numpy (s)':>12}"
    if compiled:
        header += f" {'compiled (s)':>12} {'speedup':>9}"
    print(header)

    rng = random.Random(args.seed)
    for n_docs in sizes:
        corpus = zipf_corpus(rng, n_docs)
        docs, org_csr, chem_csr, n_rel, n_org, n_chem = _corpus_arrays(corpus)
        kernel_args = (*org_csr, *chem_csr, n_rel, n_org, n_chem, len(docs))

        t_py, result_py = time_kernel(_gme_py.gme_rank, kernel_args, args.repeats)
        row = f"{n_docs:>8} {t_py:>12.4f}"
        if compiled:
            t_cy, result_cy = time_kernel(_kernel.gme_rank, kernel_args, args.repeats)
            if list(result_cy[0]) != list(result_py[0]):
                raise SystemExit(f"kernel mismatch at n_docs={n_docs}")
            row += f" {t_cy:>12.4f} {t_py / t_cy:>8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
