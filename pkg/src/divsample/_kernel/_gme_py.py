"""Pure-Python (numpy) fallback for the greedy maximum-entropy ranking kernel.

Same contract as the compiled kernel: documents are given in CSR form with
per-document aggregated entity indices and multiplicities, pre-sorted by
ascending document id so that the tie-break (lowest index) matches the
documented ascending-id rule.
"""

from __future__ import annotations

import math

import numpy as np

TIE_TOL = 1e-12


def _seg_sums(vals: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    return np.add.reduceat(vals, indptr[:-1])


def gme_rank(
    org_indptr: np.ndarray,
    org_idx: np.ndarray,
    org_cnt: np.ndarray,
    chem_indptr: np.ndarray,
    chem_idx: np.ndarray,
    chem_cnt: np.ndarray,
    n_rel: np.ndarray,
    n_org: int,
    n_chem: int,
    l: int,
):
    """Rank the first `l` documents by greedy utopian-distance minimization.

    Returns (order, h_org, h_chem, dist) arrays of length `l`, where order
    holds document positions in the input ordering.
    """
    n_docs = len(n_rel)
    utop_o = math.log(n_org)
    utop_c = math.log(n_chem)

    org_counts = np.zeros(n_org, dtype=np.int64)
    chem_counts = np.zeros(n_chem, dtype=np.int64)
    tot = 0
    sum_o = 0.0
    sum_c = 0.0

    remaining = np.ones(n_docs, dtype=bool)
    order = np.empty(l, dtype=np.int64)
    out_ho = np.empty(l, dtype=np.float64)
    out_hc = np.empty(l, dtype=np.float64)
    out_d = np.empty(l, dtype=np.float64)

    n_rel_f = n_rel.astype(np.float64)

    for step in range(l):
        # xlogx deltas for every candidate's touched entities, summed per doc
        co = org_counts[org_idx]
        co_new = co + org_cnt
        dvals_o = co_new * np.log(co_new) - np.where(co > 0, co * np.log(np.maximum(co, 1)), 0.0)
        delta_o = _seg_sums(dvals_o, org_indptr)

        cc = chem_counts[chem_idx]
        cc_new = cc + chem_cnt
        dvals_c = cc_new * np.log(cc_new) - np.where(cc > 0, cc * np.log(np.maximum(cc, 1)), 0.0)
        delta_c = _seg_sums(dvals_c, chem_indptr)

        new_tot = tot + n_rel_f
        log_new_tot = np.log(new_tot)
        h_o = log_new_tot - (sum_o + delta_o) / new_tot
        h_c = log_new_tot - (sum_c + delta_c) / new_tot
        dist = np.hypot(h_o - utop_o, h_c - utop_c)
        dist[~remaining] = np.inf

        dmin = dist.min()
        best = int(np.flatnonzero(dist <= dmin + TIE_TOL)[0])

        order[step] = best
        out_ho[step] = h_o[best]
        out_hc[step] = h_c[best]
        out_d[step] = dist[best]

        s, e = org_indptr[best], org_indptr[best + 1]
        org_counts[org_idx[s:e]] += org_cnt[s:e]
        sum_o += delta_o[best]
        s, e = chem_indptr[best], chem_indptr[best + 1]
        chem_counts[chem_idx[s:e]] += chem_cnt[s:e]
        sum_c += delta_c[best]
        tot += int(n_rel[best])
        remaining[best] = False

    return order, out_ho, out_hc, out_d
