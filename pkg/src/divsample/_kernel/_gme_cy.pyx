# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy maximum-entropy ranking kernel.

Mirrors _gme_py.gme_rank exactly, including the 1e-12 tie tolerance and
lowest-index tie-break.
"""

from libc.math cimport log, sqrt, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF TIE_TOL = 1e-12


cdef inline double xlogx(double c) nogil:
    return c * log(c) if c > 0 else 0.0


def gme_rank(
    cnp.int64_t[::1] org_indptr,
    cnp.int64_t[::1] org_idx,
    cnp.int64_t[::1] org_cnt,
    cnp.int64_t[::1] chem_indptr,
    cnp.int64_t[::1] chem_idx,
    cnp.int64_t[::1] chem_cnt,
    cnp.int64_t[::1] n_rel,
    Py_ssize_t n_org,
    Py_ssize_t n_chem,
    Py_ssize_t l,
):
    cdef Py_ssize_t n_docs = n_rel.shape[0]
    cdef double utop_o = log(<double> n_org)
    cdef double utop_c = log(<double> n_chem)

    cdef cnp.int64_t[::1] org_counts = np.zeros(n_org, dtype=np.int64)
    cdef cnp.int64_t[::1] chem_counts = np.zeros(n_chem, dtype=np.int64)
    cdef double tot = 0.0
    cdef double sum_o = 0.0
    cdef double sum_c = 0.0

    cdef cnp.uint8_t[::1] remaining = np.ones(n_docs, dtype=np.uint8)
    order_arr = np.empty(l, dtype=np.int64)
    ho_arr = np.empty(l, dtype=np.float64)
    hc_arr = np.empty(l, dtype=np.float64)
    d_arr = np.empty(l, dtype=np.float64)
    cdef cnp.int64_t[::1] order = order_arr
    cdef double[::1] out_ho = ho_arr
    cdef double[::1] out_hc = hc_arr
    cdef double[::1] out_d = d_arr

    cdef double[::1] dist = np.empty(n_docs, dtype=np.float64)
    cdef double[::1] cand_ho = np.empty(n_docs, dtype=np.float64)
    cdef double[::1] cand_hc = np.empty(n_docs, dtype=np.float64)
    cdef double[::1] cand_do = np.empty(n_docs, dtype=np.float64)
    cdef double[::1] cand_dc = np.empty(n_docs, dtype=np.float64)

    cdef Py_ssize_t step, i, j, s, e, best
    cdef double delta_o, delta_c, new_tot, log_new_tot, h_o, h_c, dx, dy, dmin
    cdef double c

    for step in range(l):
        dmin = INFINITY
        for i in range(n_docs):
            if not remaining[i]:
                dist[i] = INFINITY
                continue
            delta_o = 0.0
            s = org_indptr[i]
            e = org_indptr[i + 1]
            for j in range(s, e):
                c = <double> org_counts[org_idx[j]]
                delta_o += xlogx(c + <double> org_cnt[j]) - xlogx(c)
            delta_c = 0.0
            s = chem_indptr[i]
            e = chem_indptr[i + 1]
            for j in range(s, e):
                c = <double> chem_counts[chem_idx[j]]
                delta_c += xlogx(c + <double> chem_cnt[j]) - xlogx(c)
            new_tot = tot + <double> n_rel[i]
            log_new_tot = log(new_tot)
            h_o = log_new_tot - (sum_o + delta_o) / new_tot
            h_c = log_new_tot - (sum_c + delta_c) / new_tot
            dx = h_o - utop_o
            dy = h_c - utop_c
            dist[i] = sqrt(dx * dx + dy * dy)
            cand_ho[i] = h_o
            cand_hc[i] = h_c
            cand_do[i] = delta_o
            cand_dc[i] = delta_c
            if dist[i] < dmin:
                dmin = dist[i]

        best = -1
        for i in range(n_docs):
            if dist[i] <= dmin + TIE_TOL:
                best = i
                break

        order[step] = best
        out_ho[step] = cand_ho[best]
        out_hc[step] = cand_hc[best]
        out_d[step] = dist[best]

        s = org_indptr[best]
        e = org_indptr[best + 1]
        for j in range(s, e):
            org_counts[org_idx[j]] += org_cnt[j]
        s = chem_indptr[best]
        e = chem_indptr[best + 1]
        for j in range(s, e):
            chem_counts[chem_idx[j]] += chem_cnt[j]
        sum_o += cand_do[best]
        sum_c += cand_dc[best]
        tot += <double> n_rel[best]
        remaining[best] = 0

    return order_arr, ho_arr, hc_arr, d_arr
