# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled oracle construction.

Semantics are defined by _pure.build_arrays; this kernel exists because the
threshold sweep rebuilds the oracle dozens of times per piece and the chain
walk is branchy scalar work that numpy cannot express. The adjacency lives
in a growable C edge pool with per-state tail pointers so appends preserve
insertion order, which the min-distance tie-break depends on.
"""

from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc, realloc

import numpy as np


cdef inline long long _lcs(long long* sfx, long long* lrs,
                           long long p1, long long p2) noexcept nogil:
    if p2 == sfx[p1]:
        return lrs[p1]
    while sfx[p2] != sfx[p1] and p2 != 0:
        p2 = sfx[p2]
    return lrs[p1] if lrs[p1] < lrs[p2] else lrs[p2]


def build_arrays(const double[:, ::1] frames, double theta):
    """Mirror of _pure.build_arrays; see that module for the contract."""
    cdef Py_ssize_t T = frames.shape[0]
    cdef Py_ssize_t dim = frames.shape[1]
    cdef double theta_sq = theta * theta

    sfx_arr = np.empty(T + 1, dtype=np.int64)
    lrs_arr = np.zeros(T + 1, dtype=np.int64)
    lab_arr = np.empty(T + 1, dtype=np.int64)
    cdef long long[::1] sfx_mv = sfx_arr
    cdef long long[::1] lrs_mv = lrs_arr
    cdef long long[::1] lab_mv = lab_arr
    cdef long long* sfx = &sfx_mv[0]
    cdef long long* lrs = &lrs_mv[0]
    cdef long long* labels = &lab_mv[0]

    # edge pool: head/tail per state, to/next per edge, grown by doubling
    cdef Py_ssize_t cap = 4 * (T + 2)
    cdef Py_ssize_t n_edges = 0
    cdef long long* e_to = <long long*> malloc(cap * sizeof(long long))
    cdef long long* e_next = <long long*> malloc(cap * sizeof(long long))
    cdef long long* head = <long long*> malloc((T + 1) * sizeof(long long))
    cdef long long* tail = <long long*> malloc((T + 1) * sizeof(long long))
    if e_to == NULL or e_next == NULL or head == NULL or tail == NULL:
        free(e_to); free(e_next); free(head); free(tail)
        raise MemoryError("oracle edge pool allocation failed")

    cdef long long* grown_to
    cdef long long* grown_next
    cdef Py_ssize_t t, c, i
    cdef long long k, pi_1, match, tgt, e, n_labels, src
    cdef double d2, diff, best_d
    cdef long long best_tgt
    cdef bint oom = False

    with nogil:
        for i in range(T + 1):
            head[i] = -1
            tail[i] = -1
        sfx[0] = -1
        lrs[0] = 0
        labels[0] = -1
        n_labels = 0

        for t in range(1, T + 1):
            # append edge t-1 -> t, then walk the suffix chain
            src = t - 1
            match = -1
            pi_1 = t - 1
            k = sfx[t - 1]
            while True:
                if n_edges == cap:
                    cap *= 2
                    grown_to = <long long*> realloc(e_to, cap * sizeof(long long))
                    grown_next = <long long*> realloc(e_next, cap * sizeof(long long))
                    if grown_to != NULL:
                        e_to = grown_to
                    if grown_next != NULL:
                        e_next = grown_next
                    if grown_to == NULL or grown_next == NULL:
                        oom = True
                        break
                e_to[n_edges] = t
                e_next[n_edges] = -1
                if tail[src] >= 0:
                    e_next[tail[src]] = n_edges
                else:
                    head[src] = n_edges
                tail[src] = n_edges
                n_edges += 1

                if k < 0:
                    break
                best_d = INFINITY
                best_tgt = -1
                e = head[k]
                while e >= 0:
                    tgt = e_to[e]
                    d2 = 0.0
                    for c in range(dim):
                        diff = frames[tgt - 1, c] - frames[t - 1, c]
                        d2 += diff * diff
                    if d2 <= theta_sq and d2 < best_d:
                        best_d = d2
                        best_tgt = tgt
                    e = e_next[e]
                if best_tgt >= 0:
                    match = best_tgt
                    break
                pi_1 = k
                src = k
                k = sfx[k]
            if oom:
                break

            if match < 0:
                sfx[t] = 0
                lrs[t] = 0
                labels[t] = n_labels
                n_labels += 1
            else:
                sfx[t] = match
                labels[t] = labels[match]
                lrs[t] = _lcs(sfx, lrs, pi_1, match - 1) + 1

    if oom:
        free(e_to); free(e_next); free(head); free(tail)
        raise MemoryError("oracle edge pool reallocation failed")

    trn = [[] for _ in range(T + 1)]
    for i in range(T + 1):
        e = head[i]
        lst = trn[i]
        while e >= 0:
            lst.append(int(e_to[e]))
            e = e_next[e]
    free(e_to); free(e_next); free(head); free(tail)
    return sfx_arr, lrs_arr, lab_arr, trn
