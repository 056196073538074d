# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics match ``_kernels_py`` exactly."""

from libc.math cimport INFINITY
from libc.stdlib cimport calloc, free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()


def gini_best_split(X, y, int n_classes):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Xa = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ya = np.ascontiguousarray(y, dtype=np.int64)
    cdef Py_ssize_t n = ya.shape[0]
    if n < 2:
        return -1, 0.0, INFINITY
    cdef Py_ssize_t n_feat = Xa.shape[1]
    cdef Py_ssize_t f, k, c
    cdef long *total = <long *> calloc(n_classes, sizeof(long))
    cdef long *left = <long *> calloc(n_classes, sizeof(long))
    cdef long *right = <long *> calloc(n_classes, sizeof(long))
    cdef long sum_l2, sum_r2, nl, nr
    cdef double a, b, score, thr
    cdef int best_f = -1
    cdef double best_thr = 0.0
    cdef double best_score = INFINITY
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order
    try:
        for k in range(n):
            total[ya[k]] += 1
        for f in range(n_feat):
            order = np.argsort(Xa[:, f], kind="stable").astype(np.int64)
            sum_l2 = 0
            sum_r2 = 0
            for c in range(n_classes):
                left[c] = 0
                right[c] = total[c]
                sum_r2 += total[c] * total[c]
            for k in range(n - 1):
                c = ya[order[k]]
                sum_l2 += 2 * left[c] + 1
                left[c] += 1
                sum_r2 -= 2 * right[c] - 1
                right[c] -= 1
                a = Xa[order[k], f]
                b = Xa[order[k + 1], f]
                if a == b:
                    continue
                nl = k + 1
                nr = n - nl
                score = (nl - <double> sum_l2 / nl + nr - <double> sum_r2 / nr) / n
                thr = (a + b) / 2.0
                if score < best_score - 1e-12:
                    best_f = f
                    best_thr = thr
                    best_score = score
    finally:
        free(total)
        free(left)
        free(right)
    return best_f, best_thr, best_score


def ap_union_count(starts, strides, counts):
    cdef Py_ssize_t m = len(starts)
    cdef Py_ssize_t i
    cdef long long s, d, cnt, last, lo = 0, hi = 0, k, idx, total = 0
    cdef bint have = False
    for i in range(m):
        cnt = counts[i]
        if cnt <= 0:
            continue
        s = starts[i]
        d = strides[i]
        last = s + d * (cnt - 1)
        if last < s:
            s, last = last, s
        if not have:
            lo, hi, have = s, last, True
        else:
            if s < lo:
                lo = s
            if last > hi:
                hi = last
    if not have:
        return 0
    cdef unsigned char *seen = <unsigned char *> calloc(hi - lo + 1, 1)
    if seen == NULL:
        raise MemoryError()
    try:
        for i in range(m):
            cnt = counts[i]
            if cnt <= 0:
                continue
            s = starts[i]
            d = strides[i]
            for k in range(cnt):
                idx = s + d * k - lo
                if not seen[idx]:
                    seen[idx] = 1
                    total += 1
    finally:
        free(seen)
    return total


def contention_rates(kinds, footprints, mu_bw, double llc, double bandwidth,
                     double interference):
    cdef Py_ssize_t n = len(kinds)
    cdef Py_ssize_t i
    cdef double F = 0.0, B = 0.0, reuse, stream
    cdef bint any_stream = False
    cdef int k
    cdef int *kk = <int *> malloc((n + 1) * sizeof(int))
    try:
        for i in range(n):
            k = kinds[i]
            kk[i] = k
            if k == 1:
                F += footprints[i]
            elif k == 2:
                B += mu_bw[i]
                any_stream = True
        reuse = 1.0 if F <= llc else llc / F
        if any_stream and F > 0:
            reuse *= interference
        stream = 1.0 if B <= bandwidth else bandwidth / B
        out = [0.0] * n
        for i in range(n):
            k = kk[i]
            if k == 0:
                out[i] = 1.0
            elif k == 1:
                out[i] = reuse
            elif k == 2:
                out[i] = stream
    finally:
        free(kk)
    return out
