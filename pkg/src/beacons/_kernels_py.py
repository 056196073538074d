"""Pure-Python reference kernels. ``_kernels.pyx`` mirrors these exactly."""

from __future__ import annotations

import math


def gini_best_split(X, y, n_classes: int):
    """Best axis-aligned split of rows ``X`` (list of float rows) with labels ``y``.

    Returns ``(feature, threshold, weighted_gini)`` or ``(-1, 0.0, inf)``
    when no split separates any two rows. Ties go to the lowest feature
    index, then the lowest threshold.
    """
    n = len(y)
    if n < 2:
        return -1, 0.0, math.inf
    n_feat = len(X[0]) if n else 0
    total = [0] * n_classes
    for c in y:
        total[c] += 1
    best_f, best_thr, best_score = -1, 0.0, math.inf
    for f in range(n_feat):
        order = sorted(range(n), key=lambda r: X[r][f])
        left = [0] * n_classes
        right = list(total)
        sum_l2 = 0
        sum_r2 = sum(c * c for c in right)
        for k in range(n - 1):
            c = y[order[k]]
            sum_l2 += 2 * left[c] + 1
            left[c] += 1
            sum_r2 -= 2 * right[c] - 1
            right[c] -= 1
            a = X[order[k]][f]
            b = X[order[k + 1]][f]
            if a == b:
                continue
            nl = k + 1
            nr = n - nl
            # weighted gini = (nl - sum_l2/nl + nr - sum_r2/nr) / n
            score = (nl - sum_l2 / nl + nr - sum_r2 / nr) / n
            thr = (a + b) / 2.0
            if score < best_score - 1e-12:
                best_f, best_thr, best_score = f, thr, score
    return best_f, best_thr, best_score


def ap_union_count(starts, strides, counts) -> int:
    """Distinct integers in the union of progressions ``start + stride*k``, ``0<=k<count``."""
    lo = None
    hi = None
    for s, d, c in zip(starts, strides, counts):
        if c <= 0:
            continue
        last = s + d * (c - 1)
        a, b = min(s, last), max(s, last)
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    if lo is None:
        return 0
    seen = bytearray(hi - lo + 1)
    for s, d, c in zip(starts, strides, counts):
        if c <= 0:
            continue
        if d == 0:
            seen[s - lo] = 1
            continue
        first = s - lo
        stop = first + d * c
        if d > 0:
            seen[first:stop:d] = b"\x01" * c
        else:
            for k in range(c):
                seen[first + d * k] = 1
    return seen.count(1)


def contention_rates(kinds, footprints, mu_bw, llc: float, bandwidth: float,
                     interference: float):
    """Progress rate per running phase.

    ``kinds``: 0 non-cache-pressure, 1 reuse, 2 streaming, 3 stalled.
    """
    F = 0.0
    B = 0.0
    any_stream = False
    for k, f, m in zip(kinds, footprints, mu_bw):
        if k == 1:
            F += f
        elif k == 2:
            B += m
            any_stream = True
    reuse = 1.0 if F <= llc else llc / F
    if any_stream and F > 0:
        reuse *= interference
    stream = 1.0 if B <= bandwidth else bandwidth / B
    out = []
    for k in kinds:
        if k == 0:
            out.append(1.0)
        elif k == 1:
            out.append(reuse)
        elif k == 2:
            out.append(stream)
        else:
            out.append(0.0)
    return out
