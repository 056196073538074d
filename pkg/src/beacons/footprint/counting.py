"""Cardinality of unions of arithmetic-progression boxes.

A 1-D index set ``{start + stride*k : 0 <= k < count}`` is an ``AP``; a
multi-dimensional access set is a product of per-dimension APs (a box).
Intersections of APs are APs (Chinese remainder theorem), so the union of
up to ``MAX_INCLUSION_EXCLUSION`` boxes is counted in closed form by
inclusion-exclusion. Larger unions are enumerated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .. import kernels

MAX_INCLUSION_EXCLUSION = 4


@dataclass(frozen=True)
class AP:
    start: int
    stride: int
    count: int

    def __post_init__(self) -> None:
        if self.stride <= 0:
            raise ValueError("AP stride must be positive (normalize first)")

    @staticmethod
    def make(start: int, stride: int, count: int) -> "AP":
        """Build an AP from any integer stride, normalizing sign and singletons."""
        if count <= 0:
            return AP(0, 1, 0)
        if stride < 0:
            start, stride = start + stride * (count - 1), -stride
        if stride == 0 or count == 1:
            return AP(start, 1, 1)
        return AP(start, stride, count)

    @property
    def empty(self) -> bool:
        return self.count <= 0

    @property
    def last(self) -> int:
        return self.start + self.stride * (self.count - 1)

    def __contains__(self, x: int) -> bool:
        return (not self.empty and self.start <= x <= self.last
                and (x - self.start) % self.stride == 0)

    def values(self) -> range:
        if self.empty:
            return range(0)
        return range(self.start, self.last + 1, self.stride)


EMPTY = AP(0, 1, 0)


def intersect(a: AP, b: AP) -> AP:
    """Exact intersection of two APs (an AP with stride lcm, or empty)."""
    if a.empty or b.empty:
        return EMPTY
    if a.count == 1:
        return a if a.start in b else EMPTY
    if b.count == 1:
        return b if b.start in a else EMPTY
    g = math.gcd(a.stride, b.stride)
    diff = b.start - a.start
    if diff % g:
        return EMPTY
    l = a.stride // g * b.stride
    # x = a.start + a.stride*k with a.stride*k = diff (mod b.stride)
    m = b.stride // g
    k = (diff // g) * pow(a.stride // g, -1, m) % m if m > 1 else 0
    x0 = a.start + a.stride * k
    lo = max(a.start, b.start)
    hi = min(a.last, b.last)
    if lo > hi:
        return EMPTY
    first = x0 + ((lo - x0 + l - 1) // l) * l
    if first > hi:
        return EMPTY
    return AP(first, l, (hi - first) // l + 1)


Box = tuple[AP, ...]


def box_size(b: Box) -> int:
    n = 1
    for ap in b:
        n *= max(ap.count, 0)
    return n


def box_intersect(a: Box, b: Box) -> Box:
    return tuple(intersect(x, y) for x, y in zip(a, b))


def union_inclusion_exclusion(boxes: Sequence[Box]) -> int:
    total = 0
    n = len(boxes)
    for r in range(1, n + 1):
        sign = 1 if r % 2 else -1
        for combo in itertools.combinations(boxes, r):
            acc = combo[0]
            for b in combo[1:]:
                acc = box_intersect(acc, b)
                if box_size(acc) == 0:
                    break
            total += sign * box_size(acc)
    return total


def union_enumerate(boxes: Sequence[Box], points: Iterable[tuple] = ()) -> int:
    """Count by enumeration; 1-D unions use the compiled bitmap kernel."""
    boxes = [b for b in boxes if box_size(b) > 0]
    points = set(points)
    if not points and boxes and len(boxes[0]) == 1:
        return kernels.ap_union_count([b[0].start for b in boxes],
                                      [b[0].stride for b in boxes],
                                      [b[0].count for b in boxes])
    seen = set(points)
    for b in boxes:
        seen.update(itertools.product(*(ap.values() for ap in b)))
    return len(seen)


def union_count(boxes: Sequence[Box], points: Optional[set] = None) -> tuple[int, str]:
    """(cardinality, method) for a union of boxes plus optional explicit points."""
    uniq = list(dict.fromkeys(b for b in boxes if box_size(b) > 0))
    if points:
        return union_enumerate(uniq, points), "enumerate"
    if len(uniq) <= MAX_INCLUSION_EXCLUSION:
        return union_inclusion_exclusion(uniq), "closed-form"
    return union_enumerate(uniq), "enumerate"
