"""Static reuse distance (SRD) classification of loop nests."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional

from ..ir.nodes import Loop, LoopNest, Num, Program, iter_stmts
from ..ir.normalize import simplify
from ..ir.nodes import BinOp
from .relations import AccessRelation, build_relations

DEFAULT_SRD_THRESHOLD = 8
SEARCH_LIMIT = 4096
_BRUTE_RANGE = 16


class ReuseClass(str, enum.Enum):
    REUSE = "reuse"
    STREAMING = "streaming"


@dataclass(frozen=True)
class SRDEvidence:
    source: str
    sink: str
    kind: str  # constant | extent | none | irregular
    distance: str

    def to_json(self) -> dict:
        return {"source": self.source, "sink": self.sink, "kind": self.kind,
                "distance": self.distance}


@dataclass
class ReuseResult:
    klass: ReuseClass
    evidence: list[SRDEvidence]


def _const_diff(a: AccessRelation, b: AccessRelation) -> Optional[list[int]]:
    out = []
    for da, db in zip(a.dims, b.dims):  # type: ignore[arg-type]
        d = simplify(BinOp("-", da.const, db.const))
        if not isinstance(d, Num):
            return None
        out.append(d.value)
    return out


def _uniform(a: AccessRelation, b: AccessRelation) -> bool:
    return (a.dims is not None and b.dims is not None and a.chain == b.chain
            and a.ndims == b.ndims
            and all(x.terms == y.terms for x, y in zip(a.dims, b.dims)))


def _solvable(coefs: list[dict[str, int]], rhs: list[int], free: list[str]) -> bool:
    """Does sum_v coefs[d][v]*x_v == rhs[d] (all d) have an integer solution in ``free``?"""
    owners: dict[str, int] = {}
    shared = False
    for d, c in enumerate(coefs):
        for v, a in c.items():
            if v in free and a:
                if v in owners and owners[v] != d:
                    shared = True
                owners[v] = d
    if not shared:
        for c, r in zip(coefs, rhs):
            g = 0
            for v, a in c.items():
                if v in free:
                    g = math.gcd(g, abs(a))
            if g == 0:
                if r != 0:
                    return False
            elif r % g:
                return False
        return True
    live = [v for v in free if v in owners]
    for xs in itertools.product(range(-_BRUTE_RANGE, _BRUTE_RANGE + 1), repeat=len(live)):
        val = dict(zip(live, xs))
        if all(sum(a * val.get(v, 0) for v, a in c.items() if v in free) == r
               for c, r in zip(coefs, rhs)):
            return True
    return False


def reuse_distance(a: AccessRelation, b: AccessRelation) -> Optional[tuple[int, int]]:
    """Lexicographically smallest reuse of ``a``'s data by ``b``.

    Returns ``(level, distance)`` where level -1 means the same iteration
    (``b`` textually after ``a``), or None when ``b`` never touches what
    ``a`` touched within the analysis horizon. Requires a uniform pair.
    """
    diff = _const_diff(a, b)
    if diff is None:
        return None
    coefs = [d.coefs for d in a.dims]  # type: ignore[union-attr]
    ivars = list(a.ivars)
    if a.order != b.order and all(x == 0 for x in diff) and (a.path, a.order) < (b.path, b.order):
        return (-1, 0)
    # innermost carrying level first: lexicographically smaller distance vectors
    for k in range(len(ivars) - 1, -1, -1):
        v = ivars[k]
        inner = ivars[k + 1:]
        for t in range(1, SEARCH_LIMIT + 1):
            rhs = [r - c.get(v, 0) * t for c, r in zip(coefs, diff)]
            if _solvable(coefs, rhs, inner):
                return (k, t)
            if all(c.get(v, 0) == 0 for c in coefs) and t > 1:
                break
    return None


def _inner_loop_between(nest: LoopNest, a: AccessRelation, b: AccessRelation) -> bool:
    loop = _find_loop(nest, a.chain[-1])
    lo, hi = sorted((a.path[-1], b.path[-1]))
    return any(isinstance(s, Loop) for s in loop.body[lo + 1:hi])


def _find_loop(nest: LoopNest, label: str) -> Loop:
    for l in nest.loops:
        if l.label == label:
            return l
    raise KeyError(label)


def _may_intersect(a: AccessRelation, b: AccessRelation) -> bool:
    if a.dims is None or b.dims is None or a.ndims != b.ndims:
        return a.ndims == b.ndims
    diff = _const_diff(a, b)
    if diff is None:
        return True
    for da, db, r in zip(a.dims, b.dims, diff):
        g = 0
        for _, c in da.terms + db.terms:
            g = math.gcd(g, abs(c))
        if g == 0 and r != 0:
            return False
        if g and r % g:
            return False
    return True


def classify_reuse(nest: LoopNest, program: Optional[Program] = None,
                   threshold: int = DEFAULT_SRD_THRESHOLD) -> ReuseResult:
    """Reuse iff some pair of references has an extent-dependent SRD.

    A uniform pair whose reuse is carried by a loop with an inner loop in
    its body, or spans more than ``threshold`` iterations, or is separated
    within an iteration by an inner loop, depends on a loop extent.
    Non-uniform pairs that may touch the same element are extent-dependent.
    Irregular references are non-reuse.
    """
    rels, irr = build_relations(nest, program)
    evidence: list[SRDEvidence] = []
    reuse = False
    for x in irr:
        evidence.append(SRDEvidence(x.label(), x.label(), "irregular", "n/a"))
    for i, a in enumerate(rels):
        for b in rels[i:]:
            if a.array != b.array:
                continue
            pairs = [(a, b)] if a is b else [(a, b), (b, a)]
            for s, t in pairs:
                ev = _pair_evidence(nest, s, t, threshold)
                if ev is not None:
                    evidence.append(ev)
                    reuse |= ev.kind == "extent"
    return ReuseResult(ReuseClass.REUSE if reuse else ReuseClass.STREAMING, evidence)


def _pair_evidence(nest: LoopNest, a: AccessRelation, b: AccessRelation,
                   threshold: int) -> Optional[SRDEvidence]:
    src, dst = a.label(), b.label()
    if _uniform(a, b):
        found = reuse_distance(a, b)
        if found is None:
            return None
        level, dist = found
        if level == -1:
            if _inner_loop_between(nest, a, b):
                return SRDEvidence(src, dst, "extent", "same iteration, across an inner loop")
            return SRDEvidence(src, dst, "constant", "0")
        carrier = _find_loop(nest, a.chain[level])
        label = carrier.label
        if any(isinstance(s, Loop) for s in iter_stmts(carrier.body)):
            return SRDEvidence(src, dst, "extent", f"{dist} x iterations of {label} "
                               "(spans inner loop)")
        if dist > threshold:
            return SRDEvidence(src, dst, "extent", f"{dist} iterations of {label}")
        return SRDEvidence(src, dst, "constant", f"{dist} iterations of {label}")
    if a.order >= b.order and a is not b:
        # non-uniform pairs are symmetric; report once
        return None
    if a is b:
        return None
    if _may_intersect(a, b):
        return SRDEvidence(src, dst, "extent", "non-uniform overlap")
    return None
