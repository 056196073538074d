"""Per-nest footprint expressions: same-array unions summed over arrays."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..ir.nodes import LoopNest, Num, Program
from ..ir.printer import format_expr
from .counting import MAX_INCLUSION_EXCLUSION, union_count
from .relations import (
    AccessRelation,
    IrregularAccess,
    build_relations,
    relation_box,
    total_iterations,
)

DEFAULT_IRREGULAR_ESTIMATE = 1.0


@dataclass
class FootprintValue:
    elements: dict[str, int]
    irregular_elements: float
    bytes: float
    methods: dict[str, str] = field(default_factory=dict)

    @property
    def total_elements(self) -> float:
        return sum(self.elements.values()) + self.irregular_elements


@dataclass
class NestFootprint:
    """Counting expression for one nest.

    ``evaluate`` binds loop-invariant parameters (and, for loops whose
    bounds are not evaluable, per-label extents) and returns exact element
    counts for affine references.
    """

    nest_id: str
    relations: list[AccessRelation]
    irregular: list[IrregularAccess]
    elsize: dict[str, int]
    irregular_estimate: float = DEFAULT_IRREGULAR_ESTIMATE

    def groups(self) -> dict[tuple[str, int], list[AccessRelation]]:
        out: dict[tuple[str, int], list[AccessRelation]] = {}
        for r in self.relations:
            out.setdefault((r.array, r.ndims), []).append(r)
        return out

    @property
    def params(self) -> list[str]:
        return sorted({p for r in self.relations for p in r.params})

    def evaluate(self, env: Mapping[str, int],
                 extents: Optional[Mapping[str, int]] = None) -> FootprintValue:
        elements: dict[str, int] = {}
        methods: dict[str, str] = {}
        nbytes = 0.0
        for (array, nd), rels in sorted(self.groups().items()):
            boxes = []
            points: set = set()
            for r in rels:
                b = relation_box(r, env, extents)
                if b is None:
                    continue
                if isinstance(b, set):
                    points |= b
                else:
                    boxes.append(b)
            n, how = union_count(boxes, points)
            key = array if nd == 1 else f"{array}/{nd}d"
            elements[key] = elements.get(key, 0) + n
            methods[key] = how
            nbytes += n * self.elsize.get(array, 8)
        irr = 0.0
        for a in self.irregular:
            k = self.irregular_estimate * total_iterations(a.domain, env, extents)
            irr += k
            nbytes += k * self.elsize.get(a.array, 8)
        return FootprintValue(elements, irr, nbytes, methods)

    def bytes_at(self, env: Mapping[str, int], extents: Optional[Mapping[str, int]] = None) -> float:
        return self.evaluate(env, extents).bytes

    def expressions(self) -> dict[str, str]:
        """Human-readable counting expression per array."""
        out = {}
        for (array, nd), rels in sorted(self.groups().items()):
            uniq = list(dict.fromkeys(rels))
            key = array if nd == 1 else f"{array}/{nd}d"
            if len(uniq) == 1:
                out[key] = _single_count(uniq[0])
            elif len(uniq) <= MAX_INCLUSION_EXCLUSION:
                out[key] = "|" + " ∪ ".join(r.label() for r in uniq) + "| (inclusion-exclusion)"
            else:
                out[key] = "|" + " ∪ ".join(r.label() for r in uniq) + "| (enumerated)"
        for a in self.irregular:
            out[a.label()] = f"{self.irregular_estimate:g} x iterations (irregular)"
        return out

    def to_json(self) -> dict:
        return {"nest": self.nest_id, "expressions": self.expressions(),
                "relations": [str(r) for r in self.relations],
                "irregular": [a.label() for a in self.irregular]}


def _single_count(r: AccessRelation) -> str:
    if r.dims is None:
        return f"|{r.label()}| (enumerated)"
    by_var = {d.var: d for d in r.domain if d.var is not None}
    factors = []
    for dim in r.dims:
        if len(dim.terms) == 0:
            continue
        if len(dim.terms) == 1:
            v = dim.terms[0][0]
            d = by_var[v]
            if d.normalized and not d.depends:
                factors.append(format_expr(d.upper))
                continue
        factors.append(f"|{dim.describe()}|")
    if not factors:
        return "1"
    cond = " and ".join(f"{format_expr(by_var[v].upper)} > 0" for v in by_var
                        if by_var[v].normalized and by_var[v].upper != Num(0)
                        and not isinstance(by_var[v].upper, Num))
    body = " * ".join(f"({f})" if len(factors) > 1 else f for f in factors)
    return f"({body}) : {cond}" if cond else body


def nest_footprint(nest: LoopNest, program: Optional[Program] = None,
                   irregular_estimate: float = DEFAULT_IRREGULAR_ESTIMATE) -> NestFootprint:
    rels, irr = build_relations(nest, program)
    elsize = {a.name: a.elsize for a in program.arrays} if program is not None else {}
    return NestFootprint(nest.id, rels, irr, elsize, irregular_estimate)


def count_footprint(rels: list[AccessRelation], elsize: int = 8,
                    nest_id: str = "") -> NestFootprint:
    """Counting expression for a bare list of relations with one element size."""
    return NestFootprint(nest_id, list(rels), [], _DefaultSize(elsize))


class _DefaultSize(dict):
    def __init__(self, size: int):
        super().__init__()
        self.size = size

    def get(self, key, default=None):  # type: ignore[override]
        return self.size


def footprint_report(fps: list[NestFootprint], reuse: Mapping[str, object]) -> str:
    lines = []
    for fp in fps:
        d = fp.to_json()
        r = reuse.get(fp.nest_id)
        if r is not None:
            d["reuse"] = r.klass.value  # type: ignore[attr-defined]
            d["srd"] = [e.to_json() for e in r.evidence]  # type: ignore[attr-defined]
        lines.append(json.dumps(d, sort_keys=True, ensure_ascii=False))
    return "".join(x + "\n" for x in lines)
