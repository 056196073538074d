"""Loop categorization (NB/IB x NE/ME) and upwards-exposed control backslicing."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

from .ir.nodes import (
    Assign,
    CallRef,
    Expr,
    Function,
    LoadRef,
    Loop,
    LoopNest,
    MemAccess,
    Program,
    Stmt,
    expr_vars,
    is_numeric_closed,
    iter_stmts,
    stmt_defs,
    walk_expr,
)

OPAQUE = "<opaque>"


class LoopClass(str, enum.Enum):
    NBNE = "NBNE"
    NBME = "NBME"
    IBNE = "IBNE"
    IBME = "IBME"

    @property
    def irregular_bounds(self) -> bool:
        return self.value.startswith("IB")

    @property
    def multi_exit(self) -> bool:
        return self.value.endswith("ME")

    @classmethod
    def of(cls, ib: bool, me: bool) -> "LoopClass":
        return cls(("IB" if ib else "NB") + ("ME" if me else "NE"))


@dataclass(frozen=True)
class CriticalSet:
    critical_bounds: tuple[str, ...] = ()
    critical_predicates: tuple[str, ...] = ()

    def all(self) -> list[str]:
        return list(dict.fromkeys(self.critical_bounds + self.critical_predicates))


@dataclass(frozen=True)
class ModelParameters:
    """Out-of-loop variables (source order) and the expressions defining them.

    ``OPAQUE`` appears last when some slice reached an opaque value.
    """

    params: tuple[str, ...] = ()
    definitions: dict = field(default_factory=dict, compare=False)

    @property
    def opaque(self) -> bool:
        return OPAQUE in self.params

    @property
    def names(self) -> list[str]:
        return [p for p in self.params if p != OPAQUE]


def _nest_defs(nest: LoopNest) -> dict[str, list[Stmt]]:
    out: dict[str, list[Stmt]] = {}
    for s in iter_stmts(nest.root.body):
        if isinstance(s, Loop):
            continue
        for v in stmt_defs(s):
            out.setdefault(v, []).append(s)
    return out


def _induction(nest: LoopNest) -> dict[str, Loop]:
    return {l.var: l for l in nest.loops if l.var is not None}


def categorize(nest: LoopNest, f: Optional[Function] = None) -> tuple[LoopClass, CriticalSet]:
    """Classify ``nest`` as the join of its member loops' classes.

    A loop has irregular bounds when a bound expression is not numeric
    closed, reads a variable assigned inside the nest, is a ``while``
    condition, or could not be normalized. Exits are ``break-if``
    statements leaving some member loop.
    """
    in_nest = set(_nest_defs(nest))
    bounds: dict[str, None] = {}
    preds: dict[str, None] = {}
    ib = False
    me = False
    for loop in nest.loops:
        if loop.kind == "while" or loop.flagged:
            ib = True
            for e in loop.bound_exprs():
                for v in expr_vars(e):
                    bounds.setdefault(v)
        else:
            for e in loop.bound_exprs():
                vs = expr_vars(e)
                mutated = [v for v in vs if v in in_nest]
                if not is_numeric_closed(e) or mutated:
                    ib = True
                    for v in vs:
                        bounds.setdefault(v)
        if loop.exits:
            me = True
            for ex in loop.exits:
                for v in expr_vars(ex.cond):
                    preds.setdefault(v)
    return LoopClass.of(ib, me), CriticalSet(tuple(bounds), tuple(preds))


def _opaque_expr(e: Expr, program: Optional[Program]) -> bool:
    for n in walk_expr(e):
        if isinstance(n, LoadRef):
            return True
        if isinstance(n, CallRef):
            ext = program.extern(n.func) if program is not None else None
            if ext is None or not ext.pure:
                return True
    return False


def defined_before(f: Function, nest: LoopNest) -> set[str]:
    """Scalars that have a definition textually before ``nest`` (params included)."""
    out = set(f.params)
    for s in iter_stmts(f.body):
        if s is nest.root:
            break
        if isinstance(s, Loop):
            continue
        out.update(stmt_defs(s))
    return out


def _source_order(f: Function) -> dict[str, int]:
    order: dict[str, int] = {}
    for p in f.params:
        order.setdefault(p, len(order))
    for s in iter_stmts(f.body):
        for v in stmt_defs(s):
            order.setdefault(v, len(order))
    return order


def backslice(critical: CriticalSet, f: Function, nest: LoopNest,
              program: Optional[Program] = None) -> ModelParameters:
    """Worklist slice from critical variables back to out-of-loop values.

    A variable with a definition outside the nest (or a parameter) is
    emitted; definitions inside the nest are expanded transitively.
    Induction variables expand to their loop's bound variables. Loads and
    non-pure calls yield the ``OPAQUE`` sentinel.
    """
    defs = _nest_defs(nest)
    inductions = _induction(nest)
    outside = defined_before(f, nest)
    emitted: dict[str, None] = {}
    definitions: dict[str, list[Expr]] = {}
    opaque = False
    visited: set[str] = set()
    work = list(critical.all())
    while work:
        v = work.pop(0)
        if v in visited:
            continue
        visited.add(v)
        if v in inductions:
            for e in inductions[v].bound_exprs():
                if _opaque_expr(e, program):
                    opaque = True
                work.extend(expr_vars(e))
            continue
        if v in outside:
            emitted.setdefault(v)
        for s in defs.get(v, []):
            if isinstance(s, Assign):
                definitions.setdefault(v, []).append(s.expr)
                if _opaque_expr(s.expr, program):
                    opaque = True
                work.extend(expr_vars(s.expr))
            elif isinstance(s, MemAccess):
                opaque = True
                work.extend(x for e in s.index for x in expr_vars(e))
    order = _source_order(f)
    params = sorted(emitted, key=lambda v: order.get(v, len(order)))
    for v in params:
        if v not in f.params:
            definitions.setdefault(v, []).extend(
                s.expr for s in iter_stmts(f.body)
                if isinstance(s, Assign) and s.var == v and s not in defs.get(v, []))
    if opaque:
        params.append(OPAQUE)
    return ModelParameters(tuple(params), definitions)


@dataclass
class NestAnalysis:
    nest: LoopNest
    klass: LoopClass
    critical: CriticalSet
    params: ModelParameters
    flagged: bool = False

    @property
    def nest_id(self) -> str:
        return self.nest.id

    def to_json(self) -> dict:
        return {
            "nest": self.nest.id,
            "class": self.klass.value,
            "depth": self.nest.depth,
            "critical_bounds": list(self.critical.critical_bounds),
            "critical_predicates": list(self.critical.critical_predicates),
            "model_parameters": list(self.params.params),
            "flagged": self.flagged,
            "exits": len(self.nest.exits),
        }


def analyze_program(p: Program) -> list[NestAnalysis]:
    """Categorize and backslice every outermost nest of a normalized program."""
    out = []
    for f in p.functions:
        for nest in f.nests():
            klass, crit = categorize(nest, f)
            params = backslice(crit, f, nest, p)
            flagged = any(l.flagged for l in nest.loops)
            out.append(NestAnalysis(nest, klass, crit, params, flagged))
    return out


def analysis_report(results: list[NestAnalysis]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in results)

