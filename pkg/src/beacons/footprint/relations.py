"""Affine access relations of a loop nest and their evaluation.

Each memory reference inside a (normalized) nest becomes an
``AccessRelation``: per index dimension a loop-invariant constant plus
integer multiples of induction variables, over the iteration domain of the
enclosing loops ``0 <= v < U_v``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..ir.nodes import (
    Assign,
    BinOp,
    Call,
    CallRef,
    ExitBranch,
    Expr,
    LoadRef,
    Loop,
    LoopNest,
    MemAccess,
    Num,
    Program,
    Return,
    Stmt,
    UnOp,
    Var,
    expr_vars,
    iter_stmts,
    stmt_defs,
    walk_expr,
)
from ..ir.normalize import simplify
from ..ir.printer import format_expr
from ..predictors.symbolic import UnboundParameter, eval_expr, loop_trips
from .counting import AP, Box

LinearForm = tuple[Expr, dict[str, int]]


class FootprintUnknown(ValueError):
    """Raised when an extent or parameter needed for evaluation is unbound."""


def linear_form(e: Expr, ivars: set[str]) -> Optional[LinearForm]:
    """Split ``e`` into (invariant part, {induction var: literal coefficient}).

    Returns None when ``e`` is not affine in ``ivars`` with literal
    coefficients, or when its invariant part reads memory or calls.
    """
    if isinstance(e, Num):
        return e, {}
    if isinstance(e, Var):
        return (Num(0), {e.name: 1}) if e.name in ivars else (e, {})
    if isinstance(e, (CallRef, LoadRef)):
        return None
    if isinstance(e, UnOp):
        if e.op != "-":
            return None if set(expr_vars(e)) & ivars else (e, {})
        inner = linear_form(e.operand, ivars)
        if inner is None:
            return None
        c, t = inner
        return simplify(UnOp("-", c)), {v: -a for v, a in t.items()}
    if isinstance(e, BinOp):
        if e.op in ("+", "-"):
            l, r = linear_form(e.left, ivars), linear_form(e.right, ivars)
            if l is None or r is None:
                return None
            sign = 1 if e.op == "+" else -1
            terms = dict(l[1])
            for v, a in r[1].items():
                terms[v] = terms.get(v, 0) + sign * a
            return simplify(BinOp(e.op, l[0], r[0])), {v: a for v, a in terms.items() if a}
        if e.op == "*":
            l, r = linear_form(e.left, ivars), linear_form(e.right, ivars)
            if l is None or r is None:
                return None
            if l[1] and r[1]:
                return None
            if not l[1] and not r[1]:
                return simplify(e), {}
            lin, other = (l, r[0]) if l[1] else (r, l[0])
            k = simplify(other)
            if not isinstance(k, Num):
                return None
            return (simplify(BinOp("*", lin[0], k)),
                    {v: a * k.value for v, a in lin[1].items() if a * k.value})
        if set(expr_vars(e)) & ivars:
            return None
        return e, {}
    return None


@dataclass(frozen=True)
class LoopDomain:
    label: str
    var: Optional[str]
    kind: str
    lower: Optional[Expr]
    upper: Optional[Expr]
    step: Optional[Expr]
    normalized: bool
    depends: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.var is None:
            return f"{self.label}: while"
        if self.normalized:
            return f"0 <= {self.var} < {format_expr(self.upper)}"
        return (f"{self.var} in {format_expr(self.lower)}..{format_expr(self.upper)}"
                f" step {format_expr(self.step)}")


@dataclass(frozen=True)
class Dim:
    const: Expr
    terms: tuple[tuple[str, int], ...]

    @property
    def coefs(self) -> dict[str, int]:
        return dict(self.terms)

    def describe(self) -> str:
        parts = []
        for v, a in self.terms:
            parts.append(v if a == 1 else f"-{v}" if a == -1 else f"{a}*{v}")
        if self.const != Num(0) or not parts:
            parts.append(format_expr(self.const))
        return " + ".join(parts).replace("+ -", "- ")


@dataclass(frozen=True)
class AccessRelation:
    array: str
    index: tuple[Expr, ...]
    dims: Optional[tuple[Dim, ...]]
    domain: tuple[LoopDomain, ...]
    mode: str
    order: int
    path: tuple[int, ...]
    line: int = 0
    params: tuple[str, ...] = ()

    @property
    def ndims(self) -> int:
        return len(self.index)

    @property
    def ivars(self) -> tuple[str, ...]:
        return tuple(d.var for d in self.domain if d.var is not None)

    @property
    def chain(self) -> tuple[str, ...]:
        return tuple(d.label for d in self.domain)

    @property
    def affine(self) -> bool:
        return self.dims is not None

    def label(self) -> str:
        idx = "".join(f"[{format_expr(i)}]" for i in self.index)
        return f"{self.array}{idx}"

    def __str__(self) -> str:
        params = f"[{', '.join(self.params)}] -> " if self.params else ""
        iv = ", ".join(self.ivars)
        if self.dims is not None:
            img = ", ".join(d.describe() for d in self.dims)
        else:
            img = ", ".join(format_expr(i) for i in self.index)
        cons = " and ".join(d.describe() for d in self.domain)
        return f"{params}{{ [{iv}] -> {self.array}[{img}] : {cons} }}"


@dataclass(frozen=True)
class IrregularAccess:
    array: str
    index: tuple[Expr, ...]
    domain: tuple[LoopDomain, ...]
    order: int
    line: int = 0

    def label(self) -> str:
        return self.array + "".join(f"[{format_expr(i)}]" for i in self.index)


def _stmt_loads(s: Stmt) -> list[LoadRef]:
    exprs: list[Expr] = []
    if isinstance(s, Assign):
        exprs = [s.expr]
    elif isinstance(s, MemAccess):
        exprs = list(s.index) + ([s.value] if s.value is not None else [])
    elif isinstance(s, (Call,)):
        exprs = list(s.args)
    elif isinstance(s, ExitBranch):
        exprs = [s.cond]
    elif isinstance(s, Return) and s.value is not None:
        exprs = [s.value]
    elif isinstance(s, Loop):
        exprs = s.bound_exprs()
    out = []
    for e in exprs:
        out.extend(n for n in walk_expr(e) if isinstance(n, LoadRef))
    return out


def _domain(loop: Loop, outer_vars: set[str]) -> LoopDomain:
    if loop.kind == "while":
        return LoopDomain(loop.label, None, "while", None, None, None, False)
    deps = tuple(v for e in loop.bound_exprs() for v in expr_vars(e) if v in outer_vars)
    return LoopDomain(loop.label, loop.var, "for", loop.lower, loop.upper, loop.step,
                      loop.is_normalized() and not loop.flagged, tuple(dict.fromkeys(deps)))


def build_relations(nest: LoopNest, program: Optional[Program] = None
                    ) -> tuple[list[AccessRelation], list[IrregularAccess]]:
    """One relation per affine memory reference, plus the irregular ones."""
    in_nest_defs = {v for s in iter_stmts(nest.root.body) if not isinstance(s, Loop)
                    for v in stmt_defs(s)}
    rels: list[AccessRelation] = []
    irr: list[IrregularAccess] = []
    counter = itertools.count()

    def add(array: str, index: tuple[Expr, ...], mode: str, chain: tuple[LoopDomain, ...],
            path: tuple[int, ...], line: int, irregular: bool) -> None:
        order = next(counter)
        ivars = {d.var for d in chain if d.var is not None}
        used = {v for e in index for v in expr_vars(e)}
        if irregular or any(isinstance(n, (LoadRef, CallRef)) for e in index
                            for n in walk_expr(e)) or (used & in_nest_defs):
            irr.append(IrregularAccess(array, index, chain, order, line))
            return
        forms = [linear_form(e, ivars) for e in index]
        dims: Optional[tuple[Dim, ...]] = None
        if all(f is not None for f in forms):
            dims = tuple(Dim(f[0], tuple(sorted(f[1].items()))) for f in forms)  # type: ignore[index]
        params = set(used - ivars)
        for d in chain:
            if d.var is None:
                continue
            for e in (d.lower, d.upper, d.step):
                params.update(v for v in expr_vars(e) if v not in ivars)
        rels.append(AccessRelation(array, index, dims, chain, mode, order, path, line,
                                   tuple(sorted(params))))

    def visit(loop: Loop, chain: tuple[LoopDomain, ...], path: tuple[int, ...]) -> None:
        outer = {d.var for d in chain if d.var is not None}
        dom = _domain(loop, outer)
        chain = chain + (dom,)
        for k, s in enumerate(loop.body):
            sub_path = path + (k,)
            loads = _stmt_loads(s)
            for ld in loads:
                # loads in an inner loop's bounds execute in this loop's body
                add(ld.array, ld.index, "read", chain, sub_path, getattr(s, "line", 0), False)
            if isinstance(s, Loop):
                visit(s, chain, sub_path)
            elif isinstance(s, MemAccess):
                add(s.array, s.index, s.mode, chain, sub_path, s.line, s.irregular)

    root_loads = _stmt_loads(nest.root)
    for ld in root_loads:
        add(ld.array, ld.index, "read", (), (), nest.root.line, False)
    visit(nest.root, (), ())
    return rels, irr


# ----------------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------------

Number = Union[int, float]


@dataclass
class Extents:
    """Effective extent (max trips over the enclosing domain) of each loop."""

    values: dict[str, int] = field(default_factory=dict)
    triangular: set[str] = field(default_factory=set)


def _eval_int(e: Expr, env: Mapping[str, int]) -> int:
    try:
        v = eval_expr(e, env)
    except UnboundParameter as exc:
        raise FootprintUnknown(f"unbound parameter {exc.args[0]!r}") from None
    return int(v)


def domain_extents(domain: tuple[LoopDomain, ...], env: Mapping[str, int],
                   overrides: Optional[Mapping[str, int]] = None) -> Extents:
    """Effective extents; bounds depending on outer induction variables are
    maximized over the corners of the outer box (exact for affine bounds)."""
    overrides = overrides or {}
    ext = Extents()
    outer: list[LoopDomain] = []
    for d in domain:
        if d.label in overrides:
            ext.values[d.label] = max(0, int(overrides[d.label]))
        elif d.var is None or not d.normalized:
            if d.var is not None and not d.depends:
                try:
                    ext.values[d.label] = int(loop_trips(
                        Loop(d.label, d.var, d.lower, d.upper, d.step, ()), env))
                except UnboundParameter as exc:
                    raise FootprintUnknown(f"unbound parameter {exc.args[0]!r}") from None
            else:
                raise FootprintUnknown(f"loop {d.label} has no evaluable extent")
        elif not d.depends:
            ext.values[d.label] = max(0, _eval_int(d.upper, env))
        else:
            ext.triangular.add(d.label)
            corner_vars = [o for o in outer if o.var in d.depends]
            best = 0
            for corner in itertools.product(*[
                    (0, max(ext.values[o.label] - 1, 0)) for o in corner_vars]):
                scope = dict(env)
                scope.update({o.var: c for o, c in zip(corner_vars, corner)})
                best = max(best, _eval_int(d.upper, scope))
            ext.values[d.label] = best
        outer.append(d)
    return ext


def _dim_ap(const: int, terms: tuple[tuple[str, int], ...], extents: Mapping[str, int]
            ) -> Optional[AP]:
    live = [(abs(a), a, extents[v]) for v, a in terms if a != 0 and extents[v] > 1]
    start = const + sum(min(0, a * (extents[v] - 1)) for v, a in terms)
    if not live:
        return AP(start, 1, 1)
    live.sort()
    s, _, c = live[0]
    for mag, _, e in live[1:]:
        if mag % s or mag > s * c:
            return None
        c += (mag // s) * (e - 1)
    return AP.make(start, s, c)


def relation_box(rel: AccessRelation, env: Mapping[str, int],
                 overrides: Optional[Mapping[str, int]] = None) -> Union[Box, set, None]:
    """The accessed index set: a Box, an explicit set of tuples, or None if empty."""
    ext = domain_extents(rel.domain, env, overrides)
    if any(v <= 0 for v in ext.values.values()):
        return None
    var_ext = {d.var: ext.values[d.label] for d in rel.domain if d.var is not None}
    by_label = {d.var: d for d in rel.domain if d.var is not None}
    used_per_dim = [set(v for v, _ in d.terms) for d in rel.dims] if rel.dims else []
    used = set().union(*used_per_dim) if used_per_dim else set()
    correlated = any(
        by_label[v].label in ext.triangular and set(by_label[v].depends) & used
        for v in used)
    overlap = sum(len(u) for u in used_per_dim) != len(used)
    unnormalized = any(not by_label[v].normalized for v in used)
    if rel.dims is not None and not correlated and not overlap and not unnormalized:
        aps = []
        for d in rel.dims:
            ap = _dim_ap(_eval_int(d.const, env), d.terms, var_ext)
            if ap is None:
                break
            aps.append(ap)
        else:
            return tuple(aps)
    return enumerate_relation(rel, env, overrides)


def enumerate_relation(rel: AccessRelation, env: Mapping[str, int],
                       overrides: Optional[Mapping[str, int]] = None) -> Optional[set]:
    """Brute-force the index tuples over the iteration domain."""
    overrides = overrides or {}
    out: set = set()

    def walk(k: int, scope: dict) -> None:
        if k == len(rel.domain):
            out.add(tuple(_eval_int(e, scope) for e in rel.index))
            return
        d = rel.domain[k]
        if d.label in overrides:
            n = int(overrides[d.label])
            if d.var is None:
                if n > 0:
                    walk(k + 1, scope)
                return
            values = range(0, n) if d.normalized else None
            if values is None:
                lo = _eval_int(d.lower, scope)
                st = _eval_int(d.step, scope)
                values = range(lo, lo + st * n, st) if st else range(0)
        elif d.var is None:
            raise FootprintUnknown(f"loop {d.label} has no evaluable extent")
        else:
            lo, hi, st = (_eval_int(d.lower, scope), _eval_int(d.upper, scope),
                          _eval_int(d.step, scope))
            if st == 0:
                raise FootprintUnknown(f"loop {d.label} has step 0")
            values = range(lo, hi, st)
        for v in values:
            scope[d.var] = v
            walk(k + 1, scope)
        scope.pop(d.var, None)

    walk(0, dict(env))
    return out or None


def total_iterations(domain: tuple[LoopDomain, ...], env: Mapping[str, int],
                     overrides: Optional[Mapping[str, int]] = None) -> int:
    ext = domain_extents(domain, env, overrides)
    n = 1
    for d in domain:
        n *= ext.values[d.label]
    return n
