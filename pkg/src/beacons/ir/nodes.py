"""Node types for the mini loop IR.

All nodes are frozen dataclasses so that programs compare structurally and
can be shared between analyses. Source positions are carried for
diagnostics but excluded from equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

RETURN_TARGET = "return"


# ----------------------------------------------------------------------------
# Expressions
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class CallRef:
    func: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class LoadRef:
    array: str
    index: tuple["Expr", ...]


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"


Expr = Union[Num, Var, CallRef, LoadRef, BinOp, UnOp]

ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGIC_OPS = ("&&", "||")


def walk_expr(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal of an expression tree."""
    yield e
    if isinstance(e, BinOp):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, UnOp):
        yield from walk_expr(e.operand)
    elif isinstance(e, (CallRef,)):
        for a in e.args:
            yield from walk_expr(a)
    elif isinstance(e, LoadRef):
        for a in e.index:
            yield from walk_expr(a)


def expr_vars(e: Expr) -> list[str]:
    """Variable names referenced by ``e``, in first-occurrence order."""
    seen: dict[str, None] = {}
    for node in walk_expr(e):
        if isinstance(node, Var):
            seen.setdefault(node.name)
    return list(seen)


def is_numeric_closed(e: Expr) -> bool:
    """True iff every leaf is an integer literal or a scalar variable."""
    return not any(isinstance(n, (CallRef, LoadRef)) for n in walk_expr(e))


# ----------------------------------------------------------------------------
# Statements
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class MemAccess:
    """A load or store. ``dest`` names the scalar a load writes into and
    ``value`` is the stored expression; both are optional."""

    array: str
    index: tuple[Expr, ...]
    mode: str  # "read" | "write"
    dest: Optional[str] = None
    value: Optional[Expr] = None
    irregular: bool = False
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple[Expr, ...]
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ExitBranch:
    """``break-if cond -> target``; target is a loop label or ``return``."""

    cond: Expr
    target: str
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Nop:
    cost: int = 1
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Loop:
    """A counted ``for`` loop or a ``while`` loop.

    For ``for`` loops the induction variable ranges over ``lower, lower+step,
    ...`` strictly below ``upper`` (above it for negative steps). Bounds are
    evaluated once at loop entry. ``while`` loops keep ``cond`` and have no
    bounds.
    """

    label: str
    var: Optional[str]
    lower: Optional[Expr]
    upper: Optional[Expr]
    step: Optional[Expr]
    body: tuple["Stmt", ...]
    kind: str = "for"
    cond: Optional[Expr] = None
    flagged: bool = False
    line: int = field(default=0, compare=False, repr=False)

    @property
    def induction_var(self) -> Optional[str]:
        return self.var

    def bound_exprs(self) -> list[Expr]:
        if self.kind == "while":
            return [self.cond] if self.cond is not None else []
        return [e for e in (self.lower, self.upper, self.step) if e is not None]

    @property
    def exits(self) -> list[ExitBranch]:
        """Branches in the body that leave this loop (not via the header)."""
        inner = set(l.label for l in iter_loops(self.body))
        out = []
        for s in iter_stmts(self.body):
            if isinstance(s, ExitBranch) and s.target not in inner:
                out.append(s)
        return out

    def is_normalized(self) -> bool:
        return (
            self.kind == "for"
            and self.lower == Num(0)
            and self.step == Num(1)
        )


Stmt = Union[Assign, MemAccess, Call, ExitBranch, Nop, Return, Loop]


def iter_stmts(body: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Every statement in ``body``, descending into loops (pre-order)."""
    for s in body:
        yield s
        if isinstance(s, Loop):
            yield from iter_stmts(s.body)


def iter_loops(body: tuple[Stmt, ...]) -> Iterator[Loop]:
    for s in iter_stmts(body):
        if isinstance(s, Loop):
            yield s


def stmt_exprs(s: Stmt) -> list[Expr]:
    """Expressions evaluated directly by ``s`` (loops: their bounds only)."""
    if isinstance(s, Assign):
        return [s.expr]
    if isinstance(s, MemAccess):
        out = list(s.index)
        if s.value is not None:
            out.append(s.value)
        return out
    if isinstance(s, Call):
        return list(s.args)
    if isinstance(s, ExitBranch):
        return [s.cond]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, Loop):
        return s.bound_exprs()
    return []


def stmt_defs(s: Stmt) -> list[str]:
    if isinstance(s, Assign):
        return [s.var]
    if isinstance(s, MemAccess) and s.dest is not None:
        return [s.dest]
    if isinstance(s, Loop) and s.var is not None:
        return [s.var]
    return []


# ----------------------------------------------------------------------------
# Top level
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ArrayDecl:
    name: str
    elsize: int = 8


@dataclass(frozen=True)
class Extern:
    """External function. ``pure`` externs depend only on their arguments;
    others are opaque to slicing."""

    name: str
    params: tuple[str, ...]
    pure: bool = False


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]

    @property
    def loops(self) -> list[Loop]:
        return list(iter_loops(self.body))

    def nests(self) -> list["LoopNest"]:
        return [LoopNest(self.name, s) for s in iter_stmts(self.body)
                if isinstance(s, Loop) and _is_outermost(s, self.body)]


def _is_outermost(loop: Loop, body: tuple[Stmt, ...]) -> bool:
    for s in body:
        if s is loop:
            return True
        if isinstance(s, Loop) and any(l is loop for l in iter_loops(s.body)):
            return False
    return False


@dataclass(frozen=True)
class Program:
    functions: tuple[Function, ...]
    entry: str
    externs: tuple[Extern, ...] = ()
    arrays: tuple[ArrayDecl, ...] = ()

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def extern(self, name: str) -> Optional[Extern]:
        for e in self.externs:
            if e.name == name:
                return e
        return None

    def elsize(self, array: str) -> int:
        for a in self.arrays:
            if a.name == array:
                return a.elsize
        return 8

    def nests(self) -> list["LoopNest"]:
        return [n for f in self.functions for n in f.nests()]

    def nest(self, nest_id: str) -> "LoopNest":
        for n in self.nests():
            if n.id == nest_id:
                return n
        raise KeyError(nest_id)


@dataclass(frozen=True)
class LoopNest:
    """An outermost loop and every loop nested inside it.

    ``loops`` lists all member loops in pre-order. Loops at the same nesting
    depth form one level; ``depth`` counts levels.
    """

    function: str
    root: Loop

    @property
    def id(self) -> str:
        return f"{self.function}:{self.root.label}"

    @property
    def loops(self) -> list[Loop]:
        return [self.root] + list(iter_loops(self.root.body))

    @property
    def levels(self) -> list[list[Loop]]:
        out: list[list[Loop]] = []

        def visit(loop: Loop, d: int) -> None:
            if len(out) <= d:
                out.append([])
            out[d].append(loop)
            for s in loop.body:
                for child in _direct_loops(s):
                    visit(child, d + 1)

        visit(self.root, 0)
        return out

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level_of(self, label: str) -> int:
        for d, lv in enumerate(self.levels):
            if any(l.label == label for l in lv):
                return d
        raise KeyError(label)

    def enclosing(self, target: Stmt) -> list[Loop]:
        """Loops of this nest enclosing ``target`` (outermost first)."""
        def search(loop: Loop, chain: list[Loop]) -> Optional[list[Loop]]:
            chain = chain + [loop]
            for s in loop.body:
                if s is target:
                    return chain
                if isinstance(s, Loop):
                    found = search(s, chain)
                    if found is not None:
                        return found
            return None

        if target is self.root:
            return []
        return search(self.root, []) or []

    @property
    def exits(self) -> list[ExitBranch]:
        return self.root.exits


def _direct_loops(s: Stmt) -> list[Loop]:
    return [s] if isinstance(s, Loop) else []


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # induction | loop_invariant | mutable_local | parameter


def variables(f: Function) -> dict[str, Variable]:
    """Classify every scalar of ``f`` by its definition sites."""
    out: dict[str, Variable] = {p: Variable(p, "parameter") for p in f.params}
    in_loop: set[str] = set()
    for loop in iter_loops(f.body):
        for s in iter_stmts(loop.body):
            if not isinstance(s, Loop):
                in_loop.update(stmt_defs(s))
    for s in iter_stmts(f.body):
        if isinstance(s, Loop) and s.var is not None:
            out[s.var] = Variable(s.var, "induction")
        else:
            for v in stmt_defs(s):
                if v in out:
                    if out[v].kind == "parameter" and v in in_loop:
                        out[v] = Variable(v, "mutable_local")
                    continue
                kind = "mutable_local" if v in in_loop else "loop_invariant"
                out[v] = Variable(v, kind)
    return out
