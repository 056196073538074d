"""Loop normalization: rewrite every counted loop to ``for i in 0..T``."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .nodes import (
    Assign,
    BinOp,
    Call,
    CallRef,
    ExitBranch,
    Expr,
    Function,
    LoadRef,
    Loop,
    MemAccess,
    Num,
    Program,
    Return,
    Stmt,
    UnOp,
    Var,
    expr_vars,
    is_numeric_closed,
    iter_stmts,
    stmt_defs,
)


def simplify(e: Expr) -> Expr:
    """Constant folding plus the identities x+0, x-0, x*1, x*0, x/1."""
    if isinstance(e, BinOp):
        l, r = simplify(e.left), simplify(e.right)
        if isinstance(l, Num) and isinstance(r, Num):
            v = _fold(e.op, l.value, r.value)
            if v is not None:
                return Num(v)
        if e.op == "+":
            if l == Num(0):
                return r
            if r == Num(0):
                return l
        elif e.op == "-":
            if r == Num(0):
                return l
        elif e.op == "*":
            if l == Num(1):
                return r
            if r == Num(1):
                return l
            if Num(0) in (l, r) and is_numeric_closed(l) and is_numeric_closed(r):
                return Num(0)
        elif e.op == "/":
            if r == Num(1):
                return l
        return BinOp(e.op, l, r)
    if isinstance(e, UnOp):
        o = simplify(e.operand)
        if isinstance(o, Num):
            return Num(-o.value) if e.op == "-" else Num(0 if o.value else 1)
        return UnOp(e.op, o)
    if isinstance(e, CallRef):
        return CallRef(e.func, tuple(simplify(a) for a in e.args))
    if isinstance(e, LoadRef):
        return LoadRef(e.array, tuple(simplify(a) for a in e.index))
    return e


def _fold(op: str, a: int, b: int):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a // b if b != 0 else None
    if op == "%":
        return a % b if b != 0 else None
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "&&":
        return int(bool(a) and bool(b))
    if op == "||":
        return int(bool(a) or bool(b))
    return None


def substitute(e: Expr, name: str, repl: Expr) -> Expr:
    return map_expr(e, lambda v: repl if v.name == name else v)


def map_expr(e: Expr, fn: Callable[[Var], Expr]) -> Expr:
    if isinstance(e, Var):
        return fn(e)
    if isinstance(e, BinOp):
        return BinOp(e.op, map_expr(e.left, fn), map_expr(e.right, fn))
    if isinstance(e, UnOp):
        return UnOp(e.op, map_expr(e.operand, fn))
    if isinstance(e, CallRef):
        return CallRef(e.func, tuple(map_expr(a, fn) for a in e.args))
    if isinstance(e, LoadRef):
        return LoadRef(e.array, tuple(map_expr(a, fn) for a in e.index))
    return e


def _subst_stmt(s: Stmt, name: str, repl: Expr) -> Stmt:
    sub = lambda e: simplify(substitute(e, name, repl))  # noqa: E731
    if isinstance(s, Assign):
        return replace(s, expr=sub(s.expr))
    if isinstance(s, MemAccess):
        return replace(
            s,
            index=tuple(sub(i) for i in s.index),
            value=sub(s.value) if s.value is not None else None,
        )
    if isinstance(s, Call):
        return replace(s, args=tuple(sub(a) for a in s.args))
    if isinstance(s, ExitBranch):
        return replace(s, cond=sub(s.cond))
    if isinstance(s, Return):
        return replace(s, value=sub(s.value) if s.value is not None else None)
    if isinstance(s, Loop):
        if s.kind == "while":
            return replace(s, cond=sub(s.cond),
                           body=tuple(_subst_stmt(t, name, repl) for t in s.body))
        return replace(
            s,
            lower=sub(s.lower),
            upper=sub(s.upper),
            step=sub(s.step),
            body=tuple(_subst_stmt(t, name, repl) for t in s.body),
        )
    return s


def normalize_loop(loop: Loop) -> Loop:
    """Normalize one loop (not its children).

    Loops whose step is zero or not a literal are returned unchanged with
    ``flagged=True``; ``while`` loops are left alone.
    """
    if loop.kind != "for":
        return loop
    if loop.is_normalized():
        return replace(loop, flagged=False)
    step = simplify(loop.step)
    if not isinstance(step, Num) or step.value == 0:
        return replace(loop, flagged=True)
    s = step.value
    lo, hi = simplify(loop.lower), simplify(loop.upper)
    mutated = {d for t in iter_stmts(loop.body) for d in stmt_defs(t)}
    if mutated & set(expr_vars(lo)) or not is_numeric_closed(lo):
        # the rewritten body re-reads lower on every iteration
        return replace(loop, flagged=True)
    if s > 0:
        span = simplify(BinOp("-", hi, lo))
        if s == 1:
            trips = span
        else:
            trips = simplify(BinOp("/", BinOp("+", span, Num(s - 1)), Num(s)))
    else:
        a = -s
        span = simplify(BinOp("-", lo, hi))
        trips = span if a == 1 else simplify(BinOp("/", BinOp("+", span, Num(a - 1)), Num(a)))
    if isinstance(trips, Num) and trips.value < 0:
        trips = Num(0)
    v = loop.var
    assert v is not None
    # original i == lower + step * i'
    repl = simplify(BinOp("+", lo, BinOp("*", Num(s), Var(v))))
    body = tuple(_subst_stmt(t, v, repl) for t in loop.body)
    return replace(loop, lower=Num(0), upper=trips, step=Num(1), body=body, flagged=False)


def _normalize_body(body: tuple[Stmt, ...], flagged: list[str]) -> tuple[Stmt, ...]:
    out = []
    for s in body:
        if isinstance(s, Loop):
            s = normalize_loop(s)
            if s.flagged:
                flagged.append(s.label)
            s = replace(s, body=_normalize_body(s.body, flagged))
        out.append(s)
    return tuple(out)


def normalize_loops(p: Program) -> Program:
    """Return a copy of ``p`` with every counted loop normalized.

    Iteration counts are preserved exactly. Loops that cannot be normalized
    keep their original header and carry ``flagged=True``.
    """
    funcs = []
    for f in p.functions:
        flagged: list[str] = []
        funcs.append(Function(f.name, f.params, _normalize_body(f.body, flagged)))
    return replace(p, functions=tuple(funcs))


def flagged_loops(p: Program) -> list[tuple[str, str]]:
    """(function, label) of every loop normalization had to leave alone."""
    return [(f.name, l.label) for f in p.functions for l in f.loops if l.flagged]
