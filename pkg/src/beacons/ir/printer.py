"""Canonical text form of IR programs; reparses to an equal Program."""

from __future__ import annotations

from .nodes import (
    RETURN_TARGET,
    Assign,
    BinOp,
    Call,
    CallRef,
    ExitBranch,
    Expr,
    LoadRef,
    Loop,
    MemAccess,
    Nop,
    Num,
    Program,
    Return,
    Stmt,
    UnOp,
    Var,
)
from .parser import PRECEDENCE, UNARY_PRECEDENCE

INDENT = "  "


def format_expr(e: Expr, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(e, Num):
        s = str(e.value)
        # a negative literal in operand position must not fuse with a binary minus
        return f"({s})" if e.value < 0 and parent_prec > 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, CallRef):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, LoadRef):
        return e.array + "".join(f"[{format_expr(i)}]" for i in e.index)
    if isinstance(e, UnOp):
        inner = format_expr(e.operand, UNARY_PRECEDENCE)
        if e.op == "-" and isinstance(e.operand, Num):
            inner = f"({e.operand.value})"
        s = f"{e.op}{inner}"
        return f"({s})" if parent_prec > UNARY_PRECEDENCE else s
    if isinstance(e, BinOp):
        prec = PRECEDENCE[e.op]
        s = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec, right=True)}"
        # operators are left-associative: a right operand of equal precedence needs parens
        if prec < parent_prec or (right and prec == parent_prec):
            return f"({s})"
        return s
    raise TypeError(f"not an expression: {e!r}")


def _index(idx) -> str:
    return "".join(f"[{format_expr(i)}]" for i in idx)


def format_stmt(s: Stmt, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, Loop):
        if s.kind == "while":
            head = f"{s.label}: while {format_expr(s.cond)} {{"
        else:
            head = f"{s.label}: for {s.var} in {format_expr(s.lower)}..{format_expr(s.upper)}"
            if s.step != Num(1):
                head += f" step {format_expr(s.step)}"
            head += " {"
        lines = [pad + head]
        for t in s.body:
            lines.extend(format_stmt(t, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(s, Assign):
        return [f"{pad}{s.var} = {format_expr(s.expr)};"]
    if isinstance(s, MemAccess):
        if s.mode == "read":
            dest = f"{s.dest} = " if s.dest else ""
            return [f"{pad}load {dest}{s.array}{_index(s.index)};"]
        val = f" = {format_expr(s.value)}" if s.value is not None else ""
        return [f"{pad}store {s.array}{_index(s.index)}{val};"]
    if isinstance(s, Call):
        return [f"{pad}call {s.func}({', '.join(format_expr(a) for a in s.args)});"]
    if isinstance(s, ExitBranch):
        target = "return" if s.target == RETURN_TARGET else s.target
        return [f"{pad}break-if {format_expr(s.cond)} -> {target};"]
    if isinstance(s, Nop):
        return [f"{pad}nop {s.cost};"]
    if isinstance(s, Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {format_expr(s.value)};"]
    raise TypeError(f"not a statement: {s!r}")


def pretty_print(p: Program) -> str:
    lines: list[str] = []
    for a in p.arrays:
        lines.append(f"array {a.name} elsize {a.elsize};")
    for x in p.externs:
        pure = " pure" if x.pure else ""
        lines.append(f"extern {x.name}({', '.join(x.params)}){pure};")
    lines.append(f"entry {p.entry};")
    for f in p.functions:
        lines.append("")
        lines.append(f"func {f.name}({', '.join(f.params)}) {{")
        for s in f.body:
            lines.extend(format_stmt(s, 1))
        lines.append("}")
    return "\n".join(lines) + "\n"
