"""Closed-form trip counts for regularly bounded nests."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Union

from ..ir.nodes import BinOp, Expr, Loop, LoopNest, Num, UnOp, Var

Number = Union[int, Fraction]


class UnboundParameter(KeyError):
    pass


def eval_expr(e: Expr, env: Mapping[str, Number]) -> Number:
    """Evaluate a numeric-closed expression. ``/`` floors on integers and is
    exact on fractions (which only arise from averaged induction values)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundParameter(e.name)
        return env[e.name]
    if isinstance(e, UnOp):
        v = eval_expr(e.operand, env)
        return -v if e.op == "-" else int(not v)
    if isinstance(e, BinOp):
        a, b = eval_expr(e.left, env), eval_expr(e.right, env)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise ZeroDivisionError("division by zero in bound")
            if isinstance(a, int) and isinstance(b, int):
                return a // b
            return Fraction(a) / b
        if op == "%":
            return a % b
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
    raise ValueError(f"cannot evaluate {e!r} symbolically")


def loop_trips(loop: Loop, env: Mapping[str, Number]) -> Number:
    lo = eval_expr(loop.lower, env)
    hi = eval_expr(loop.upper, env)
    st = eval_expr(loop.step, env)
    if st == 0:
        raise ValueError(f"loop {loop.label} has step 0")
    if st > 0:
        span = hi - lo
    else:
        span, st = lo - hi, -st
    if span <= 0:
        return 0
    q = Fraction(span) / st
    n = q.numerator // q.denominator
    return n + (1 if n < q else 0) if isinstance(span, int) else q


def level_totals(nest: LoopNest, env: Mapping[str, Number]) -> tuple[Fraction, ...]:
    """Expected iteration totals per level.

    Inner bounds are evaluated with each enclosing induction variable at its
    mean value, which is exact when inner extents are affine in them.
    """
    totals = [Fraction(0)] * nest.depth

    def visit(loop: Loop, depth: int, weight: Fraction, scope: dict) -> None:
        n = Fraction(loop_trips(loop, scope))
        totals[depth] += weight * n
        if n == 0:
            return
        inner = dict(scope)
        if loop.var is not None:
            lo = Fraction(eval_expr(loop.lower, scope))
            st = Fraction(eval_expr(loop.step, scope))
            inner[loop.var] = lo + st * (n - 1) / 2
        for s in loop.body:
            if isinstance(s, Loop):
                visit(s, depth + 1, weight * n, inner)

    visit(nest.root, 0, Fraction(1), dict(env))
    return tuple(totals)
