"""Recursive-descent parser for ``.bir`` sources.

The grammar is documented in ``docs/grammar.md``. Parsing runs in two
passes: syntax (producing raw nodes) and a resolution pass that assigns
loop labels, fills default exit targets, computes the ``irregular`` flag on
memory accesses and checks the semantic rules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Optional

from .nodes import (
    RETURN_TARGET,
    ArrayDecl,
    Assign,
    BinOp,
    Call,
    CallRef,
    ExitBranch,
    Expr,
    Extern,
    Function,
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
    iter_stmts,
    walk_expr,
)


class IRError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg = msg
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


class IRSyntaxError(IRError):
    def __init__(self, msg: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.expected = expected
        if expected:
            msg = f"{msg} (expected {' or '.join(expected)})"
        super().__init__(msg, line, col)


class IRSemanticError(IRError):
    pass


KEYWORDS = {
    "func", "for", "in", "step", "while", "load", "store", "call", "break-if",
    "nop", "return", "array", "extern", "pure", "entry", "elsize",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<kw_break>break-if\b)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|->|<=|>=|==|!=|&&|\|\||[-+*/%<>=!{}()\[\];,:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | kw | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise IRSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "kw_break":
            out.append(Token("kw", tok, line, col))
        elif kind == "int":
            out.append(Token("int", tok, line, col))
        elif kind == "ident":
            out.append(Token("kw" if tok in KEYWORDS else "ident", tok, line, col))
        elif kind == "op":
            out.append(Token("op", tok, line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# Binary operator precedence (higher binds tighter).
PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
UNARY_PRECEDENCE = 7


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"unexpected {self.describe(self.tok)}", (repr(text),))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"unexpected {self.describe(self.tok)}", ("identifier",))
        return self.advance()

    def expect_int(self) -> int:
        if self.tok.kind != "int":
            self.error(f"unexpected {self.describe(self.tok)}", ("integer",))
        return int(self.advance().text)

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def error(self, msg: str, expected: tuple[str, ...] = ()) -> None:
        raise IRSyntaxError(msg, self.tok.line, self.tok.col, expected)

    # -- top level ----------------------------------------------------------

    def program(self) -> tuple[list, Optional[str]]:
        decls: list = []
        entry: Optional[str] = None
        while self.tok.kind != "eof":
            if self.at("func"):
                decls.append(self.function())
            elif self.at("array"):
                self.advance()
                name = self.expect_ident().text
                elsize = 8
                if self.at("elsize"):
                    self.advance()
                    elsize = self.expect_int()
                self.expect(";")
                decls.append(ArrayDecl(name, elsize))
            elif self.at("extern"):
                self.advance()
                name = self.expect_ident().text
                params = self.param_list()
                pure = False
                if self.at("pure"):
                    self.advance()
                    pure = True
                self.expect(";")
                decls.append(Extern(name, params, pure))
            elif self.at("entry"):
                self.advance()
                entry = self.expect_ident().text
                self.expect(";")
            else:
                self.error(f"unexpected {self.describe(self.tok)}",
                           ("'func'", "'array'", "'extern'", "'entry'"))
        return decls, entry

    def param_list(self) -> tuple[str, ...]:
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.expect_ident().text)
            while self.at(","):
                self.advance()
                params.append(self.expect_ident().text)
        self.expect(")")
        return tuple(params)

    def function(self) -> tuple[Function, int, int]:
        start = self.expect("func")
        name = self.expect_ident().text
        params = self.param_list()
        body = self.block()
        return (Function(name, params, body), start.line, start.col)

    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unexpected end of input", ("'}'",))
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    # -- statements ---------------------------------------------------------

    def statement(self) -> Stmt:
        t = self.tok
        label = ""
        if t.kind == "ident" and self.peek().kind == "op" and self.peek().text == ":":
            label = t.text
            self.advance()
            self.advance()
            if not (self.at("for") or self.at("while")):
                self.error(f"unexpected {self.describe(self.tok)}", ("'for'", "'while'"))
            t = self.tok
        line = t.line
        if self.at("for"):
            self.advance()
            var = self.expect_ident().text
            self.expect("in")
            lower = self.expr()
            self.expect("..")
            upper = self.expr()
            step: Expr = Num(1)
            if self.at("step"):
                self.advance()
                step = self.expr()
            body = self.block()
            return Loop(label, var, lower, upper, step, body, "for", None, False, line)
        if self.at("while"):
            self.advance()
            cond = self.expr()
            body = self.block()
            return Loop(label, None, None, None, None, body, "while", cond, False, line)
        if self.at("load"):
            self.advance()
            dest = None
            if self.tok.kind == "ident" and self.peek().text == "=" and self.peek().kind == "op":
                dest = self.advance().text
                self.advance()
            array = self.expect_ident().text
            index = self.index()
            self.expect(";")
            return MemAccess(array, index, "read", dest, None, False, line)
        if self.at("store"):
            self.advance()
            array = self.expect_ident().text
            index = self.index()
            value = None
            if self.at("="):
                self.advance()
                value = self.expr()
            self.expect(";")
            return MemAccess(array, index, "write", None, value, False, line)
        if self.at("call"):
            self.advance()
            func = self.expect_ident().text
            args = self.args()
            self.expect(";")
            return Call(func, args, line)
        if self.at("break-if"):
            self.advance()
            cond = self.expr()
            target = ""
            if self.at("->"):
                self.advance()
                if self.at("return"):
                    self.advance()
                    target = RETURN_TARGET
                else:
                    target = self.expect_ident().text
            self.expect(";")
            return ExitBranch(cond, target, line)
        if self.at("nop"):
            self.advance()
            cost = 1
            if self.tok.kind == "int":
                cost = self.expect_int()
            self.expect(";")
            return Nop(cost, line)
        if self.at("return"):
            self.advance()
            value = None
            if not self.at(";"):
                value = self.expr()
            self.expect(";")
            return Return(value, line)
        if t.kind == "ident" and self.peek().kind == "op" and self.peek().text == "=":
            var = self.advance().text
            self.advance()
            e = self.expr()
            self.expect(";")
            return Assign(var, e, line)
        self.error(
            f"unexpected {self.describe(t)}",
            ("'for'", "'while'", "'load'", "'store'", "'call'", "'break-if'",
             "'nop'", "'return'", "assignment"),
        )
        raise AssertionError  # pragma: no cover

    def index(self) -> tuple[Expr, ...]:
        if not self.at("["):
            self.error(f"unexpected {self.describe(self.tok)}", ("'['",))
        idx = []
        while self.at("["):
            self.advance()
            idx.append(self.expr())
            self.expect("]")
        return tuple(idx)

    def args(self) -> tuple[Expr, ...]:
        self.expect("(")
        out: list[Expr] = []
        if not self.at(")"):
            out.append(self.expr())
            while self.at(","):
                self.advance()
                out.append(self.expr())
        self.expect(")")
        return tuple(out)

    # -- expressions (precedence climbing) ----------------------------------

    def expr(self, min_prec: int = 1) -> Expr:
        left = self.unary()
        while True:
            t = self.tok
            prec = PRECEDENCE.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.expr(prec + 1)
            left = BinOp(t.text, left, right)

    def unary(self) -> Expr:
        if self.at("-") or self.at("!"):
            op = self.advance().text
            operand = self.unary()
            if op == "-" and isinstance(operand, Num):
                return Num(-operand.value)
            return UnOp(op, operand)
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Num(int(t.text))
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                return CallRef(t.text, self.args())
            if self.at("["):
                return LoadRef(t.text, self.index())
            return Var(t.text, (t.line, t.col))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"unexpected {self.describe(t)}", ("expression",))
        raise AssertionError  # pragma: no cover


# ----------------------------------------------------------------------------
# Resolution
# ----------------------------------------------------------------------------


def is_affine(e: Expr, allowed: set[str]) -> bool:
    """Affine in ``allowed`` variables with integer literal coefficients."""
    if isinstance(e, Num):
        return True
    if isinstance(e, Var):
        return e.name in allowed
    if isinstance(e, UnOp):
        return e.op == "-" and is_affine(e.operand, allowed)
    if isinstance(e, BinOp):
        if e.op in ("+", "-"):
            return is_affine(e.left, allowed) and is_affine(e.right, allowed)
        if e.op == "*":
            lc = _is_const(e.left)
            rc = _is_const(e.right)
            if lc:
                return is_affine(e.right, allowed)
            if rc:
                return is_affine(e.left, allowed)
            return False
        return False
    return False


def _is_const(e: Expr) -> bool:
    return all(isinstance(n, (Num, BinOp, UnOp)) for n in walk_expr(e)) and not any(
        isinstance(n, BinOp) and n.op not in ("+", "-", "*") for n in walk_expr(e)
    )


class _Resolver:
    def __init__(self, program_decls: list, entry: Optional[str]):
        self.funcs: dict[str, Function] = {}
        self.func_pos: dict[str, tuple[int, int]] = {}
        self.externs: dict[str, Extern] = {}
        self.arrays: list[ArrayDecl] = []
        order: list[str] = []
        for d in program_decls:
            if isinstance(d, tuple):
                f, line, col = d
                if f.name in self.funcs or f.name in self.externs:
                    raise IRSemanticError(f"duplicate function {f.name!r}", line, col)
                self.funcs[f.name] = f
                self.func_pos[f.name] = (line, col)
                order.append(f.name)
            elif isinstance(d, Extern):
                if d.name in self.funcs or d.name in self.externs:
                    raise IRSemanticError(f"duplicate function {d.name!r}")
                self.externs[d.name] = d
            elif isinstance(d, ArrayDecl):
                if any(a.name == d.name for a in self.arrays):
                    raise IRSemanticError(f"duplicate array {d.name!r}")
                self.arrays.append(d)
        self.order = order
        if entry is None:
            if not order:
                raise IRSemanticError("program declares no functions")
            entry = "main" if "main" in self.funcs else order[0]
        if entry not in self.funcs:
            raise IRSemanticError(f"entry function {entry!r} is not declared")
        self.entry = entry

    def resolve(self) -> Program:
        funcs = tuple(self.resolve_function(self.funcs[n]) for n in self.order)
        return Program(funcs, self.entry, tuple(self.externs.values()), tuple(self.arrays))

    def check_call(self, name: str, nargs: int, line: int) -> None:
        if name in self.funcs:
            want = len(self.funcs[name].params)
        elif name in self.externs:
            want = len(self.externs[name].params)
        else:
            raise IRSemanticError(f"call to undeclared function {name!r}", line)
        if want != nargs:
            raise IRSemanticError(f"{name!r} expects {want} arguments, got {nargs}", line)

    def resolve_function(self, f: Function) -> Function:
        self.counter = 0
        self.used_labels: set[str] = set()
        for s in iter_stmts(f.body):
            if isinstance(s, Loop) and s.label:
                if s.label in self.used_labels or s.label == RETURN_TARGET:
                    raise IRSemanticError(f"duplicate loop label {s.label!r}", s.line)
                self.used_labels.add(s.label)
        if len(set(f.params)) != len(f.params):
            raise IRSemanticError(f"duplicate parameter in {f.name!r}")
        self.in_loop_defs: set[str] = set()
        for s in iter_stmts(f.body):
            if isinstance(s, Loop):
                for t in iter_stmts(s.body):
                    if isinstance(t, Assign):
                        self.in_loop_defs.add(t.var)
                    elif isinstance(t, MemAccess) and t.dest:
                        self.in_loop_defs.add(t.dest)
        defined = set(f.params)
        body = self.block(f.body, defined, [], set(), f.name)
        return Function(f.name, f.params, body)

    def fresh_label(self) -> str:
        while True:
            lab = f"L{self.counter}"
            self.counter += 1
            if lab not in self.used_labels:
                self.used_labels.add(lab)
                return lab

    def check_expr(self, e: Expr, defined: set[str], line: int) -> None:
        for n in walk_expr(e):
            if isinstance(n, Var) and n.name not in defined:
                l, c = n.pos
                raise IRSemanticError(f"undefined variable {n.name!r}", l or line, c)
            if isinstance(n, CallRef):
                self.check_call(n.func, len(n.args), line)

    def block(self, body, defined: set[str], loops: list[str],
              inductions: set[str], fname: str) -> tuple[Stmt, ...]:
        out: list[Stmt] = []
        for s in body:
            for e in _direct_exprs(s):
                self.check_expr(e, defined, s.line)
            if isinstance(s, Loop):
                label = s.label or self.fresh_label()
                if s.var is not None:
                    if s.var in defined:
                        raise IRSemanticError(
                            f"induction variable {s.var!r} shadows an existing variable", s.line)
                    inner_defined = defined | {s.var}
                    inner_ind = inductions | {s.var}
                else:
                    inner_defined = set(defined)
                    inner_ind = inductions
                new_body = self.block(s.body, inner_defined, loops + [label], inner_ind, fname)
                # definitions made inside the loop stay visible after it
                defined |= inner_defined - ({s.var} if s.var else set())
                out.append(replace(s, label=label, body=new_body))
                continue
            if isinstance(s, (Assign,)) and s.var in inductions:
                raise IRSemanticError(f"assignment to induction variable {s.var!r}", s.line)
            if isinstance(s, MemAccess):
                if s.dest is not None and s.dest in inductions:
                    raise IRSemanticError(f"assignment to induction variable {s.dest!r}", s.line)
                allowed = set(defined) - self.in_loop_defs | inductions
                irregular = not all(is_affine(ix, allowed) for ix in s.index)
                s = replace(s, irregular=irregular)
            if isinstance(s, Call):
                self.check_call(s.func, len(s.args), s.line)
            if isinstance(s, Return) and loops:
                raise IRSemanticError("return inside a loop; use 'break-if c -> return'", s.line)
            if isinstance(s, ExitBranch):
                if not loops:
                    raise IRSemanticError("break-if outside of a loop", s.line)
                target = s.target or loops[-1]
                if target != RETURN_TARGET and target not in loops:
                    raise IRSemanticError(f"break-if target {target!r} is not an enclosing loop", s.line)
                s = replace(s, target=target)
            for v in _stmt_def(s):
                defined.add(v)
            out.append(s)
        return tuple(out)


def _direct_exprs(s: Stmt) -> list[Expr]:
    if isinstance(s, Assign):
        return [s.expr]
    if isinstance(s, MemAccess):
        return list(s.index) + ([s.value] if s.value is not None else [])
    if isinstance(s, Call):
        return list(s.args)
    if isinstance(s, ExitBranch):
        return [s.cond]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, Loop):
        return s.bound_exprs()
    return []


def _stmt_def(s: Stmt) -> list[str]:
    if isinstance(s, Assign):
        return [s.var]
    if isinstance(s, MemAccess) and s.dest:
        return [s.dest]
    return []


def parse_program(text: str) -> Program:
    """Parse ``.bir`` source text into a resolved :class:`Program`.

    Raises :class:`IRSyntaxError` or :class:`IRSemanticError` with the
    offending line and column.
    """
    p = _Parser(text)
    decls, entry = p.program()
    return _Resolver(decls, entry).resolve()
