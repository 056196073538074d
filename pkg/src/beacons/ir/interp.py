"""Profiling interpreter.

Each IR function is translated to a Python function (source generation)
that threads a synthetic clock ``t`` through every statement. The runtime
object records one :class:`NestRecord` per outermost-nest invocation: level
iteration totals, elapsed cost, the scalar values live at entry and the set
of distinct addresses touched (callees included).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Protocol

from .nodes import (
    RETURN_TARGET,
    Assign,
    BinOp,
    Call,
    CallRef,
    ExitBranch,
    Expr,
    Function,
    LoadRef,
    Loop,
    LoopNest,
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

DEFAULT_ITERATION_CAP = 10**8


class IRRuntimeError(Exception):
    pass


class UnboundInputError(IRRuntimeError):
    pass


class RunawayLoopError(IRRuntimeError):
    pass


@dataclass(frozen=True)
class CostModel:
    """Integer cost charged per executed statement kind."""

    assign: int = 1
    mem: int = 2
    call: int = 1
    exit: int = 1
    ret: int = 1
    loop_iter: int = 0


@dataclass
class NestRecord:
    nest_id: str
    invocation: int
    start: int
    elapsed: int
    level_totals: tuple[int, ...]
    entry_values: dict[str, int]
    addresses: frozenset
    footprint_bytes: int
    exit: str = "fallthrough"

    @property
    def trips(self) -> tuple:
        """Per-level trip counts N_k with N_1*...*N_k == level_totals[k-1].

        Integer when the nest is rectangular, an exact Fraction otherwise.
        """
        out = []
        prev = 1
        for tot in self.level_totals:
            if prev == 0:
                out.append(0)
            else:
                q = Fraction(tot, prev)
                out.append(int(q) if q.denominator == 1 else q)
            prev = tot
        return tuple(out)

    @property
    def distinct_elements(self) -> int:
        return len(self.addresses)


@dataclass
class ExecutionProfile:
    records: list[NestRecord]
    total_cost: int
    result: Optional[int] = None

    def for_nest(self, nest_id: str) -> list[NestRecord]:
        return [r for r in self.records if r.nest_id == nest_id]

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_profile_csv(self.records, buf)
        return buf.getvalue()


PROFILE_COLUMNS = ["nest_id", "invocation", "start", "elapsed", "level_totals",
                   "trips", "entry_values", "footprint_bytes", "distinct_elements", "exit"]


def write_profile_csv(records, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PROFILE_COLUMNS)
    for r in records:
        w.writerow([
            r.nest_id, r.invocation, r.start, r.elapsed,
            ";".join(str(x) for x in r.level_totals),
            ";".join(str(x) for x in r.trips),
            ";".join(f"{k}={v}" for k, v in sorted(r.entry_values.items())),
            r.footprint_bytes, r.distinct_elements, r.exit,
        ])


@dataclass
class ProfileRow:
    """A profile CSV row as read back for training."""

    nest_id: str
    level_totals: tuple[int, ...]
    elapsed: int
    entry_values: dict[str, int]
    footprint_bytes: int

    @property
    def trips(self) -> tuple:
        return NestRecord(self.nest_id, 0, 0, self.elapsed, self.level_totals,
                          self.entry_values, frozenset(), self.footprint_bytes).trips


def read_profile_csv(fh) -> list[ProfileRow]:
    rows = []
    reader = csv.DictReader(fh)
    missing = set(PROFILE_COLUMNS) - set(reader.fieldnames or [])
    if missing:
        raise ValueError(f"profile CSV lacks columns: {sorted(missing)}")
    for rec in reader:
        totals = tuple(int(x) for x in rec["level_totals"].split(";") if x != "")
        vals = {}
        for item in rec["entry_values"].split(";"):
            if item:
                k, v = item.split("=")
                vals[k] = int(v)
        rows.append(ProfileRow(rec["nest_id"], totals, int(rec["elapsed"]), vals,
                               int(rec["footprint_bytes"])))
    return rows


class BeaconHooks(Protocol):
    def beacon(self, beacon_id: str, env: dict[str, int], t: int) -> None: ...

    def complete(self, beacon_id: str, t: int, exit: str, footprint_bytes: int) -> None: ...


@dataclass
class Instrumentation:
    """Active beacon points for an instrumented run.

    ``nest_beacons`` maps a nest id to the beacon fired at its entry;
    ``call_beacons`` maps a call-site id (see :func:`call_sites`) to the
    beacons hoisted above it.
    """

    nest_beacons: dict[str, str] = field(default_factory=dict)
    call_beacons: dict[str, list[str]] = field(default_factory=dict)


def call_sites(f: Function) -> list[tuple[str, str, Stmt]]:
    """(site id, callee, statement) for every call in ``f``, in pre-order."""
    out = []
    k = 0
    for s in iter_stmts(f.body):
        if isinstance(s, Call):
            out.append((f"{f.name}@{k}", s.func, s))
            k += 1
        exprs = []
        if isinstance(s, Call):
            exprs = list(s.args)
        else:
            from .nodes import stmt_exprs
            exprs = stmt_exprs(s)
        for e in exprs:
            for n in walk_expr(e):
                if isinstance(n, CallRef):
                    out.append((f"{f.name}@{k}", n.func, s))
                    k += 1
    return out


# ----------------------------------------------------------------------------
# Runtime
# ----------------------------------------------------------------------------


class _Runtime:
    def __init__(self, program: Program, inputs: Mapping[str, Any], cap: int,
                 externals: Mapping[str, Callable[..., int]], hooks: Optional[BeaconHooks]):
        self.program = program
        self.budget = cap
        self.cap = cap
        self.mem: dict[tuple, int] = {}
        self.records: list[NestRecord] = []
        self.invocations: dict[str, int] = {}
        self.stack: list[set] = [set()]
        self.externals = dict(externals)
        self.inputs = inputs
        self.hooks = hooks
        self.elsize = {a.name: a.elsize for a in program.arrays}
        self._entries: list[tuple] = []
        self._beacon_stack: list[tuple[str, int]] = []

    @property
    def cur(self) -> set:
        return self.stack[-1]

    def push(self) -> set:
        s: set = set()
        self.stack.append(s)
        return s

    def pop(self) -> set:
        s = self.stack.pop()
        self.stack[-1] |= s
        return s

    def footprint(self, addrs) -> int:
        return sum(self.elsize.get(a[0], 8) for a in addrs)

    def nest_enter(self, nest_id: str, env: dict, t: int) -> set:
        s = self.push()
        self._entries.append((nest_id, t, env))
        return s

    def nest_exit(self, nest_id: str, t: int, totals: tuple, exit_id: str) -> set:
        nid, start, env = self._entries.pop()
        assert nid == nest_id
        addrs = self.pop()
        k = self.invocations.get(nest_id, 0)
        self.invocations[nest_id] = k + 1
        self.records.append(NestRecord(
            nest_id, k, start, t - start, totals, env, frozenset(addrs),
            self.footprint(addrs), exit_id,
        ))
        return self.cur

    def beacon(self, bid: str, env: dict, t: int) -> set:
        if self.hooks is not None:
            self.hooks.beacon(bid, env, t)
        self._beacon_stack.append((bid, t))
        return self.push()

    def complete(self, bid: str, t: int, exit_id: str = "fallthrough") -> set:
        b, _ = self._beacon_stack.pop()
        assert b == bid
        addrs = self.pop()
        if self.hooks is not None:
            self.hooks.complete(bid, t, exit_id, self.footprint(addrs))
        return self.cur

    def extern(self, name: str, args: tuple) -> int:
        fn = self.externals.get(name)
        if fn is not None:
            return int(fn(*args))
        if name in self.inputs and isinstance(self.inputs[name], int):
            return int(self.inputs[name])
        raise IRRuntimeError(f"no implementation bound for external {name!r}")

    def runaway(self, label: str) -> None:
        raise RunawayLoopError(
            f"iteration cap of {self.cap} exceeded in loop {label!r}")


# ----------------------------------------------------------------------------
# Code generation
# ----------------------------------------------------------------------------


def _py(name: str) -> str:
    return "v_" + name


class _FuncGen:
    def __init__(self, program: Program, f: Function, cost: CostModel,
                 instr: Instrumentation):
        self.program = program
        self.f = f
        self.cost = cost
        self.instr = instr
        self.lines: list[str] = []
        self.tmp = 0
        self.nest_of: dict[str, LoopNest] = {n.root.label: n for n in f.nests()}
        self.user_funcs = {g.name for g in program.functions}
        self.site_counter = 0
        self.in_loop = False
        self.inductions: set[str] = {l.var for l in f.loops if l.var}
        # call-site numbering must match call_sites(): statement order, then expr order
        self.sites = call_sites(f)

    def fresh(self, prefix: str = "x") -> str:
        self.tmp += 1
        return f"_{prefix}{self.tmp}"

    def emit(self, depth: int, line: str) -> None:
        self.lines.append("    " * depth + line)

    def next_site(self) -> str:
        sid = f"{self.f.name}@{self.site_counter}"
        self.site_counter += 1
        return sid

    # -- expressions -------------------------------------------------------

    def expr(self, e: Expr, depth: int, pre_sites: list[str]) -> str:
        if isinstance(e, Num):
            return f"({e.value})"
        if isinstance(e, Var):
            return _py(e.name)
        if isinstance(e, UnOp):
            inner = self.expr(e.operand, depth, pre_sites)
            return f"(-{inner})" if e.op == "-" else f"int(not {inner})"
        if isinstance(e, BinOp):
            l = self.expr(e.left, depth, pre_sites)
            r = self.expr(e.right, depth, pre_sites)
            if e.op == "/":
                return f"({l} // {r})"
            if e.op in ("+", "-", "*", "%"):
                return f"({l} {e.op} {r})"
            if e.op == "&&":
                return f"int(bool({l}) and bool({r}))"
            if e.op == "||":
                return f"int(bool({l}) or bool({r}))"
            return f"int({l} {e.op} {r})"
        if isinstance(e, LoadRef):
            idx = [self.expr(i, depth, pre_sites) for i in e.index]
            k = self.fresh("k")
            v = self.fresh("v")
            self.emit(depth, f"{k} = ({e.array!r}, {', '.join(idx)})")
            self.emit(depth, f"S.add({k})")
            self.emit(depth, f"{v} = mem.get({k}, 0)")
            return v
        if isinstance(e, CallRef):
            sid = self.next_site()
            args = [self.expr(a, depth, pre_sites) for a in e.args]
            pre_sites.append(sid)
            v = self.fresh("r")
            bids = self.site_beacons(sid)
            self.open_call_beacons(bids, e.func, args, depth)
            if e.func in self.user_funcs:
                self.emit(depth, f"{v}, t = F_{e.func}(rt, t + {self.cost.call}{''.join(', ' + a for a in args)})")
                self.emit(depth, f"if {v} is None: rt.no_value({e.func!r})")
            else:
                self.emit(depth, f"{v} = rt.extern({e.func!r}, ({''.join(a + ', ' for a in args)}))")
                self.emit(depth, f"t += {self.cost.call}")
            self.close_call_beacons(bids, depth)
            return v
        raise TypeError(e)

    # -- statements --------------------------------------------------------

    def body(self, stmts, depth: int, ctx: dict) -> None:
        if not stmts:
            self.emit(depth, "pass")
        for s in stmts:
            self.stmt(s, depth, ctx)

    def site_beacons(self, sid: str) -> list[str]:
        return [] if self.in_loop else self.instr.call_beacons.get(sid, [])

    def open_call_beacons(self, bids: list[str], func: str, args: list[str], depth: int) -> None:
        if not bids:
            return
        params = self.program.function(func).params if func in self.user_funcs else ()
        env = "{" + ", ".join(f"{p!r}: {a}" for p, a in zip(params, args)) + "}"
        for bid in bids:
            self.emit(depth, f"S = rt.beacon({bid!r}, {env}, t)")

    def close_call_beacons(self, bids: list[str], depth: int) -> None:
        for bid in reversed(bids):
            self.emit(depth, f"S = rt.complete({bid!r}, t)")

    def stmt(self, s: Stmt, depth: int, ctx: dict) -> None:
        self.in_loop = bool(ctx["loops"])
        if isinstance(s, Loop):
            if not ctx["loops"] and s.label in self.nest_of:
                self.nest(s, depth, ctx)
            else:
                self.loop(s, depth, ctx)
            return
        if isinstance(s, Assign):
            v = self.expr(s.expr, depth, [])
            self.emit(depth, f"{_py(s.var)} = {v}")
            self.emit(depth, f"t += {self.cost.assign}")
            return
        if isinstance(s, MemAccess):
            idx = [self.expr(i, depth, []) for i in s.index]
            val = self.expr(s.value, depth, []) if s.value is not None else None
            k = self.fresh("k")
            self.emit(depth, f"{k} = ({s.array!r}, {', '.join(idx)})")
            self.emit(depth, f"S.add({k})")
            if s.mode == "read" and s.dest:
                self.emit(depth, f"{_py(s.dest)} = mem.get({k}, 0)")
            elif s.mode == "write" and val is not None:
                self.emit(depth, f"mem[{k}] = {val}")
            self.emit(depth, f"t += {self.cost.mem}")
            return
        if isinstance(s, Call):
            sid = self.next_site()
            args = [self.expr(a, depth, []) for a in s.args]
            bids = self.site_beacons(sid)
            self.open_call_beacons(bids, s.func, args, depth)
            if s.func in self.user_funcs:
                self.emit(depth, f"_, t = F_{s.func}(rt, t + {self.cost.call}{''.join(', ' + a for a in args)})")
            else:
                self.emit(depth, f"rt.extern({s.func!r}, ({''.join(a + ', ' for a in args)}))")
                self.emit(depth, f"t += {self.cost.call}")
            self.close_call_beacons(bids, depth)
            return
        if isinstance(s, ExitBranch):
            c = self.expr(s.cond, depth, [])
            self.emit(depth, f"t += {self.cost.exit}")
            self.emit(depth, f"if {c}:")
            nest_exits = ctx["nest_exits"]
            self.emit(depth + 1, f"_exit = {nest_exits.get(id(s), 'fallthrough')!r}")
            if s.target == ctx["loops"][-1]:
                self.emit(depth + 1, "break")
            else:
                self.emit(depth + 1, f"{ctx['flags'][s.target]} = True")
                self.emit(depth + 1, "break")
            return
        if isinstance(s, Nop):
            self.emit(depth, f"t += {s.cost}")
            return
        if isinstance(s, Return):
            v = self.expr(s.value, depth, []) if s.value is not None else "None"
            self.emit(depth, f"return ({v}, t + {self.cost.ret})")
            return
        raise TypeError(s)

    def env_expr(self) -> str:
        skip = tuple(sorted(_py(v) for v in self.inductions))
        return f"_env(locals(), {skip!r})"

    def nest(self, root: Loop, depth: int, ctx: dict) -> None:
        nest = self.nest_of[root.label]
        nid = nest.id
        levels = nest.levels
        bid = self.instr.nest_beacons.get(nid)
        if bid is not None:
            self.emit(depth, f"S = rt.beacon({bid!r}, {self.env_expr()}, t)")
        self.emit(depth, f"S = rt.nest_enter({nid!r}, {self.env_expr()}, t)")
        for lp in nest.loops:
            self.emit(depth, f"_tot_{lp.label} = 0")
        self.emit(depth, "_exit = 'fallthrough'")
        exits = {}
        for k, ex in enumerate(nest.exits):
            exits[id(ex)] = "return" if ex.target == RETURN_TARGET else f"exit{k}"
        flags = {lab.label: f"_brk_{lab.label}" for lab in nest.loops}
        flags[RETURN_TARGET] = "_brk_return"
        self.emit(depth, "_brk_return = False")
        inner_ctx = dict(ctx, nest_exits=exits, flags=flags)
        self.loop(root, depth, inner_ctx)
        totals = ", ".join("+".join(f"_tot_{l.label}" for l in lv) for lv in levels)
        self.emit(depth, f"S = rt.nest_exit({nid!r}, t, ({totals},), _exit)")
        if bid is not None:
            self.emit(depth, f"S = rt.complete({bid!r}, t, _exit)")
        self.emit(depth, "if _brk_return:")
        self.emit(depth + 1, f"return (None, t)")

    def loop(self, s: Loop, depth: int, ctx: dict) -> None:
        lab = s.label
        flag = ctx["flags"][lab]
        self.emit(depth, f"{flag} = False")
        inner_ctx = dict(ctx, loops=ctx["loops"] + [lab])
        if s.kind == "while":
            self.emit(depth, "while True:")
            c = self.expr(s.cond, depth + 1, [])
            self.emit(depth + 1, f"if not {c}: break")
            self.emit(depth + 1, "rt.budget -= 1")
            self.emit(depth + 1, f"if rt.budget < 0: rt.runaway({lab!r})")
            self.emit(depth + 1, f"_tot_{lab} += 1")
            if self.cost.loop_iter:
                self.emit(depth + 1, f"t += {self.cost.loop_iter}")
            self.body(s.body, depth + 1, inner_ctx)
        else:
            lo = self.expr(s.lower, depth, [])
            hi = self.expr(s.upper, depth, [])
            st = self.expr(s.step, depth, [])
            R = self.fresh("R")
            n = self.fresh("n")
            b0 = self.fresh("b")
            self.emit(depth, f"if {st} == 0:")
            self.emit(depth + 1, f"if {lo} < {hi}: rt.runaway({lab!r})")
            self.emit(depth + 1, f"{R} = ()")
            self.emit(depth, "else:")
            self.emit(depth + 1, f"{R} = range({lo}, {hi}, {st})")
            self.emit(depth, f"{n} = len({R})")
            self.emit(depth, f"rt.budget -= {n}")
            self.emit(depth, f"if rt.budget < 0: rt.runaway({lab!r})")
            self.emit(depth, f"{b0} = _tot_{lab}")
            self.emit(depth, f"for {_py(s.var)} in {R}:")
            self.emit(depth + 1, f"_tot_{lab} += 1")
            if self.cost.loop_iter:
                self.emit(depth + 1, f"t += {self.cost.loop_iter}")
            self.body(s.body, depth + 1, inner_ctx)
            self.emit(depth, f"rt.budget += {n} - (_tot_{lab} - {b0})")
        # propagate multi-level breaks to enclosing loops
        outer = [l for l in ctx["loops"]] + [RETURN_TARGET]
        for target in outer:
            if target in ctx["flags"] and (target == RETURN_TARGET or target in ctx["loops"]):
                tflag = ctx["flags"][target]
                if ctx["loops"]:
                    self.emit(depth, f"if {tflag}: break")

    def generate(self) -> str:
        params = "".join(", " + _py(p) for p in self.f.params)
        self.emit(0, f"def F_{self.f.name}(rt, t{params}):")
        self.emit(1, "S = rt.cur")
        self.emit(1, "mem = rt.mem")
        ctx = {"loops": [], "flags": {}, "nest_exits": {}}
        self.body(self.f.body, 1, ctx)
        self.emit(1, "return (None, t)")
        return "\n".join(self.lines)


def _env(loc: dict, skip: tuple) -> dict:
    return {k[2:]: v for k, v in loc.items() if k.startswith("v_") and k not in skip}


@dataclass
class CompiledProgram:
    program: Program
    source: str
    namespace: dict


def compile_program(program: Program, cost: CostModel = CostModel(),
                    instrumentation: Optional[Instrumentation] = None) -> CompiledProgram:
    instr = instrumentation or Instrumentation()
    chunks = []
    for f in program.functions:
        chunks.append(_FuncGen(program, f, cost, instr).generate())
    source = "\n\n".join(chunks) + "\n"
    ns: dict = {"_env": _env}
    exec(compile(source, "<bir>", "exec"), ns)
    return CompiledProgram(program, source, ns)


def interpret(
    program: Program,
    inputs: Mapping[str, Any],
    cost: CostModel = CostModel(),
    *,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
    externals: Optional[Mapping[str, Callable[..., int]]] = None,
    instrumentation: Optional[Instrumentation] = None,
    hooks: Optional[BeaconHooks] = None,
    compiled: Optional[CompiledProgram] = None,
) -> ExecutionProfile:
    """Run ``program.entry`` on ``inputs`` and return its profile.

    ``inputs`` binds every entry parameter to an int; any other key naming
    an array (list or nested list) initializes that array's contents.
    Deterministic for identical arguments.
    """
    entry = program.function(program.entry)
    missing = [p for p in entry.params if p not in inputs]
    if missing:
        raise UnboundInputError(f"unbound input(s) for {entry.name!r}: {', '.join(missing)}")
    if compiled is None:
        compiled = compile_program(program, cost, instrumentation)
    rt = _Runtime(program, inputs, iteration_cap, externals or {}, hooks)
    rt.no_value = _no_value  # type: ignore[attr-defined]
    for name, val in inputs.items():
        if isinstance(val, (list, tuple)):
            _load_array(rt.mem, name, val, ())
    fn = compiled.namespace[f"F_{entry.name}"]
    args = [int(inputs[p]) for p in entry.params]
    try:
        result, t = fn(rt, 0, *args)
    except ZeroDivisionError as exc:
        raise IRRuntimeError("division by zero") from exc
    except (NameError, UnboundLocalError) as exc:
        raise IRRuntimeError(f"variable read before assignment: {exc}") from exc
    return ExecutionProfile(rt.records, t, result)


def _no_value(func: str) -> None:
    raise IRRuntimeError(f"function {func!r} returned no value")


def _load_array(mem: dict, name: str, val, prefix: tuple) -> None:
    for i, x in enumerate(val):
        if isinstance(x, (list, tuple)):
            _load_array(mem, name, x, prefix + (i,))
        else:
            mem[(name,) + prefix + (i,)] = int(x)
