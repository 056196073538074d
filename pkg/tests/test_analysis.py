import pytest

from beacons.analysis import OPAQUE, LoopClass, analyze_program, analysis_report
from beacons.ir import Assign, expr_vars, iter_stmts

from conftest import norm


def _one(src):
    (a,) = analyze_program(norm(src))
    return a


def test_plain_for_is_nbne():
    a = _one("func f(n){ L: for i in 0..n { load A[i]; } }")
    assert a.klass is LoopClass.NBNE
    assert a.critical.all() == []


def test_break_if_makes_multi_exit():
    a = _one("func f(n, t){ L: for i in 0..n { break-if i > t -> L; } }")
    assert a.klass is LoopClass.NBME
    assert set(a.critical.critical_predicates) == {"i", "t"}
    assert not a.critical.critical_bounds


def test_call_bound_is_irregular():
    a = _one("func g(x){ return x; } func f(n){ L: for i in 0..g(n) { nop 1; } }")
    assert a.klass is LoopClass.IBNE
    assert a.critical.critical_bounds


def test_nest_joins_member_classes():
    a = _one("func f(n, t){ L: for i in 0..n { M: for j in 0..n { break-if j > t -> L; } } }")
    assert a.klass is LoopClass.NBME


def test_bound_mutated_in_loop_is_irregular():
    a = _one("func f(n){ L: for i in 0..n { n = n - 1; } }")
    assert a.klass.irregular_bounds


def test_backslice_out_of_loop_variable():
    a = _one("func f(x, n){ L: for i in 0..n { break-if x > 5 -> L; } }")
    assert a.params.params == ("x",)


def test_backslice_expands_in_loop_definitions():
    src = "func f(y, w, n){ L: for i in 0..n { z = w; x = y + z; break-if x > 5 -> L; } }"
    a = _one(src)
    assert a.params.params == ("y", "w")
    assert a.params.params == tuple(_recursive_slice(src, ["x"]))


def test_backslice_extern_is_opaque():
    a = _one("extern e(); func f(n){ L: for i in 0..n { x = e(); break-if x > 5 -> L; } }")
    assert a.params.params == (OPAQUE,)
    assert a.params.opaque


def test_report_is_json_lines():
    res = analyze_program(norm("func f(n){ L: for i in 0..n { nop 1; } M: for j in 0..n { nop 1; } }"))
    lines = analysis_report(res).splitlines()
    assert len(lines) == 2 and all(l.startswith("{") for l in lines)


def _recursive_slice(src, roots):
    """Independent slicer: recursive descent over in-loop assignments."""
    p = norm(src)
    f = p.functions[0]
    loop = f.loops[0]
    inside = {s.var: s.expr for s in iter_stmts(loop.body) if isinstance(s, Assign)}
    out: list[str] = []

    def go(v, seen):
        if v in seen:
            return
        seen.add(v)
        if v in inside:
            for u in expr_vars(inside[v]):
                go(u, seen)
        elif v not in out:
            out.append(v)

    for r in roots:
        go(r, set())
    order = list(f.params)
    return sorted(out, key=order.index)
