import pytest

from beacons.ir import (
    CostModel,
    IRRuntimeError,
    RunawayLoopError,
    UnboundInputError,
    interpret,
    parse_program,
)

from conftest import norm


def test_listing1_trips_and_distinct_d(listing1):
    prof = interpret(listing1, {"N": 4})
    (rec,) = prof.records
    assert rec.trips == (5,)
    d = {a for a in rec.addresses if a[0] == "D"}
    assert len(d) == 8


def test_zero_trip_touches_nothing():
    p = norm("func f(n){ L: for i in 0..n { load A[i]; } }")
    (rec,) = interpret(p, {"n": 0}).records
    assert rec.addresses == frozenset()
    assert rec.level_totals == (0,)


def test_nest_cost_counts_memory_ops():
    p = norm("func f(){ L: for i in 0..3 { M: for j in 0..4 { nop 1; } } }")
    (rec,) = interpret(p, {}).records
    assert rec.elapsed == 12
    assert rec.trips == (3, 4)


def test_cost_model_scales():
    p = norm("func f(n){ L: for i in 0..n { load A[i]; } }")
    cheap = interpret(p, {"n": 10}, CostModel(mem=1)).records[0].elapsed
    dear = interpret(p, {"n": 10}, CostModel(mem=3)).records[0].elapsed
    assert (cheap, dear) == (10, 30)


def test_unbound_input():
    p = norm("func f(n){ nop 1; }")
    with pytest.raises(UnboundInputError):
        interpret(p, {})


def test_runaway_while():
    p = parse_program("func f(n){ w: while n > 0 { n = n + 1; } }")
    with pytest.raises(RunawayLoopError):
        interpret(p, {"n": 1}, iteration_cap=1000)


def test_division_by_zero():
    p = parse_program("func f(n){ x = 1 / n; return x; }")
    with pytest.raises(IRRuntimeError):
        interpret(p, {"n": 0})


def test_early_exit_records_exit():
    p = norm("func f(n){ L: for i in 0..n { break-if i == 3 -> L; load A[i]; } }")
    (rec,) = interpret(p, {"n": 10}).records
    assert rec.level_totals[0] <= 4
    assert {a[1] for a in rec.addresses} == {0, 1, 2}


def test_deterministic():
    p = norm("func f(n){ L: for i in 0..n { M: for j in 0..i { store A[i*j]; } } }")
    a = interpret(p, {"n": 30})
    b = interpret(p, {"n": 30})
    assert a.to_csv() == b.to_csv()
    assert a.total_cost == b.total_cost
