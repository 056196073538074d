from beacons.ir import Num, flagged_loops, interpret, normalize_loops, parse_program, pretty_print


def _loop(p):
    return p.functions[0].loops[0]


def test_stepped_range_becomes_zero_based():
    p = normalize_loops(parse_program("func main(){ L: for i in 2..10 step 2 { load A[i]; } }"))
    l = _loop(p)
    assert (l.lower, l.upper, l.step) == (Num(0), Num(4), Num(1))


def test_normalization_is_idempotent():
    p = normalize_loops(parse_program(
        "func main(n){ L: for i in 3..n step 3 { M: for j in n..0 step -2 { load A[i][j]; } } }"))
    assert normalize_loops(p) == p


def test_runtime_step_is_flagged():
    p = normalize_loops(parse_program("func main(n, s){ L: for i in 0..n step s { nop 1; } }"))
    assert _loop(p).flagged
    assert flagged_loops(p) == [("main", "L")]


def test_addresses_preserved():
    src = ("func main(n){ L: for i in 5..n step 3 { load A[i]; "
           "M: for j in n..1 step -2 { store B[i+j]; } } }")
    raw = parse_program(src)
    new = normalize_loops(raw)
    for n in (0, 1, 7, 20):
        a = interpret(raw, {"n": n}).records
        b = interpret(new, {"n": n}).records
        assert [r.addresses for r in a] == [r.addresses for r in b]
        assert [r.level_totals for r in a] == [r.level_totals for r in b]


def test_printer_shows_normalized_header():
    p = normalize_loops(parse_program("func main(){ L: for i in 2..10 step 2 { nop 1; } }"))
    assert "for i in 0..4" in pretty_print(p)
