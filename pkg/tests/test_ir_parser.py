import pytest

from beacons.ir import (
    IRSemanticError,
    IRSyntaxError,
    MemAccess,
    is_numeric_closed,
    iter_stmts,
    parse_program,
    pretty_print,
)

from conftest import LISTING1


def test_minimal_function_parses():
    p = parse_program("func f(n){ for i in 0..n { load A[i]; } }")
    assert p.entry == "f"
    f = p.function("f")
    assert f.params == ("n",)
    (loop,) = f.loops
    assert loop.var == "i"
    (s,) = loop.body
    assert isinstance(s, MemAccess) and s.mode == "read" and s.array == "A"


def test_listing1_has_three_accesses():
    p = parse_program(LISTING1)
    mems = [s for s in iter_stmts(p.function("main").body) if isinstance(s, MemAccess)]
    assert len(mems) == 3
    assert [m.mode for m in mems] == ["read", "write", "write"]


def test_call_bound_is_not_numeric_closed():
    p = parse_program("func g(x){ return x; } func main(n){ for i in 0..g(n) { nop 1; } }")
    loop = p.function("main").loops[0]
    assert not is_numeric_closed(loop.upper)
    assert is_numeric_closed(loop.lower)


def test_round_trip_is_stable():
    text = """
    array A elsize 4;
    extern h(a) pure;
    func main(n, m) {
      x = n * 2 + 1;
      O: for i in 0..n {
        load y = A[i];
        I: for j in 1..m step 2 {
          store A[j] = y - 1;
          break-if j > x -> O;
        }
        call h(i);
      }
      w: while x > 0 {
        x = x - 1;
      }
      return x;
    }
    entry main;
    """
    p = parse_program(text)
    out = pretty_print(p)
    assert pretty_print(parse_program(out)) == out
    assert parse_program(out) == p


@pytest.mark.parametrize("text", [
    "func f(n) { for i in 0..n { load A[i] } }",
    "func f(n) { for i in 0.. { } }",
    "func f(n) { x = ; }",
    "func (n) { }",
])
def test_syntax_errors(text):
    with pytest.raises(IRSyntaxError):
        parse_program(text)


@pytest.mark.parametrize("text", [
    "func f(n) { for i in 0..n { return 1; } }",
    "func f(n) { L: for i in 0..n { break-if i > 2 -> Nowhere; } }",
    "func f(n) { call missing(n); }",
])
def test_semantic_errors(text):
    with pytest.raises(IRSemanticError):
        parse_program(text)


def test_comments_and_precedence():
    p = parse_program("func f(a,b){ x = a + b * 2 # trailing\n; return x; }")
    assert "a + b * 2" in pretty_print(p)
