import pytest

from beacons.ir import normalize_loops, parse_program

LISTING1 = """
func main(N) {
  L: for i in 0..N+1 {
    load A[i+3];
    store D[2*i];
    store D[3*i];
  }
}
"""

# nest 1 carries reuse of A across an inner loop and of B across outer
# iterations; nest 2 only reuses D at a small constant distance.
FIG4_NEST1 = """
func main(n, m) {
  L: for i in 0..n {
    load A[i+3];
    M: for j in 0..m {
      load B[j];
    }
    store A[i];
  }
}
"""

FIG4_NEST2 = """
func main(n) {
  L: for i in 0..n {
    load D[i];
    load D[i+1];
    store D[i+2];
  }
}
"""


def norm(text: str):
    return normalize_loops(parse_program(text))


@pytest.fixture
def listing1():
    return norm(LISTING1)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 9):
        if n in results:
            ok, detail = results[n]
            terminalreporter.write_line(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        else:
            terminalreporter.write_line(f"ACCEPTANCE {n}: NOT RUN")
