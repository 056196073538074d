"""Property-based checks over randomly generated programs and workloads."""

import itertools

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from beacons import _kernels_py, kernels
from beacons.footprint import classify_reuse, nest_footprint
from beacons.instrument import filter_beacons, place_beacons
from beacons.ir import interpret, normalize_loops, parse_program, pretty_print
from beacons.pipeline import profile, train
from beacons.schedulers import BesScheduler, FifoScheduler
from beacons.sim import (
    MB,
    NCP,
    REUSE,
    STREAM,
    BeaconInfo,
    MachineConfig,
    Phase,
    SimProcess,
    simulate,
)

SETTINGS = settings(max_examples=60, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])

# programs ---------------------------------------------------------------------

coef = st.integers(-3, 4)
const = st.integers(-5, 9)


@st.composite
def affine_index(draw, ivars):
    terms = [(v, draw(coef)) for v in ivars if draw(st.booleans())]
    parts = [f"{c}*{v}" for v, c in terms if c] + [str(draw(const))]
    return " + ".join(parts)


@st.composite
def loop_program(draw):
    depth = draw(st.integers(1, 2))
    ivars = ["i", "j"][:depth]
    accesses = []
    for _ in range(draw(st.integers(1, 4))):
        arr = draw(st.sampled_from(["A", "B"]))
        mode = draw(st.sampled_from(["load", "store"]))
        accesses.append(f"{mode} {arr}[{draw(affine_index(ivars))}];")
    body = " ".join(accesses)
    lo = draw(st.integers(0, 3))
    step = draw(st.sampled_from([1, 2, 3]))
    inner = f"M: for j in 0..m {{ {body} }}" if depth == 2 else body
    return f"func main(n, m) {{ L: for i in {lo}..n step {step} {{ {inner} }} }}"


@SETTINGS
@given(loop_program())
def test_print_parse_round_trip(src):
    p = parse_program(src)
    assert parse_program(pretty_print(p)) == p


@SETTINGS
@given(loop_program(), st.integers(0, 12), st.integers(0, 6))
def test_normalization_preserves_addresses(src, n, m):
    raw = parse_program(src)
    a = interpret(raw, {"n": n, "m": m}).records
    b = interpret(normalize_loops(raw), {"n": n, "m": m}).records
    assert [r.addresses for r in a] == [r.addresses for r in b]


@SETTINGS
@given(loop_program(), st.integers(0, 25), st.integers(0, 8))
def test_footprint_exact_on_affine(src, n, m):
    p = normalize_loops(parse_program(src))
    (nest,) = p.nests()
    fp = nest_footprint(nest, p)
    (rec,) = interpret(p, {"n": n, "m": m}).records
    assert fp.evaluate({"n": n, "m": m}).total_elements == rec.distinct_elements


@SETTINGS
@given(st.lists(st.tuples(st.sampled_from(["A", "B"]), st.integers(-2, 3), st.integers(-4, 12)),
                min_size=1, max_size=4), st.randoms(use_true_random=False))
def test_reuse_class_invariant_under_reorder(refs, rnd):
    stmts = [f"load {a}[{c}*i + {k}];" for a, c, k in refs]
    perm = list(stmts)
    rnd.shuffle(perm)

    def klass(body):
        p = normalize_loops(parse_program(f"func main(n){{ L: for i in 0..n {{ {' '.join(body)} }} }}"))
        return classify_reuse(p.nests()[0], p).klass

    assert klass(stmts) == klass(perm)


# instrumentation ---------------------------------------------------------------

_FILTER_SRC = ("func main(n){ L: for i in 0..n { load A[i]; } "
               "M: for j in 0..n { load B[j]; nop 20; } "
               "K: for k in 0..n { store C[3*k]; nop 5; } }")
_FILTER_ART = None


def _filter_art():
    global _FILTER_ART
    if _FILTER_ART is None:
        p = normalize_loops(parse_program(_FILTER_SRC))
        _FILTER_ART = train(p, profile(p, [{"n": k} for k in (1000, 3000, 5000)]))
    return _FILTER_ART


@SETTINGS
@given(st.floats(0, 2e5), st.floats(0, 2e5), st.floats(0, 2e5), st.floats(0, 2e5))
def test_filter_monotone(f1, f2, t1, t2):
    art = _filter_art()
    ip = place_beacons(art)
    lo_f, hi_f = sorted((f1, f2))
    lo_t, hi_t = sorted((t1, t2))
    assert len(filter_beacons(ip, art, hi_f, lo_t).active) <= len(filter_beacons(ip, art, lo_f, lo_t).active)
    assert len(filter_beacons(ip, art, lo_f, hi_t).active) <= len(filter_beacons(ip, art, lo_f, lo_t).active)


# simulation --------------------------------------------------------------------

@st.composite
def phase(draw, scale=1.0):
    kind = draw(st.sampled_from([NCP, REUSE, STREAM]))
    work = draw(st.integers(1, 40)) * 100
    if kind == NCP:
        return Phase(NCP, work)
    if kind == REUSE:
        fp = draw(st.integers(1, 40)) * MB * scale
    else:
        fp = draw(st.integers(1, 60)) * 1e6 * scale
    return Phase(kind, work, fp, BeaconInfo(kind[0], work, fp, kind))


def _processes(phases_per_proc):
    return [SimProcess(i, tuple(ph)) for i, ph in enumerate(phases_per_proc)]


@SETTINGS
@given(st.lists(st.lists(phase(), min_size=1, max_size=3), min_size=1, max_size=6),
       st.integers(1, 4))
def test_simulation_deterministic(phs, cores):
    procs = _processes(phs)
    m = MachineConfig(cores=cores)
    a = simulate(procs, BesScheduler(), m).trace.to_csv_text()
    b = simulate(procs, BesScheduler(), m).trace.to_csv_text()
    assert a == b


@SETTINGS
@given(st.lists(phase(), min_size=1, max_size=5), phase())
def test_contention_monotone_single_phase(phs, extra):
    # every process co-runs from t=0, so the schedule itself is fixed
    procs = _processes([[p] for p in phs])
    m = MachineConfig(cores=len(procs) + 1)
    before = simulate(procs, FifoScheduler(), m).completion
    after = simulate(procs + [SimProcess(len(procs), (extra,))], FifoScheduler(), m).completion
    assert all(after[p] >= before[p] for p in before)


def _decisions(trace):
    keep = ("dispatch", "resume", "suspend", "hold", "unhold", "admit", "release", "mode",
            "finish", "oversize")
    out = []
    for e in trace.events:
        if e.kind in keep:
            d = {k: v for k, v in e.detail.items() if k in ("reason", "to", "trigger", "kind")}
            out.append((e.time, e.pid, e.kind, tuple(sorted(d.items()))))
    return out


@SETTINGS
@given(st.lists(st.lists(phase(), min_size=1, max_size=3), min_size=1, max_size=6),
       st.integers(1, 4), st.integers(-3, 3))
def test_bes_decisions_scale_invariant(phs, cores, k):
    s = 2.0 ** k
    procs = _processes(phs)
    scaled = [SimProcess(p.pid, tuple(
        Phase(ph.kind, ph.work, ph.footprint * s,
              None if ph.beacon is None else BeaconInfo(ph.beacon.beacon_id, ph.beacon.time,
                                                        ph.beacon.footprint * s, ph.beacon.reuse))
        for ph in p.phases)) for p in procs]
    m1 = MachineConfig(cores=cores)
    m2 = MachineConfig(cores=cores, llc_bytes=int(m1.llc_bytes * s),
                       mem_bandwidth=m1.mem_bandwidth * s)
    a = simulate(procs, BesScheduler(), m1).trace
    b = simulate(scaled, BesScheduler(), m2).trace
    assert _decisions(a) == _decisions(b)


# kernels -------------------------------------------------------------------------

@SETTINGS
@given(st.lists(st.tuples(st.integers(-30, 30), st.integers(1, 7), st.integers(0, 25)), max_size=6))
def test_ap_union_kernel_parity(aps):
    starts, strides, counts = (list(x) for x in zip(*aps)) if aps else ([], [], [])
    want = len({s + d * i for s, d, c in aps for i in range(c)})
    assert kernels.ap_union_count(starts, strides, counts) == want
    assert _kernels_py.ap_union_count(starts, strides, counts) == want


@SETTINGS
@given(st.lists(st.tuples(st.integers(0, 3), st.floats(0, 5e7), st.floats(0, 1e5)), max_size=12))
def test_contention_kernel_parity(rows):
    kinds = [r[0] for r in rows]
    fps = [r[1] for r in rows]
    mus = [r[2] for r in rows]
    a = list(kernels.contention_rates(kinds, fps, mus, 32 * MB, 16384.0, 0.5))
    b = list(_kernels_py.contention_rates(kinds, fps, mus, 32 * MB, 16384.0, 0.5))
    assert a == b
    assert all(0.0 <= x <= 1.0 for x in a)
