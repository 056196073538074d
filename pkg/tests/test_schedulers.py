import pytest

from beacons.report import reuse_phase_classification
from beacons.schedulers import (
    BesScheduler,
    CfsScheduler,
    FifoScheduler,
    ReactiveScheduler,
    make_scheduler,
)
from beacons.schedulers.base import ceil_fraction
from beacons.sim import (
    BEACON,
    INIT,
    LOOP_COMPLETE,
    MB,
    NCP,
    REUSE,
    STREAM,
    UNKNOWN,
    BeaconInfo,
    BeaconMessage,
    MachineConfig,
    Phase,
    SimProcess,
    check_all,
    simulate,
)


class FakeCtl:
    """Just enough machine for driving scheduler callbacks by hand."""

    def __init__(self, cores=4, **machine):
        self.machine = MachineConfig(cores=cores, **machine)
        self.cores = cores
        self.now = 0
        self.states = {}
        self.held = set()
        self.log = []
        self.prog = {}

    def add(self, pid, state="running"):
        self.states[pid] = state

    def free_cores(self):
        return self.cores - sum(1 for s in self.states.values() if s == "running")

    def running(self):
        return sorted(p for p, s in self.states.items() if s == "running")

    def ready(self):
        return sorted(p for p, s in self.states.items() if s == "ready")

    def n_ready(self):
        return len(self.ready())

    def state(self, pid):
        return self.states[pid]

    def is_held(self, pid):
        return pid in self.held

    def progress(self, pid):
        return self.prog.get(pid, 0.0)

    def run(self, pid):
        assert self.states[pid] == "ready" and self.free_cores() > 0
        self.states[pid] = "running"
        self.log.append(("run", pid))

    def suspend(self, pid, reason=""):
        assert self.states[pid] == "running"
        self.held.discard(pid)
        self.states[pid] = "ready"
        self.log.append(("suspend", pid, reason))

    def hold(self, pid, reason=""):
        self.held.add(pid)
        self.log.append(("hold", pid))

    def unhold(self, pid):
        self.held.remove(pid)
        self.log.append(("unhold", pid))

    def record(self, kind, pid=-1, /, **detail):
        self.log.append((kind, pid, detail))


def beacon(pid, kind, fp, time=10_000, bid="b", precision="known_inferred"):
    return BeaconMessage(pid, BEACON, 0, bid, time, fp, kind, precision)


def complete(pid, bid="b"):
    return BeaconMessage(pid, LOOP_COMPLETE, 0, bid)


def _bes(cores=4, pids=(), **kw):
    ctl = FakeCtl(cores)
    s = BesScheduler(**kw)
    s.attach(ctl)
    for p in pids:
        ctl.add(p)
        s.on_message(BeaconMessage(p, INIT, 0), 0)
    return s, ctl


# BES ------------------------------------------------------------------------

def test_bes_admits_fitting_reuse():
    s, ctl = _bes(pids=(0, 1))
    s.on_message(beacon(0, REUSE, 10 * MB), 0)
    assert s.mode == REUSE and s.cache_used == 10 * MB
    s.on_message(beacon(1, REUSE, 20 * MB), 0)
    assert s.cache_used == 30 * MB
    assert s.admitted[REUSE] == [0, 1]


def test_bes_queues_on_large_overlap():
    s, ctl = _bes(pids=(0, 1))
    s.on_message(beacon(0, REUSE, 10 * MB, time=10_000), 0)
    ctl.now = 6_000
    # pid 0 frees the cache at t=10000: 40% of the incoming 10000-unit loop
    s.on_message(beacon(1, REUSE, 25 * MB, time=10_000), 6_000)
    assert s.reuse_q == [1]
    assert ("suspend", 1, "overlap") in ctl.log
    assert s.cache_used == 10 * MB


def test_bes_holds_on_small_overlap():
    s, ctl = _bes(pids=(0, 1))
    s.on_message(beacon(0, REUSE, 10 * MB, time=10_000), 0)
    ctl.now = 9_500
    s.on_message(beacon(1, REUSE, 25 * MB, time=10_000), 9_500)
    assert s.held == [1] and ctl.is_held(1)
    s.on_complete(complete(0), 9_800)
    assert s.held == [] and s.admitted[REUSE] == [1]
    assert s.cache_used == 25 * MB


def test_bes_stream_in_reuse_mode_is_suspended():
    s, ctl = _bes(pids=(0, 1, 2))
    ctl.add(3, "ready")
    s.on_message(beacon(0, REUSE, 10 * MB), 0)
    s.on_message(beacon(1, STREAM, 1e6), 0)
    assert s.stream_q == [1]
    assert ("suspend", 1, "mode") in ctl.log
    s.settle(0)
    assert ("run", 3) in ctl.log


def test_bes_completion_releases_footprint():
    s, ctl = _bes(pids=(0, 1))
    s.on_message(beacon(0, REUSE, 10 * MB), 0)
    s.on_message(beacon(1, REUSE, 12 * MB), 0)
    s.on_complete(complete(0), 500)
    assert s.cache_used == 12 * MB
    assert 0 not in s.regions


def test_bes_overpredicted_beacon_leaves_no_reservation():
    procs = [SimProcess(0, (Phase(REUSE, 5_000, 8 * MB, BeaconInfo("b", 10_000, 8 * MB, REUSE)),)),
             SimProcess(1, (Phase(NCP, 100), Phase(REUSE, 5_000, 30 * MB,
                                                    BeaconInfo("c", 5_000, 30 * MB, REUSE))))]
    sched = BesScheduler()
    res = simulate(procs, sched, MachineConfig(cores=2))
    assert sched.regions == {} and sched.cache_used == 0
    assert not any(check_all(res.trace).values())


def test_bes_rc_switch():
    s, ctl = _bes(pids=(0, 1))
    s.on_message(beacon(0, REUSE, 10 * MB), 0)
    s.on_message(beacon(1, STREAM, 1e6), 0)
    s.on_complete(complete(0), 100)
    s.settle(100)
    assert s.mode == STREAM
    modes = [e for e in ctl.log if e[0] == "mode"]
    assert modes[-1][2]["trigger"] == "RC"


def test_bes_thresholds_for_60_cores():
    s, _ = _bes(cores=60)
    assert (s.st, s.rt) == (54, 6)
    assert ceil_fraction(0.1, 4) == 1


def test_bes_st_trigger_at_54th_suspension():
    s, ctl = _bes(cores=60, pids=range(60), min_dwell=0)
    s.on_message(beacon(0, REUSE, 1 * MB), 0)
    for p in range(1, 54):
        s.on_message(beacon(p, STREAM, 10.0), 0)
        assert not s._maybe_switch(0)
    s.on_message(beacon(54, STREAM, 10.0), 0)
    assert len(s.stream_q) == 54
    assert s._maybe_switch(0) and s.mode == STREAM


def test_bes_bandwidth_blocks_resume_and_backfills():
    s, ctl = _bes(cores=2, pids=(0, 1))
    ctl.add(2, "ready")
    bw = ctl.machine.mem_bandwidth
    s.on_message(beacon(0, STREAM, 0.8 * bw * 10_000), 0)
    s.on_message(beacon(1, STREAM, 0.5 * bw * 10_000), 0)
    assert s.mode == STREAM and s.stream_q == [1]
    s.settle(0)
    assert ("run", 2) in ctl.log
    assert ctl.state(1) == "ready"


def test_bes_unknown_pid_is_protocol_error():
    s, ctl = _bes(pids=(0,))
    ctl.add(9)
    s.on_message(beacon(9, REUSE, MB), 0)
    s.on_complete(complete(0, "nope"), 0)
    errs = [e for e in ctl.log if e[0] == "protocol_error"]
    assert len(errs) == 2


def test_bes_unknown_precision_is_monitored():
    s, ctl = _bes(pids=(0, 1))
    s.on_message(beacon(0, REUSE, 10 * MB, precision=UNKNOWN), 0)
    s.on_message(beacon(1, REUSE, 10 * MB), 0)
    assert s.next_tick(0) == 1000
    ctl.prog[0] = 500.0
    s.on_tick(1000)
    assert ("suspend", 0, "degraded") in ctl.log
    assert s.regions[0].exclusive


def test_bes_oversize_runs_alone():
    procs = [SimProcess(p, (Phase(REUSE, 2_000, 40 * MB, BeaconInfo("b", 2_000, 40 * MB, REUSE)),))
             for p in range(3)]
    res = simulate(procs, BesScheduler(), MachineConfig(cores=3))
    assert len(res.trace.of_kind("oversize")) == 3
    assert not any(check_all(res.trace).values())


# CFS ------------------------------------------------------------------------

def test_cfs_two_jobs_one_core_fair():
    procs = [SimProcess(p, (Phase(NCP, 1000),)) for p in range(2)]
    res = simulate(procs, CfsScheduler(quantum=4), MachineConfig(cores=1))
    a, b = sorted(res.completion.values())
    assert b == 2000 and b - a <= 4


def test_cfs_no_preemption_when_cores_suffice():
    procs = [SimProcess(p, (Phase(NCP, 100 + p),)) for p in range(60)]
    res = simulate(procs, CfsScheduler(), MachineConfig(cores=60))
    assert not res.trace.of_kind("suspend")
    assert res.completion == {p: 100 + p for p in range(60)}


def test_cfs_tie_breaks_on_pid():
    procs = [SimProcess(p, (Phase(NCP, 10),)) for p in (3, 1, 2)]
    res = simulate(procs, CfsScheduler(), MachineConfig(cores=1))
    first = res.trace.of_kind("dispatch")[0]
    assert first.pid == 1


def test_cfs_ignores_beacons():
    assert not CfsScheduler().consumes_beacons


# reactive -------------------------------------------------------------------

def _reactive_run(reuse_work, period):
    ph = (Phase(NCP, 50_000), Phase(REUSE, reuse_work, 40 * MB,
                                    BeaconInfo("r", reuse_work, 40 * MB, REUSE)))
    procs = [SimProcess(0, ph * 2)]
    return simulate(procs, ReactiveScheduler(sampling_period=period), MachineConfig(cores=1))


def test_reactive_classification_lags():
    res = _reactive_run(30_000, 1_000)
    start = next(e.time for e in res.trace.of_kind("phase") if e.detail["kind"] == REUSE)
    hits = [e.time for e in res.trace.of_kind("classify")
            if e.detail["cls"] == "reuse" and e.time > start]
    assert hits and start < hits[0] <= start + 2 * 1_000


def test_reactive_short_phases_are_missed():
    res = _reactive_run(3_000, 20_000)
    c = reuse_phase_classification(res.trace)
    assert c.total == 2 and c.misclassified == 2


def test_reactive_streaming_mix_matches_bes():
    def procs():
        ph = (Phase(NCP, 10_000), Phase(STREAM, 10_000, 30_000_000,
                                        BeaconInfo("s", 10_000, 30_000_000, STREAM))) * 3
        return [SimProcess(p, ph) for p in range(8)]

    m = MachineConfig(cores=4)
    res = simulate(procs(), ReactiveScheduler(), m)
    bes = simulate(procs(), BesScheduler(), m)
    assert abs(res.makespan - bes.makespan) / bes.makespan < 0.05


# misc -----------------------------------------------------------------------

def test_make_scheduler():
    assert isinstance(make_scheduler("bes", st_fraction=0.5), BesScheduler)
    with pytest.raises(ValueError):
        make_scheduler("nope")


def test_fifo_runs_in_order():
    procs = [SimProcess(p, (Phase(NCP, 10),)) for p in range(3)]
    res = simulate(procs, FifoScheduler(), MachineConfig(cores=1))
    assert res.completion == {0: 10, 1: 20, 2: 30}
