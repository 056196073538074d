"""Deterministic discrete-event co-scheduling engine.

Time is integral. Between events every running phase progresses at the
rate given by the contention model; the engine jumps straight to the next
phase completion, arrival or scheduler tick.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

from .. import kernels
from .channel import BEACON, INIT, LOOP_COMPLETE, BeaconChannel, BeaconMessage
from .counters import ZERO, CounterSample, phase_mpki
from .machine import MachineConfig
from .process import NCP, OVERHEAD, REUSE, STREAM, Phase, SimProcess
from .trace import GLOBAL, Trace, TraceEvent

if TYPE_CHECKING:
    from ..schedulers.base import Scheduler

EPS = 1e-9
_KIND_CODE = {NCP: 0, OVERHEAD: 0, REUSE: 1, STREAM: 2}
MAX_SETTLE_ROUNDS = 100_000


class ProtocolViolation(Exception):
    """A scheduler asked for something the machine cannot do."""


class SimulationError(Exception):
    pass


@dataclass
class _Step:
    phase: Phase
    role: str  # pre | loop | post | plain


@dataclass
class _Proc:
    proc: SimProcess
    steps: list[_Step]
    idx: int = -1
    remaining: float = 0.0
    state: str = "pending"  # pending | ready | running | done
    core: int = -1
    held: bool = False
    dispatched: bool = False
    on_core: int = 0
    progress: float = 0.0
    counters: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    finish: int = -1

    @property
    def pid(self) -> int:
        return self.proc.pid

    @property
    def step(self) -> Optional[_Step]:
        return self.steps[self.idx] if 0 <= self.idx < len(self.steps) else None


def expand_phases(proc: SimProcess, machine: MachineConfig, overheads: bool) -> list[_Step]:
    """Phase list with beacon overhead phases around loop phases when charged."""
    out: list[_Step] = []
    for ph in proc.phases:
        if ph.beacon is None:
            out.append(_Step(ph, "plain"))
            continue
        if overheads:
            cost = machine.overhead_reuse if ph.kind == REUSE else machine.overhead_stream
            out.append(_Step(Phase(OVERHEAD, cost), "pre"))
            out.append(_Step(ph, "loop"))
            out.append(_Step(Phase(OVERHEAD, machine.overhead_complete), "post"))
        else:
            out.append(_Step(ph, "loop"))
    return out


@dataclass
class SimResult:
    trace: Trace
    makespan: int
    completion: dict[int, int]
    arrival: dict[int, int]
    on_core: dict[int, int]
    busy: int
    idle: int

    @property
    def turnaround(self) -> dict[int, int]:
        return {p: self.completion[p] - self.arrival[p] for p in self.completion}


class Controller:
    """The only handle schedulers get on the machine."""

    def __init__(self, engine: "Engine"):
        self._e = engine

    @property
    def now(self) -> int:
        return self._e.now

    @property
    def machine(self) -> MachineConfig:
        return self._e.machine

    @property
    def cores(self) -> int:
        return self._e.machine.cores

    def free_cores(self) -> int:
        return self._e.machine.cores - sum(1 for c in self._e.core_of if c is not None)

    def running(self) -> list[int]:
        """Pids on a core (held ones included), ordered by core."""
        return [p for p in self._e.core_of if p is not None]

    def ready(self) -> list[int]:
        """Arrived, unfinished pids off-core, oldest first."""
        r = self._e.ready_set
        return sorted(r, key=lambda pid: (r[pid], pid))

    def n_ready(self) -> int:
        return len(self._e.ready_set)

    def state(self, pid: int) -> str:
        return self._proc(pid).state

    def is_held(self, pid: int) -> bool:
        return self._proc(pid).held

    def on_core_time(self, pid: int) -> int:
        return self._e.procs[pid].on_core

    def progress(self, pid: int) -> float:
        return self._proc(pid).progress

    def counters(self, pid: int) -> CounterSample:
        c = self._proc(pid).counters
        return CounterSample(*c) if c else ZERO

    def run(self, pid: int) -> None:
        e = self._e
        p = self._proc(pid)
        if p.state != "ready":
            raise ProtocolViolation(f"run({pid}): process is {p.state}")
        if None not in e.core_of:
            raise ProtocolViolation(f"run({pid}): all {len(e.core_of)} cores busy")
        core = e.core_of.index(None)
        e.core_of[core] = pid
        p.core = core
        p.state = "running"
        del e.ready_set[pid]
        e.record("resume" if p.dispatched else "dispatch", pid, core=core)
        if not p.dispatched:
            p.dispatched = True
            e.enter_step(p, 0)

    def suspend(self, pid: int, reason: str = "") -> None:
        e = self._e
        p = self._proc(pid)
        if p.state != "running":
            raise ProtocolViolation(f"suspend({pid}): process is {p.state}")
        if p.held:
            p.held = False
            e.record("unhold", pid)
        e.core_of[p.core] = None
        p.core = -1
        p.state = "ready"
        e.ready_set[pid] = e.now
        e.record("suspend", pid, reason=reason)

    def hold(self, pid: int, reason: str = "") -> None:
        p = self._proc(pid)
        if p.state != "running" or p.held:
            raise ProtocolViolation(f"hold({pid}): not a running, unheld process")
        p.held = True
        self._e.record("hold", pid, reason=reason)

    def unhold(self, pid: int) -> None:
        p = self._proc(pid)
        if not p.held:
            raise ProtocolViolation(f"unhold({pid}): process is not held")
        p.held = False
        self._e.record("unhold", pid)

    def record(self, kind: str, pid: int = GLOBAL, /, **detail) -> None:
        self._e.record(kind, pid, **detail)

    def _proc(self, pid: int) -> _Proc:
        try:
            return self._e.procs[pid]
        except KeyError:
            raise ProtocolViolation(f"unknown pid {pid}") from None


def workload_fingerprint(procs: Sequence[SimProcess]) -> str:
    h = hashlib.sha256()
    for p in sorted(procs, key=lambda p: p.pid):
        h.update(repr(p).encode())
    return h.hexdigest()[:16]


class Engine:
    def __init__(self, machine: MachineConfig, processes: Sequence[SimProcess],
                 scheduler: "Scheduler", *, seed: int = 0, max_time: int = 10**12):
        pids = [p.pid for p in processes]
        if not processes:
            raise ValueError("empty workload")
        if len(set(pids)) != len(pids):
            raise ValueError("duplicate pids in workload")
        self.machine = machine
        self.scheduler = scheduler
        self.seed = seed
        self.max_time = max_time
        overheads = scheduler.consumes_beacons
        self.procs = {p.pid: _Proc(p, expand_phases(p, machine, overheads))
                      for p in sorted(processes, key=lambda p: p.pid)}
        self.pending = sorted(self.procs.values(), key=lambda p: (p.proc.arrival, p.pid))
        self.core_of: list[Optional[int]] = [None] * machine.cores
        self.channel = BeaconChannel()
        self.now = 0
        self.events: list[TraceEvent] = []
        self._seq = 0
        self.idle = 0
        self.ready_set: dict[int, int] = {}
        self._interned: dict[tuple, dict] = {}
        self._finished: list[int] = []
        self.fingerprint = workload_fingerprint(processes)
        self.ctl = Controller(self)

    # bookkeeping -------------------------------------------------------
    def record(self, kind: str, pid: int = GLOBAL, /, **detail) -> None:
        if len(detail) == 1:
            # quantum preemptions repeat the same tiny details; share them
            key = next(iter(detail.items()))
            detail = self._interned.setdefault(key, detail)
        self.events.append(TraceEvent(self.now, pid, self._seq, kind, detail))
        self._seq += 1

    def enter_step(self, p: _Proc, idx: int) -> None:
        p.idx = idx
        if idx >= len(p.steps):
            self._finish(p)
            return
        st = p.steps[idx]
        p.remaining = float(st.phase.work)
        self.record("phase", p.pid, kind=st.phase.kind, role=st.role, work=st.phase.work,
                    footprint=st.phase.footprint)
        starts_region = st.role == "pre" or (st.role == "loop" and (
            idx == 0 or p.steps[idx - 1].role != "pre"))
        if starts_region:
            ph = st.phase if st.role == "loop" else p.steps[idx + 1].phase
            b = ph.beacon
            assert b is not None
            self.record("beacon", p.pid, id=b.beacon_id, reuse=b.reuse, fp=b.footprint,
                        t=b.time, mu=b.mu_bw, prec=b.precision)
            self.channel.send(BeaconMessage(p.pid, BEACON, self.now, b.beacon_id, b.time,
                                            b.footprint, b.reuse, b.precision))

    def _end_step(self, p: _Proc) -> None:
        st = p.steps[p.idx]
        if st.role == "loop":
            b = st.phase.beacon
            assert b is not None
            self.record("complete", p.pid, id=b.beacon_id)
            self.channel.send(BeaconMessage(p.pid, LOOP_COMPLETE, self.now, b.beacon_id))
        self.enter_step(p, p.idx + 1)

    def _finish(self, p: _Proc) -> None:
        if p.held:
            p.held = False
            self.record("unhold", p.pid)
        self.core_of[p.core] = None
        p.core = -1
        p.state = "done"
        p.finish = self.now
        self.record("finish", p.pid, on_core=p.on_core, work=p.proc.total_work)
        self._finished.append(p.pid)

    # main loop ---------------------------------------------------------
    def _arrivals(self) -> None:
        while self.pending and self.pending[0].proc.arrival <= self.now:
            p = self.pending.pop(0)
            p.state = "ready"
            self.ready_set[p.pid] = self.now
            self.record("arrive", p.pid, phases=len(p.proc.phases))
            self.channel.send(BeaconMessage(p.pid, INIT, self.now))
            self.scheduler.on_arrival(p.pid, self.now)

    def _zero_work_done(self) -> bool:
        moved = False
        for pid in list(self.core_of):
            if pid is None:
                continue
            p = self.procs[pid]
            if p.state == "running" and not p.held and p.remaining <= EPS:
                self._end_step(p)
                moved = True
        return moved

    def _settle(self) -> None:
        for _ in range(MAX_SETTLE_ROUNDS):
            while self._finished:
                self.scheduler.on_finish(self._finished.pop(0), self.now)
            msgs = self.channel.pop_until(self.now)
            for m in msgs:
                if m.kind == LOOP_COMPLETE:
                    self.scheduler.on_complete(m, self.now)
                else:
                    self.scheduler.on_message(m, self.now)
            self.scheduler.settle(self.now)
            if (not msgs and not self._zero_work_done() and not len(self.channel)
                    and not self._finished):
                return
        raise SimulationError("scheduler did not settle")

    def _rates(self, running: list[_Proc]) -> list[float]:
        kinds, fps, mus = [], [], []
        for p in running:
            ph = p.steps[p.idx].phase
            kinds.append(3 if p.held else _KIND_CODE[ph.kind])
            fps.append(ph.footprint)
            mus.append(ph.mu_bw)
        m = self.machine
        return kernels.contention_rates(kinds, fps, mus, float(m.llc_bytes),
                                        float(m.mem_bandwidth), float(m.interference))

    def _advance(self, running: list[_Proc], rates: list[float], dt: int) -> None:
        m = self.machine
        F = sum(p.steps[p.idx].phase.footprint for p in running
                if not p.held and p.steps[p.idx].phase.kind == REUSE)
        streams = any(not p.held and p.steps[p.idx].phase.kind == STREAM for p in running)
        overflow = F / m.llc_bytes
        if streams and F > 0:
            overflow /= m.interference
        for p, r in zip(running, rates):
            if p.held or r <= 0:
                continue
            done = r * dt
            p.remaining -= done
            p.progress += done
            l2, llc = phase_mpki(p.steps[p.idx].phase.kind, overflow)
            p.counters[0] += 1000.0 * done
            p.counters[1] += l2 * done
            p.counters[2] += llc * done
        occupied = 0
        for pid in self.core_of:
            if pid is not None:
                self.procs[pid].on_core += dt
                occupied += 1
        self.idle += (m.cores - occupied) * dt

    def run(self) -> SimResult:
        sched = self.scheduler
        sched.attach(self.ctl)
        while True:
            self._arrivals()
            self._settle()
            if all(p.state == "done" for p in self.procs.values()):
                break
            running = [self.procs[pid] for pid in self.core_of if pid is not None]
            rates = self._rates(running)
            nxt = math.inf
            for p, r in zip(running, rates):
                if r > 0 and not p.held:
                    nxt = min(nxt, self.now + max(1, math.ceil(p.remaining / r - EPS)))
            if self.pending:
                nxt = min(nxt, self.pending[0].proc.arrival)
            tick = sched.next_tick(self.now)
            if tick is not None:
                nxt = min(nxt, max(tick, self.now + 1))
            if nxt == math.inf:
                waiting = [p.pid for p in self.procs.values() if p.state != "done"]
                raise SimulationError(f"no progress possible at t={self.now}; stuck: {waiting[:10]}")
            if nxt > self.max_time:
                raise SimulationError(f"simulation exceeded max_time {self.max_time}")
            dt = int(nxt) - self.now
            self._advance(running, rates, dt)
            self.now = int(nxt)
            for p in running:
                if p.state == "running" and not p.held and p.remaining <= EPS:
                    self._end_step(p)
            self._arrivals()
            if tick is not None and tick <= self.now:
                sched.on_tick(self.now)
        return self._result()

    def _result(self) -> SimResult:
        busy = sum(p.on_core for p in self.procs.values())
        makespan = max(p.finish for p in self.procs.values())
        self.record("summary", GLOBAL, busy=busy, idle=self.idle, cores=self.machine.cores,
                    makespan=makespan)
        header = {"scheduler": self.scheduler.name, "params": self.scheduler.params(),
                  "machine": self.machine.to_dict(), "workload": self.fingerprint,
                  "seed": self.seed, "processes": len(self.procs)}
        trace = Trace(header, sorted(self.events))
        return SimResult(trace, makespan,
                         {p.pid: p.finish for p in self.procs.values()},
                         {p.pid: p.proc.arrival for p in self.procs.values()},
                         {p.pid: p.on_core for p in self.procs.values()}, busy, self.idle)


def simulate(processes: Sequence[SimProcess], scheduler: "Scheduler",
             machine: Optional[MachineConfig] = None, *, seed: int = 0) -> SimResult:
    return Engine(machine or MachineConfig(), processes, scheduler, seed=seed).run()
