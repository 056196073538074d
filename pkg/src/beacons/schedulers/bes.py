"""Beacon-driven co-scheduler.

Beacons announce each loop's predicted time, footprint, reuse class and
precision. The scheduler alternates between a reuse mode, which packs
reuse loops into the shared cache, and a stream mode, which packs
streaming loops into memory bandwidth. Non-loop code (filler) runs in
either mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..sim.channel import BEACON, INIT, BeaconMessage
from ..sim.process import REUSE, STREAM, UNKNOWN
from .base import Scheduler, ceil_fraction

BOOTSTRAP = "bootstrap"


@dataclass
class _Region:
    pid: int
    beacon_id: str
    kind: str
    fp: float
    mu: float
    time: float
    precision: str
    oversize: bool = False
    exclusive: bool = False
    admitted: bool = False
    admit_at: int = 0
    ran: int = 0
    mon_progress: float = 0.0
    mon_time: int = 0
    hold_deadline: int = 0

    def expected_end(self) -> float:
        return self.admit_at + max(0.0, self.time - self.ran)


class BesScheduler(Scheduler):
    name = "bes"
    consumes_beacons = True

    def __init__(self, st_fraction: float = 0.9, rt_fraction: float = 0.1,
                 overlap_fraction: float = 0.075, sampling_period: int = 1000,
                 degrade_threshold: float = 0.8, yield_on_complete: bool = True,
                 min_dwell: Optional[int] = None):
        super().__init__()
        self.st_fraction = st_fraction
        self.rt_fraction = rt_fraction
        self.overlap_fraction = overlap_fraction
        self.period = sampling_period
        self.degrade = degrade_threshold
        self.yield_on_complete = yield_on_complete
        self.min_dwell = sampling_period if min_dwell is None else min_dwell
        self.mode = BOOTSTRAP
        self.mode_since = 0
        self.regions: dict[int, _Region] = {}
        self.reuse_q: list[int] = []
        self.stream_q: list[int] = []
        self.held: list[int] = []
        self.cache_used = 0.0
        self.bw_used = 0.0
        self.admitted: dict[str, list[int]] = {REUSE: [], STREAM: []}
        self.known: set[int] = set()

    def params(self) -> dict:
        return {"st_fraction": self.st_fraction, "rt_fraction": self.rt_fraction,
                "overlap_fraction": self.overlap_fraction, "sampling_period": self.period,
                "degrade_threshold": self.degrade, "yield_on_complete": self.yield_on_complete,
                "min_dwell": self.min_dwell}

    @property
    def st(self) -> int:
        return ceil_fraction(self.st_fraction, self.ctl.cores)

    @property
    def rt(self) -> int:
        return ceil_fraction(self.rt_fraction, self.ctl.cores)

    # resources ---------------------------------------------------------
    def _capacity(self, kind: str) -> float:
        m = self.ctl.machine
        return float(m.llc_bytes if kind == REUSE else m.mem_bandwidth)

    def _demand(self, r: _Region) -> float:
        return r.fp if r.kind == REUSE else r.mu

    def _used(self, kind: str) -> float:
        return self.cache_used if kind == REUSE else self.bw_used

    def fits(self, r: _Region) -> bool:
        others = self.admitted[r.kind]
        if r.exclusive or r.oversize:
            return not others
        if any(self.regions[p].oversize or self.regions[p].exclusive for p in others):
            return False
        return self._used(r.kind) + self._demand(r) <= self._capacity(r.kind)

    def _admit(self, r: _Region, now: int) -> None:
        r.admitted = True
        r.admit_at = now
        self.admitted[r.kind].append(r.pid)
        if not r.oversize:
            if r.kind == REUSE:
                self.cache_used += r.fp
            else:
                self.bw_used += r.mu
        else:
            self.ctl.record("oversize", r.pid, kind=r.kind, demand=self._demand(r))
        r.mon_progress = self.ctl.progress(r.pid)
        r.mon_time = now
        self.ctl.record("admit", r.pid, kind=r.kind, fp=r.fp, mu=r.mu)

    def _release(self, r: _Region, now: int) -> None:
        if not r.admitted:
            return
        r.admitted = False
        r.ran += now - r.admit_at
        self.admitted[r.kind].remove(r.pid)
        if not r.oversize:
            if r.kind == REUSE:
                self.cache_used -= r.fp
            else:
                self.bw_used -= r.mu
        if not self.admitted[REUSE]:
            self.cache_used = 0.0
        if not self.admitted[STREAM]:
            self.bw_used = 0.0
        self.ctl.record("release", r.pid, kind=r.kind)

    def _queue(self, kind: str) -> list[int]:
        return self.reuse_q if kind == REUSE else self.stream_q

    def _suspend_to_queue(self, pid: int, reason: str, now: int, front: bool = False) -> None:
        r = self.regions[pid]
        self._release(r, now)
        if pid in self.held:
            self.held.remove(pid)
        self.ctl.suspend(pid, reason)
        q = self._queue(r.kind)
        q.insert(0, pid) if front else q.append(pid)

    # callbacks ---------------------------------------------------------
    def on_message(self, msg: BeaconMessage, now: int) -> None:
        if msg.kind == INIT:
            self.known.add(msg.pid)
            return
        if msg.kind != BEACON or msg.pid not in self.known:
            self.ctl.record("protocol_error", msg.pid, message=msg.kind, reason="unknown pid")
            return
        kind = REUSE if msg.reuse == REUSE else STREAM
        r = _Region(msg.pid, msg.beacon_id, kind, msg.footprint, msg.mu_bw, msg.timing,
                     msg.precision)
        r.oversize = self._demand(r) > self._capacity(kind)
        self.regions[msg.pid] = r
        if self.mode == BOOTSTRAP:
            self._switch(kind, "first_beacon", now)
        if self.ctl.state(msg.pid) != "running":
            self._queue(kind).append(msg.pid)
            return
        self._place(r, now)

    def _place(self, r: _Region, now: int) -> None:
        if self.mode != r.kind:
            self._suspend_to_queue(r.pid, "mode", now)
        elif self.fits(r):
            self._admit(r, now)
        elif r.kind == STREAM:
            self._suspend_to_queue(r.pid, "bandwidth", now)
        else:
            release = self._release_time(r)
            if release - now > self.overlap_fraction * r.time:
                self._suspend_to_queue(r.pid, "overlap", now)
            else:
                r.hold_deadline = int(release) + self.period
                self.held.append(r.pid)
                self.ctl.hold(r.pid, "overlap")

    def _release_time(self, r: _Region) -> float:
        """Predicted time at which enough admitted reuse loops end for ``r`` to fit."""
        running = sorted((self.regions[p] for p in self.admitted[REUSE]),
                         key=lambda x: (x.expected_end(), x.pid))
        if r.exclusive or r.oversize or any(x.oversize or x.exclusive for x in running):
            return max((x.expected_end() for x in running), default=self.ctl.now)
        need = self.cache_used + r.fp - self._capacity(REUSE)
        freed = 0.0
        for x in running:
            freed += x.fp
            if freed >= need:
                return x.expected_end()
        return running[-1].expected_end() if running else self.ctl.now

    def on_complete(self, msg: BeaconMessage, now: int) -> None:
        r = self.regions.get(msg.pid)
        if r is None or r.beacon_id != msg.beacon_id:
            self.ctl.record("protocol_error", msg.pid, message=msg.kind,
                            reason="completion without matching beacon")
            return
        del self.regions[msg.pid]
        self._release(r, now)
        for q in (self.reuse_q, self.stream_q, self.held):
            if msg.pid in q:
                q.remove(msg.pid)
        self._unhold_fitting(now)
        if not self.yield_on_complete or self.ctl.state(msg.pid) != "running":
            return
        if self.ctl.free_cores():
            return
        cand = self._first_fit(now)
        if cand is not None:
            self.ctl.suspend(msg.pid, "yield")
            self._run_region(cand, now)

    def on_finish(self, pid: int, now: int) -> None:
        r = self.regions.pop(pid, None)
        if r is not None:
            self._release(r, now)
        for q in (self.reuse_q, self.stream_q, self.held):
            if pid in q:
                q.remove(pid)

    def next_tick(self, now: int) -> Optional[int]:
        monitored = any(self.regions[p].precision == UNKNOWN and not self.regions[p].exclusive
                        for k in (REUSE, STREAM) for p in self.admitted[k])
        if not monitored and not self.held:
            return None
        t = (now // self.period + 1) * self.period
        for pid in self.held:
            t = min(t, max(now + 1, self.regions[pid].hold_deadline))
        return t

    def on_tick(self, now: int) -> None:
        self._unhold_fitting(now)
        for pid in list(self.held):
            r = self.regions[pid]
            if now >= r.hold_deadline:
                self.ctl.unhold(pid)
                self._suspend_to_queue(pid, "hold_timeout", now)
        for kind in (REUSE, STREAM):
            for pid in list(self.admitted[kind]):
                r = self.regions[pid]
                if r.precision != UNKNOWN or r.exclusive or now - r.mon_time < self.period:
                    continue
                prog = self.ctl.progress(pid)
                rate = (prog - r.mon_progress) / (now - r.mon_time)
                r.mon_progress, r.mon_time = prog, now
                if rate < self.degrade and len(self.admitted[kind]) > 1:
                    r.exclusive = True
                    self._suspend_to_queue(pid, "degraded", now)

    # filling and mode switching ----------------------------------------
    def _unhold_fitting(self, now: int) -> None:
        for pid in list(self.held):
            r = self.regions[pid]
            if self.mode == REUSE and self.fits(r):
                self.held.remove(pid)
                self.ctl.unhold(pid)
                self._admit(r, now)

    def _first_fit(self, now: int) -> Optional[int]:
        if self.mode == BOOTSTRAP:
            return None
        for pid in self._queue(self.mode):
            if self.fits(self.regions[pid]):
                return pid
        return None

    def _run_region(self, pid: int, now: int) -> None:
        self._queue(self.mode).remove(pid)
        self.ctl.run(pid)
        self._admit(self.regions[pid], now)

    def _fill(self, now: int) -> None:
        ctl = self.ctl
        while ctl.free_cores():
            cand = self._first_fit(now)
            if cand is not None:
                self._run_region(cand, now)
                continue
            filler = next((p for p in ctl.ready() if p not in self.regions), None)
            if filler is None:
                break
            ctl.run(filler)

    def _switch(self, to: str, trigger: str, now: int) -> None:
        d = {"from": self.mode, "to": to, "trigger": trigger,
             "reuse_q": len(self.reuse_q), "stream_q": len(self.stream_q),
             "st": self.st, "rt": self.rt,
             "reuse_active": len(self.admitted[REUSE]) + len(self.held),
             "stream_active": len(self.admitted[STREAM])}
        self.ctl.record("mode", **d)
        old = self.mode
        self.mode = to
        self.mode_since = now
        if old == BOOTSTRAP:
            return
        for pid in reversed(list(self.admitted[old]) + (list(self.held) if old == REUSE else [])):
            if pid in self.held:
                self.ctl.unhold(pid)
            self._suspend_to_queue(pid, "mode", now, front=True)

    def _maybe_switch(self, now: int) -> bool:
        dwell = now - self.mode_since >= self.min_dwell
        if self.mode == REUSE:
            if dwell and len(self.stream_q) >= self.st:
                self._switch(STREAM, "ST", now)
                return True
            if (self.stream_q and not self.admitted[REUSE] and not self.held
                    and not self.reuse_q):
                self._switch(STREAM, "RC", now)
                return True
        elif self.mode == STREAM:
            if dwell and len(self.reuse_q) >= self.rt:
                self._switch(REUSE, "RT", now)
                return True
            if self.reuse_q and not self.admitted[STREAM] and not self.stream_q:
                self._switch(REUSE, "SC", now)
                return True
        return False

    def settle(self, now: int) -> None:
        for _ in range(4):
            self._unhold_fitting(now)
            self._fill(now)
            if not self._maybe_switch(now):
                return
