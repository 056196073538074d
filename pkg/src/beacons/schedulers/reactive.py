"""Counter-driven reactive baseline.

Each sampling period the scheduler reads per-process counters for the
window just ended and classifies running processes: LLC MPKI at or above
the intensity threshold marks a memory-intensive process, which is a
reuse job when MF exceeds the threshold and a streaming job otherwise.
Decisions therefore lag the program by up to one period.
"""

from __future__ import annotations

from typing import Optional

from ..sim.counters import ZERO, CounterSample, classify
from .base import Scheduler, ceil_fraction

FILLER = "filler"
REUSE = "reuse"
STREAM = "stream"


class ReactiveScheduler(Scheduler):
    name = "reactive"

    def __init__(self, sampling_period: int = 1000, st_fraction: float = 0.9,
                 rt_fraction: float = 0.1, min_dwell: Optional[int] = None):
        super().__init__()
        if sampling_period <= 0:
            raise ValueError("sampling period must be positive")
        self.period = sampling_period
        self.st_fraction = st_fraction
        self.rt_fraction = rt_fraction
        self.min_dwell = sampling_period if min_dwell is None else min_dwell
        self.mode = REUSE
        self.mode_since = 0
        self.cls: dict[int, str] = {}
        self.snap: dict[int, CounterSample] = {}
        self.reuse_q: list[int] = []
        self.stream_q: list[int] = []

    def params(self) -> dict:
        return {"sampling_period": self.period, "st_fraction": self.st_fraction,
                "rt_fraction": self.rt_fraction, "min_dwell": self.min_dwell}

    def next_tick(self, now: int) -> Optional[int]:
        return (now // self.period + 1) * self.period

    def on_finish(self, pid: int, now: int) -> None:
        self.cls.pop(pid, None)
        for q in (self.reuse_q, self.stream_q):
            if pid in q:
                q.remove(pid)

    def _queue(self, c: str) -> list[int]:
        return self.reuse_q if c == REUSE else self.stream_q

    def _park(self, pid: int, reason: str, front: bool = False) -> None:
        self.ctl.suspend(pid, reason)
        q = self._queue(self.cls[pid])
        q.insert(0, pid) if front else q.append(pid)

    def on_tick(self, now: int) -> None:
        ctl = self.ctl
        running = ctl.running()
        for pid in running:
            cur = ctl.counters(pid)
            window = cur - self.snap.get(pid, ZERO)
            self.snap[pid] = cur
            if window.instructions <= 0:
                continue
            c = classify(window)
            self.cls[pid] = c
            ctl.record("classify", pid, cls=c, mpki_llc=round(window.mpki_llc, 6),
                       mf=round(window.mf, 6))
        other = STREAM if self.mode == REUSE else REUSE
        for pid in running:
            if self.cls.get(pid) == other:
                self._park(pid, "mode")
        if self.mode == REUSE:
            # co-running reuse jobs that miss in the LLC are thrashing: keep one
            thrash = [p for p in ctl.running() if self.cls.get(p) == REUSE]
            for pid in thrash[1:]:
                self._park(pid, "contention")
        # windows of parked processes restart when they run again
        for pid in ctl.ready():
            self.snap[pid] = ctl.counters(pid)

    def _running_class(self, c: str) -> bool:
        return any(self.cls.get(p) == c for p in self.ctl.running())

    def _fill(self) -> None:
        ctl = self.ctl
        while ctl.free_cores():
            q = self._queue(self.mode)
            if q and not (self.mode == REUSE and self._running_class(REUSE)):
                pid = q.pop(0)
                ctl.run(pid)
                continue
            queued = set(self.reuse_q) | set(self.stream_q)
            filler = next((p for p in ctl.ready() if p not in queued), None)
            if filler is None:
                break
            ctl.run(filler)

    def _maybe_switch(self, now: int) -> bool:
        ctl = self.ctl
        dwell = now - self.mode_since >= self.min_dwell
        st = ceil_fraction(self.st_fraction, ctl.cores)
        rt = ceil_fraction(self.rt_fraction, ctl.cores)
        if self.mode == REUSE:
            go = (dwell and len(self.stream_q) >= st) or (
                self.stream_q and not self.reuse_q and not self._running_class(REUSE))
        else:
            go = (dwell and len(self.reuse_q) >= rt) or (
                self.reuse_q and not self.stream_q and not self._running_class(STREAM))
        if not go:
            return False
        old = self.mode
        self.mode = STREAM if old == REUSE else REUSE
        self.mode_since = now
        ctl.record("policy_mode", **{"from": old, "to": self.mode})
        for pid in reversed(ctl.running()):
            if self.cls.get(pid) == old:
                self._park(pid, "mode", front=True)
        return True

    def settle(self, now: int) -> None:
        for _ in range(4):
            self._fill()
            if not self._maybe_switch(now):
                return
