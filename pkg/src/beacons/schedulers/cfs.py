"""Completely-fair-style baseline: smallest virtual runtime runs, fixed quantum."""

from __future__ import annotations

from typing import Optional

from .base import Scheduler

DEFAULT_QUANTUM = 4


class CfsScheduler(Scheduler):
    """Virtual runtime is time spent on a core. Ties go to the lowest pid.

    Newcomers start at the minimum virtual runtime of the runnable set so
    they cannot starve older processes. Preemption happens on quantum ticks,
    which are skipped while every runnable process has a core.
    """

    name = "cfs"

    def __init__(self, quantum: int = DEFAULT_QUANTUM):
        super().__init__()
        if quantum <= 0:
            raise ValueError("quantum must be positive")
        self.quantum = quantum
        self.offset: dict[int, int] = {}

    def params(self) -> dict:
        return {"quantum": self.quantum}

    def vruntime(self, pid: int) -> int:
        return self.ctl.on_core_time(pid) + self.offset[pid]

    def _key(self, pid: int) -> tuple[int, int]:
        return (self.ctl.on_core_time(pid) + self.offset[pid], pid)

    def on_arrival(self, pid: int, now: int) -> None:
        live = [p for p in self.offset if self.ctl.state(p) != "done"]
        floor = min((self.vruntime(p) for p in live), default=0)
        self.offset[pid] = floor

    def _runnable(self) -> list[int]:
        return self.ctl.running() + self.ctl.ready()

    def settle(self, now: int) -> None:
        ctl = self.ctl
        for pid in sorted(ctl.ready(), key=self._key):
            if not ctl.free_cores():
                break
            ctl.run(pid)

    def next_tick(self, now: int) -> Optional[int]:
        if self.ctl.n_ready() <= self.ctl.free_cores():
            return None
        return (now // self.quantum + 1) * self.quantum

    def on_tick(self, now: int) -> None:
        ctl = self.ctl
        oc, off = ctl.on_core_time, self.offset
        order = sorted(self._runnable(), key=lambda p: (oc(p) + off[p], p))
        want = set(order[:ctl.cores])
        for pid in ctl.running():
            if pid not in want:
                ctl.suspend(pid, "quantum")
        for pid in order[:ctl.cores]:
            if ctl.state(pid) == "ready":
                ctl.run(pid)
