"""Run-to-completion FIFO; the reference for monotonicity tests."""

from __future__ import annotations

from .base import Scheduler


class FifoScheduler(Scheduler):
    name = "fifo"

    def settle(self, now: int) -> None:
        ctl = self.ctl
        for pid in ctl.ready():
            if not ctl.free_cores():
                break
            ctl.run(pid)
