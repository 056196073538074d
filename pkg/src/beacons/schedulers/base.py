"""Scheduler interface driven by the engine."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from ..sim.channel import BeaconMessage
    from ..sim.engine import Controller


class Scheduler:
    """Base class: callbacks are invoked by the engine at the current time.

    ``settle`` runs after every batch of callbacks at a timestamp and is
    where policies fill free cores.
    """

    name = "base"
    consumes_beacons = False

    def __init__(self) -> None:
        self.ctl: Optional["Controller"] = None

    def attach(self, ctl: "Controller") -> None:
        self.ctl = ctl

    def params(self) -> dict:
        return {}

    def on_arrival(self, pid: int, now: int) -> None:
        pass

    def on_message(self, msg: "BeaconMessage", now: int) -> None:
        pass

    def on_complete(self, msg: "BeaconMessage", now: int) -> None:
        pass

    def on_finish(self, pid: int, now: int) -> None:
        pass

    def on_tick(self, now: int) -> None:
        pass

    def next_tick(self, now: int) -> Optional[int]:
        return None

    def settle(self, now: int) -> None:
        pass


def ceil_fraction(frac: float, cores: int) -> int:
    return max(1, math.ceil(frac * cores - 1e-9))
