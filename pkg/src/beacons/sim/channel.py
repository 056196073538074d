"""Beacon messages and the ordered many-producer, single-consumer channel."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Optional

INIT = "init"
BEACON = "beacon"
LOOP_COMPLETE = "loop_complete"


@dataclass(frozen=True)
class BeaconMessage:
    pid: int
    kind: str
    timestamp: int
    beacon_id: str = ""
    timing: float = 0.0
    footprint: float = 0.0
    reuse: str = ""
    precision: str = ""

    @property
    def mu_bw(self) -> float:
        return self.footprint / max(self.timing, 1.0)


class ProtocolError(Exception):
    pass


class BeaconChannel:
    """Delivers messages in (timestamp, pid, send order); FIFO per producer.

    Enforces the per-process protocol: ``init`` first, and beacon and
    loop-complete messages alternating.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, int, BeaconMessage]] = []
        self._seq = itertools.count()
        self._last_ts: dict[int, int] = {}
        self._open: dict[int, Optional[str]] = {}

    def send(self, msg: BeaconMessage) -> None:
        last = self._last_ts.get(msg.pid)
        if last is not None and msg.timestamp < last:
            raise ProtocolError(f"pid {msg.pid}: message timestamps went backwards")
        if msg.kind == INIT:
            if msg.pid in self._open:
                raise ProtocolError(f"pid {msg.pid}: duplicate init")
            self._open[msg.pid] = None
        else:
            if msg.pid not in self._open:
                raise ProtocolError(f"pid {msg.pid}: {msg.kind} before init")
            cur = self._open[msg.pid]
            if msg.kind == BEACON:
                if cur is not None:
                    raise ProtocolError(f"pid {msg.pid}: beacon inside open region {cur}")
                self._open[msg.pid] = msg.beacon_id
            elif msg.kind == LOOP_COMPLETE:
                if cur is None:
                    raise ProtocolError(f"pid {msg.pid}: completion without beacon")
                self._open[msg.pid] = None
            else:
                raise ProtocolError(f"unknown message kind {msg.kind!r}")
        self._last_ts[msg.pid] = msg.timestamp
        heapq.heappush(self._heap, (msg.timestamp, msg.pid, next(self._seq), msg))

    def __len__(self) -> int:
        return len(self._heap)

    def pop_until(self, now: int) -> list[BeaconMessage]:
        out = []
        while self._heap and self._heap[0][0] <= now:
            out.append(heapq.heappop(self._heap)[3])
        return out
