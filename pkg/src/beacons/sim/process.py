"""Processes as phase timelines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

NCP = "ncp"
REUSE = "reuse"
STREAM = "stream"
OVERHEAD = "overhead"

KNOWN = "known_inferred"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class BeaconInfo:
    """What the beacon at a loop phase tells the scheduler (predictions)."""

    beacon_id: str
    time: float
    footprint: float
    reuse: str  # reuse | stream
    precision: str = KNOWN

    @property
    def mu_bw(self) -> float:
        return self.footprint / max(self.time, 1.0)


@dataclass(frozen=True)
class Phase:
    kind: str  # ncp | reuse | stream | overhead
    work: int
    footprint: float = 0.0
    beacon: Optional[BeaconInfo] = None

    def __post_init__(self) -> None:
        if self.work < 0:
            raise ValueError("phase work must be nonnegative")
        if self.kind not in (NCP, REUSE, STREAM, OVERHEAD):
            raise ValueError(f"unknown phase kind {self.kind!r}")

    @property
    def is_loop(self) -> bool:
        return self.kind in (REUSE, STREAM)

    @property
    def mu_bw(self) -> float:
        return self.footprint / max(self.work, 1)


@dataclass(frozen=True)
class SimProcess:
    pid: int
    phases: tuple[Phase, ...]
    arrival: int = 0
    group: str = ""

    @property
    def total_work(self) -> int:
        return sum(p.work for p in self.phases)


def process_from_program(pid: int, ip, art, inputs: Mapping[str, int], arrival: int = 0,
                         cost=None, group: str = "") -> SimProcess:
    """Run an instrumented program and cut its execution into phases.

    Beacon regions become loop phases with the measured footprint and
    duration; the stretches between them become non-cache-pressure phases.
    """
    from ..instrument import evaluate_beacon
    from ..ir.interp import CostModel, interpret

    events: list[tuple] = []

    class _Hooks:
        def beacon(self, bid: str, env: dict, t: int) -> None:
            events.append(("B", bid, dict(env), t))

        def complete(self, bid: str, t: int, exit_id: str, fp: int) -> None:
            events.append(("C", bid, fp, t))

    prof = interpret(ip.program, inputs, cost or CostModel(),
                     instrumentation=ip.instrumentation(), hooks=_Hooks())
    phases: list[Phase] = []
    t = 0
    depth = 0
    start = 0
    info: Optional[BeaconInfo] = None
    for ev in events:
        if ev[0] == "B":
            depth += 1
            if depth > 1:
                continue
            if ev[3] > t:
                phases.append(Phase(NCP, ev[3] - t))
            desc = ip.beacon(ev[1])
            est = evaluate_beacon(desc, ev[2], art)
            kind = REUSE if est.reuse == "reuse" else STREAM
            info = BeaconInfo(desc.id, est.time, est.footprint, kind, est.precision)
            start = ev[3]
        else:
            depth -= 1
            if depth > 0:
                continue
            assert info is not None
            kind = info.reuse
            phases.append(Phase(kind, ev[3] - start, float(ev[2]), info))
            t = ev[3]
    if prof.total_cost > t:
        phases.append(Phase(NCP, prof.total_cost - t))
    return SimProcess(pid, tuple(phases), arrival, group)
