"""Synthetic workloads from a declarative description."""

from __future__ import annotations

import random
from typing import Any, Mapping, Sequence, Union

from .machine import MB
from .process import KNOWN, NCP, REUSE, STREAM, UNKNOWN, BeaconInfo, Phase, SimProcess

Range = Union[int, float, Sequence[float]]


class WorkloadError(ValueError):
    pass


def _draw(rng: random.Random, v: Range, integer: bool = True) -> float:
    if isinstance(v, (int, float)):
        return int(v) if integer else float(v)
    lo, hi = v
    if integer:
        return rng.randint(int(lo), int(hi))
    return rng.uniform(float(lo), float(hi))


def _phase(rng: random.Random, spec: Mapping[str, Any], bid: str) -> Phase:
    kind = spec.get("kind", NCP)
    work = int(_draw(rng, spec.get("duration", spec.get("work", 0))))
    if kind == NCP:
        return Phase(NCP, work)
    if kind not in (REUSE, STREAM):
        raise WorkloadError(f"unknown phase kind {kind!r}")
    if "footprint_mb" in spec:
        fp = _draw(rng, spec["footprint_mb"], integer=False) * MB
    else:
        fp = float(_draw(rng, spec.get("footprint", 0), integer=False))
    err = _draw(rng, spec.get("mispredict", 1.0), integer=False)
    prec = spec.get("precision", "known")
    prec = KNOWN if prec in ("known", KNOWN) else UNKNOWN
    pred_fp = fp * _draw(rng, spec.get("footprint_error", 1.0), integer=False)
    info = BeaconInfo(spec.get("beacon", bid), work * err, pred_fp, kind, prec)
    return Phase(kind, work, fp, info)


def synth_workload(spec: Mapping[str, Any], seed: int = 0) -> list[SimProcess]:
    """Processes from ``{"groups": [...]}``.

    A group has ``name``, ``count`` (or ``per`` plus ``of`` to scale with
    another group's count), ``arrival`` (value or [lo, hi]), ``repeat`` and
    ``phases``; each phase has ``kind``, ``duration`` and, for loop phases,
    ``footprint_mb`` or ``footprint``, ``mispredict``, ``precision``.
    Ranges are drawn uniformly from a generator seeded with ``seed``.
    """
    groups = spec.get("groups", [])
    counts: dict[str, int] = {}
    for g in groups:
        name = g.get("name", f"g{len(counts)}")
        if "count" in g:
            counts[name] = int(g["count"])
        elif "per" in g:
            ref = g.get("of")
            if ref not in counts:
                raise WorkloadError(f"group {name!r} scales with unknown group {ref!r}")
            counts[name] = int(g["per"]) * counts[ref]
        else:
            raise WorkloadError(f"group {name!r} needs count or per/of")
        if counts[name] < 0:
            raise WorkloadError(f"group {name!r} has a negative count")
    rng = random.Random(seed)
    procs: list[SimProcess] = []
    pid = 0
    for g in groups:
        name = g.get("name", f"g{len(procs)}")
        phase_specs = list(g.get("phases", []))
        if not phase_specs:
            raise WorkloadError(f"group {name!r} has no phases")
        for _ in range(counts[name]):
            phases = []
            for r in range(int(g.get("repeat", 1))):
                for k, ps in enumerate(phase_specs):
                    phases.append(_phase(rng, ps, f"{name}.b{k}"))
            arrival = int(_draw(rng, g.get("arrival", 0)))
            procs.append(SimProcess(pid, tuple(phases), arrival, name))
            pid += 1
    if not procs:
        raise WorkloadError("workload has zero processes")
    return procs


def random_workload(rng: random.Random, n_procs: int, machine_llc: float,
                    machine_bw: float) -> list[SimProcess]:
    """Random mixes for property and stress tests, including edge cases:
    oversize reuse loops, unknown precision, mispredictions, zero-work phases."""
    procs = []
    for pid in range(n_procs):
        phases = []
        for k in range(rng.randint(1, 5)):
            kind = rng.choice((NCP, NCP, REUSE, STREAM))
            work = rng.choice((0, rng.randint(1, 200), rng.randint(200, 20000)))
            if kind == NCP:
                phases.append(Phase(NCP, work))
                continue
            if kind == REUSE:
                fp = machine_llc * rng.choice((0.05, 0.2, 0.4, 0.7, 1.3)) * rng.uniform(0.8, 1.2)
            else:
                fp = machine_bw * max(work, 1) * rng.uniform(0.05, 1.5)
            prec = KNOWN if rng.random() < 0.7 else UNKNOWN
            err = rng.choice((1.0, 1.0, 0.5, 2.0))
            info = BeaconInfo(f"b{k}", work * err, fp * rng.uniform(0.9, 1.1), kind, prec)
            phases.append(Phase(kind, work, fp, info))
        procs.append(SimProcess(pid, tuple(phases), rng.choice((0, 0, rng.randint(0, 30000)))))
    return procs
