"""Trace checkers. Each returns a list of violation messages (empty = ok)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .trace import GLOBAL, Trace, by_time

TOL = 1e-6


@dataclass
class _PState:
    on_core: bool = False
    held: bool = False
    region: Optional[dict] = None
    oversize: bool = False
    exclusive: bool = False
    done: bool = False
    since: int = 0
    core_time: int = 0


def _replay(trace: Trace):
    """Yield (time, state-by-pid) after every timestamp."""
    st: dict[int, _PState] = {}
    for t, evs in by_time(trace.events):
        for e in evs:
            if e.pid == GLOBAL:
                continue
            s = st.setdefault(e.pid, _PState())
            k = e.kind
            if k in ("dispatch", "resume"):
                s.on_core = True
                s.since = t
            elif k in ("suspend", "finish"):
                if s.on_core:
                    s.core_time += t - s.since
                s.on_core = False
                s.held = False
                s.done = k == "finish"
                if e.detail.get("reason") == "degraded":
                    s.exclusive = True
            elif k == "hold":
                s.held = True
            elif k == "unhold":
                s.held = False
            elif k == "beacon":
                s.region = e.detail
                s.oversize = s.exclusive = False
            elif k == "complete":
                s.region = None
                s.oversize = s.exclusive = False
            elif k == "oversize":
                s.oversize = True
        yield t, evs, st


def _active(st: dict[int, _PState], reuse: str):
    return [(pid, s) for pid, s in st.items()
            if s.on_core and not s.held and s.region is not None and s.region["reuse"] == reuse]


def check_cache_safety(trace: Trace) -> list[str]:
    llc = trace.header["machine"]["llc_bytes"]
    out = []
    for t, _, st in _replay(trace):
        act = _active(st, "reuse")
        big = [pid for pid, s in act if s.oversize]
        total = sum(s.region["fp"] for _, s in act if not s.oversize)
        if total > llc * (1 + TOL):
            out.append(f"t={t}: co-running reuse footprint {total:.0f} > llc {llc}")
        if big and len(act) > 1:
            out.append(f"t={t}: oversize pid {big[0]} co-runs with other reuse loops")
    return out


def check_bandwidth_safety(trace: Trace) -> list[str]:
    bw = trace.header["machine"]["mem_bandwidth"]
    out = []
    for t, _, st in _replay(trace):
        act = _active(st, "stream")
        big = [pid for pid, s in act if s.oversize]
        total = sum(s.region["mu"] for _, s in act if not s.oversize)
        if total > bw * (1 + TOL):
            out.append(f"t={t}: co-running streaming demand {total:.1f} > bandwidth {bw}")
        if big and len(act) > 1:
            out.append(f"t={t}: oversize pid {big[0]} co-runs with other streams")
    return out


def check_alternation(trace: Trace) -> list[str]:
    open_: dict[int, Optional[str]] = {}
    out = []
    for e in sorted(trace.events):
        if e.kind == "beacon":
            if open_.get(e.pid) is not None:
                out.append(f"pid {e.pid}: beacon {e.detail['id']} inside open {open_[e.pid]}")
            open_[e.pid] = e.detail["id"]
        elif e.kind == "complete":
            if open_.get(e.pid) != e.detail["id"]:
                out.append(f"pid {e.pid}: completion {e.detail['id']} without matching beacon")
            open_[e.pid] = None
        elif e.kind == "finish" and open_.get(e.pid) is not None:
            out.append(f"pid {e.pid}: finished inside region {open_[e.pid]}")
    return out


def check_no_lost_jobs(trace: Trace) -> list[str]:
    arrived = trace.arrival_times()
    fin: dict[int, list[int]] = {}
    for e in trace.events:
        if e.kind == "finish":
            fin.setdefault(e.pid, []).append(e.time)
    out = []
    n = trace.header.get("processes")
    if n is not None and len(arrived) != n:
        out.append(f"{len(arrived)} arrivals for {n} processes")
    for pid, t in sorted(arrived.items()):
        ts = fin.get(pid, [])
        if len(ts) != 1:
            out.append(f"pid {pid}: {len(ts)} finish events")
        elif ts[0] < t:
            out.append(f"pid {pid}: finished before arriving")
    for pid in sorted(set(fin) - set(arrived)):
        out.append(f"pid {pid}: finished without arriving")
    return out


def check_work_accounting(trace: Trace) -> list[str]:
    """Occupancy never exceeds the core count and busy + idle covers cores x makespan."""
    out = []
    summary = [e for e in trace.events if e.kind == "summary"]
    if len(summary) != 1:
        return ["trace lacks a single summary event"]
    s = summary[0].detail
    cores = s["cores"]
    final: dict[int, _PState] = {}
    for t, _, st in _replay(trace):
        occ = sum(1 for p in st.values() if p.on_core)
        if occ > cores:
            out.append(f"t={t}: {occ} processes on {cores} cores")
        final = st
    reported = {e.pid: e.detail["on_core"] for e in trace.events if e.kind == "finish"}
    for pid, ps in sorted(final.items()):
        if ps.on_core:
            out.append(f"pid {pid}: still on a core at the end")
        if reported.get(pid) != ps.core_time:
            out.append(f"pid {pid}: on-core {reported.get(pid)} != replayed {ps.core_time}")
    busy = sum(p.core_time for p in final.values())
    if busy != s["busy"]:
        out.append(f"busy {s['busy']} != replayed {busy}")
    if s["busy"] + s["idle"] != cores * s["makespan"]:
        out.append(f"busy {s['busy']} + idle {s['idle']} != {cores} x {s['makespan']}")
    if s["makespan"] != trace.makespan:
        out.append("summary makespan differs from last finish")
    return out


def check_work_conservation(trace: Trace) -> list[str]:
    """No core idles while a ready job could be admitted without breaking an invariant.

    Ready jobs outside a loop region are fillers and always admissible;
    ready jobs inside a region are admissible when their kind matches the
    mode and their predicted demand fits next to the running loops.
    """
    m = trace.header["machine"]
    cores = m["cores"]
    cap = {"reuse": m["llc_bytes"], "stream": m["mem_bandwidth"]}
    key = {"reuse": "fp", "stream": "mu"}
    arrived: set[int] = set()
    mode = "bootstrap"
    out = []
    for t, evs, st in _replay(trace):
        for e in evs:
            if e.kind == "arrive":
                arrived.add(e.pid)
            elif e.kind == "mode":
                mode = e.detail["to"]
        free = cores - sum(1 for s in st.values() if s.on_core)
        if free <= 0:
            continue
        ready = [(pid, s) for pid, s in st.items()
                 if pid in arrived and not s.on_core and not s.done]
        for pid, s in ready:
            if s.region is None:
                out.append(f"t={t}: {free} idle cores while filler pid {pid} waits")
                break
            kind = s.region["reuse"]
            if kind != mode:
                continue
            act = _active(st, kind)
            d = s.region[key[kind]]
            solo = s.exclusive or d > cap[kind]
            blocked = any(x.oversize or x.exclusive for _, x in act)
            if solo:
                fits = not act
            else:
                used = sum(x.region[key[kind]] for _, x in act)
                fits = not blocked and used + d <= cap[kind] * (1 - 1e-9)
            if fits:
                out.append(f"t={t}: {free} idle cores while {kind} pid {pid} fits")
                break
    return out


_TRANSITIONS = {
    ("bootstrap", "reuse"): {"first_beacon"},
    ("bootstrap", "stream"): {"first_beacon"},
    ("reuse", "stream"): {"ST", "RC"},
    ("stream", "reuse"): {"RT", "SC"},
}


def check_mode_conformance(trace: Trace) -> list[str]:
    """Mode switches follow the reuse/stream machine and each mode admits its kind only."""
    out = []
    mode = "bootstrap"
    for t, evs, st in _replay(trace):
        for e in evs:
            if e.kind != "mode":
                continue
            d = e.detail
            if d["from"] != mode:
                out.append(f"t={t}: switch from {d['from']} while in {mode}")
            trig = d["trigger"]
            if trig not in _TRANSITIONS.get((d["from"], d["to"]), set()):
                out.append(f"t={t}: illegal switch {d['from']}->{d['to']} on {trig}")
            elif trig == "ST" and d["stream_q"] < d["st"]:
                out.append(f"t={t}: ST switch with {d['stream_q']} < {d['st']} queued")
            elif trig == "RT" and d["reuse_q"] < d["rt"]:
                out.append(f"t={t}: RT switch with {d['reuse_q']} < {d['rt']} queued")
            elif trig == "RC" and (d["reuse_active"] or not d["stream_q"]):
                out.append(f"t={t}: RC switch with reuse loops active or no streams queued")
            elif trig == "SC" and (d["stream_active"] or not d["reuse_q"]):
                out.append(f"t={t}: SC switch with streams active or no reuse queued")
            mode = d["to"]
        wrong = {"reuse": "stream", "stream": "reuse"}.get(mode)
        if mode == "bootstrap":
            if _active(st, "reuse") or _active(st, "stream"):
                out.append(f"t={t}: loop running before the first mode decision")
        elif wrong and _active(st, wrong):
            out.append(f"t={t}: {wrong} loop running in {mode} mode")
    return out


CHECKS = {
    "cache_safety": check_cache_safety,
    "bandwidth_safety": check_bandwidth_safety,
    "work_accounting": check_work_accounting,
    "work_conservation": check_work_conservation,
    "beacon_alternation": check_alternation,
    "mode_conformance": check_mode_conformance,
    "no_lost_jobs": check_no_lost_jobs,
}


def check_all(trace: Trace) -> dict[str, list[str]]:
    return {name: fn(trace) for name, fn in CHECKS.items()}
