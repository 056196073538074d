"""Beacon placement, inter-procedural hoisting and the footprint/time filter."""

from __future__ import annotations

import graphlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .analysis import NestAnalysis
from .footprint import FootprintUnknown, NestFootprint, ReuseClass, ReuseResult
from .ir.interp import Instrumentation, call_sites
from .ir.nodes import RETURN_TARGET, Loop, Program, iter_stmts
from .ir.printer import INDENT, format_stmt
from .predictors.models import KNOWN, UNKNOWN, ProgramModels

log = logging.getLogger(__name__)

MIN_FOOTPRINT_BYTES = 32 * 1024
MIN_TIME_UNITS = 10_000
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Component:
    """A nest whose model contributes to a beacon, evaluated live or at training means."""

    nest_id: str
    live: bool = True


@dataclass
class BeaconDescriptor:
    id: str
    function: str
    point: str  # "nest:<label>" or "call:<site id>"
    nests: list[str]
    timing: list[Component]
    footprint: list[Component]
    reuse: str
    precision: str
    completions: list[str]
    hoisted: bool = False
    removed: bool = False
    removed_reason: str = ""
    callee: Optional[str] = None

    @property
    def active(self) -> bool:
        return not self.removed

    def to_json(self) -> dict:
        return {
            "id": self.id, "function": self.function, "point": self.point,
            "nests": self.nests,
            "timing": [[c.nest_id, c.live] for c in self.timing],
            "footprint": [[c.nest_id, c.live] for c in self.footprint],
            "reuse": self.reuse, "precision": self.precision,
            "completions": self.completions, "hoisted": self.hoisted,
            "removed": self.removed, "removed_reason": self.removed_reason,
            "callee": self.callee,
        }

    @classmethod
    def from_json(cls, d: dict) -> "BeaconDescriptor":
        return cls(d["id"], d["function"], d["point"], list(d["nests"]),
                   [Component(n, l) for n, l in d["timing"]],
                   [Component(n, l) for n, l in d["footprint"]],
                   d["reuse"], d["precision"], list(d["completions"]), d["hoisted"],
                   d["removed"], d["removed_reason"], d.get("callee"))


@dataclass
class Artifacts:
    """Everything beacon evaluation needs about one program."""

    program: Program
    analyses: dict[str, NestAnalysis]
    models: ProgramModels
    footprints: dict[str, NestFootprint]
    reuse: dict[str, ReuseResult]


@dataclass
class InstrumentedProgram:
    program: Program
    beacons: list[BeaconDescriptor]
    warnings: list[str] = field(default_factory=list)

    @property
    def active(self) -> list[BeaconDescriptor]:
        return [b for b in self.beacons if b.active]

    def beacon(self, bid: str) -> BeaconDescriptor:
        for b in self.beacons:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def instrumentation(self) -> Instrumentation:
        ins = Instrumentation()
        for b in self.active:
            kind, _, where = b.point.partition(":")
            if kind == "nest":
                ins.nest_beacons[f"{b.function}:{where}"] = b.id
            else:
                ins.call_beacons.setdefault(where, []).append(b.id)
        return ins

    def table_json(self) -> dict:
        return {"schema_version": SCHEMA_VERSION,
                "beacons": [b.to_json() for b in self.beacons],
                "warnings": self.warnings}

    def to_bir(self) -> str:
        return instrumented_text(self)


def _exit_ids(nest) -> list[str]:
    out = ["fallthrough"]
    for k, ex in enumerate(nest.exits):
        out.append("return" if ex.target == RETURN_TARGET else f"exit{k}")
    return list(dict.fromkeys(out))


def place_beacons(art: Artifacts) -> InstrumentedProgram:
    """One beacon per outermost nest, with a completion point at every exit."""
    beacons = []
    k = 0
    for f in art.program.functions:
        for nest in f.nests():
            nid = nest.id
            m = art.models.nests.get(nid)
            precision = m.precision if m is not None else UNKNOWN
            r = art.reuse.get(nid)
            reuse = r.klass.value if r is not None else ReuseClass.STREAMING.value
            beacons.append(BeaconDescriptor(
                f"b{k}", f.name, f"nest:{nest.root.label}", [nid],
                [Component(nid)], [Component(nid)], reuse, precision, _exit_ids(nest)))
            k += 1
    return InstrumentedProgram(art.program, beacons)


def _site_index(p: Program) -> dict[str, list[tuple[str, str, Optional[str]]]]:
    """callee -> [(caller, site id, enclosing caller nest id or None)]."""
    out: dict[str, list] = {}
    for f in p.functions:
        loop_stmts: dict[int, str] = {}
        for nest in f.nests():
            for s in iter_stmts(nest.root.body):
                loop_stmts[id(s)] = nest.id
            loop_stmts[id(nest.root)] = nest.id
        for sid, callee, stmt in call_sites(f):
            if p.extern(callee) is not None:
                continue
            out.setdefault(callee, []).append((f.name, sid, loop_stmts.get(id(stmt))))
    return out


def _recursive_functions(p: Program) -> set[str]:
    """Functions that can reach themselves through calls."""
    graph: dict[str, set[str]] = {f.name: set() for f in p.functions}
    for f in p.functions:
        for _, callee, _ in call_sites(f):
            if callee in graph:
                graph[f.name].add(callee)
    try:
        graphlib.TopologicalSorter(graph).prepare()
        return set()
    except graphlib.CycleError:
        pass
    out = set()
    for start in graph:
        seen: set[str] = set()
        stack = list(graph[start])
        while stack:
            x = stack.pop()
            if x == start:
                out.add(start)
                break
            if x not in seen:
                seen.add(x)
                stack.extend(graph[x])
    return out


def hoist_interprocedural(ip: InstrumentedProgram) -> InstrumentedProgram:
    """Move callee beacons out of callers' loops until none remains inside one.

    A callee beacon reached from a caller loop is merged into that loop
    nest's beacon (footprints added at training means, timing from the
    caller nest, reuse if any part is reuse, precision unknown). A callee
    beacon reached only from straight-line code moves above the call site.
    Functions on a recursive cycle keep their beacons, downgraded to unknown.
    """
    p = ip.program
    beacons = [replace(b) for b in ip.beacons]
    warnings = list(ip.warnings)
    rec = _recursive_functions(p)
    for b in beacons:
        if b.function in rec and b.active:
            b.precision = UNKNOWN
            msg = f"beacon {b.id} in recursive function {b.function!r} not hoisted"
            warnings.append(msg)
            log.warning(msg)
    sites = _site_index(p)
    counter = len(beacons)
    changed = True
    while changed:
        changed = False
        for b in list(beacons):
            if not b.active or b.function in rec or b.function not in sites:
                continue
            callers = [s for s in sites[b.function] if s[0] not in rec]
            if not callers:
                continue
            for caller, sid, nest_id in callers:
                if nest_id is not None:
                    host = _nest_beacon(beacons, caller, nest_id)
                    if host is None:
                        continue
                    host.nests = list(dict.fromkeys(host.nests + b.nests))
                    host.footprint = list(dict.fromkeys(
                        host.footprint + [Component(c.nest_id, False) for c in b.footprint]))
                    if b.reuse == ReuseClass.REUSE.value:
                        host.reuse = ReuseClass.REUSE.value
                    host.precision = UNKNOWN
                    host.hoisted = True
                else:
                    direct = b.point.startswith("nest:")
                    beacons.append(BeaconDescriptor(
                        f"b{counter}", caller, f"call:{sid}", list(b.nests),
                        [Component(c.nest_id, c.live and direct) for c in b.timing],
                        [Component(c.nest_id, c.live and direct) for c in b.footprint],
                        b.reuse, b.precision if direct else UNKNOWN, ["fallthrough"],
                        hoisted=True, callee=b.function))
                    counter += 1
            b.removed = True
            b.removed_reason = "hoisted"
            changed = True
    return InstrumentedProgram(p, beacons, warnings)


def _nest_beacon(beacons, function: str, nest_id: str) -> Optional[BeaconDescriptor]:
    label = nest_id.split(":", 1)[1]
    for b in beacons:
        if b.active and b.function == function and b.point == f"nest:{label}":
            return b
    return None


# ----------------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BeaconEstimate:
    time: float
    footprint: float
    reuse: str
    precision: str


def _extent_overrides(nest, totals) -> dict[str, int]:
    out = {}
    prev = 1.0
    for lv, tot in zip(nest.levels, totals):
        ratio = 0 if prev == 0 else tot / prev
        for loop in lv:
            out[loop.label] = max(0, int(round(ratio)))
        prev = tot
    return out


def _mean_env(env: Mapping[str, float]) -> dict[str, int]:
    return {k: int(round(v)) for k, v in env.items()}


def evaluate_beacon(b: BeaconDescriptor, env: Mapping[str, int], art: Artifacts) -> BeaconEstimate:
    """Predicted time and footprint of a beacon region for live values ``env``."""
    precise = b.precision == KNOWN
    time = 0.0
    for c in b.timing:
        m = art.models.nests.get(c.nest_id)
        if m is None:
            precise = False
            continue
        values = env if c.live else _mean_env(m.mean_env)
        tp, t = m.predict(values)
        precise &= tp.precise
        time += t
    fp = 0.0
    for c in b.footprint:
        fpm = art.footprints.get(c.nest_id)
        m = art.models.nests.get(c.nest_id)
        if fpm is None:
            continue
        values = dict(env) if c.live else (_mean_env(m.mean_env) if m else {})
        try:
            fp += fpm.bytes_at(values)
        except (FootprintUnknown, ZeroDivisionError):
            if m is None:
                precise = False
                continue
            tp, _ = m.predict(values)
            nest = art.program.nest(c.nest_id)
            try:
                fp += fpm.bytes_at(values, _extent_overrides(nest, tp.totals))
            except FootprintUnknown:
                fp += fpm.bytes_at(_mean_env(m.mean_env), _extent_overrides(nest, tp.totals))
                precise = False
    return BeaconEstimate(time, fp, b.reuse, KNOWN if precise else UNKNOWN)


def expected_estimate(b: BeaconDescriptor, art: Artifacts) -> Optional[BeaconEstimate]:
    """Estimate at training means of the first timing component's model."""
    for c in b.timing:
        m = art.models.nests.get(c.nest_id)
        if m is not None:
            return evaluate_beacon(b, _mean_env(m.mean_env), art)
    return None


def filter_beacons(ip: InstrumentedProgram, art: Artifacts,
                   min_footprint: float = MIN_FOOTPRINT_BYTES,
                   min_time: float = MIN_TIME_UNITS) -> InstrumentedProgram:
    """Drop beacons whose expected footprint or time is not above the thresholds."""
    out = []
    for b in ip.beacons:
        b = replace(b)
        if b.active:
            est = expected_estimate(b, art)
            if est is None:
                b.removed, b.removed_reason = True, "no training profile"
            elif est.footprint <= min_footprint:
                b.removed, b.removed_reason = True, f"footprint {est.footprint:.0f} B"
            elif est.time <= min_time:
                b.removed, b.removed_reason = True, f"time {est.time:.0f} units"
        out.append(b)
    return InstrumentedProgram(ip.program, out, list(ip.warnings))


# ----------------------------------------------------------------------------
# Text form
# ----------------------------------------------------------------------------

_ANNOT = re.compile(r"^\s*(beacon|complete) [A-Za-z_][A-Za-z0-9_]*;\s*\n", re.M)


def instrumented_text(ip: InstrumentedProgram) -> str:
    """``.bir`` text with ``beacon``/``complete`` pseudo-statements around regions."""
    ins = ip.instrumentation()
    p = ip.program
    lines: list[str] = []
    for a in p.arrays:
        lines.append(f"array {a.name} elsize {a.elsize};")
    for x in p.externs:
        lines.append(f"extern {x.name}({', '.join(x.params)}){' pure' if x.pure else ''};")
    lines.append(f"entry {p.entry};")
    for f in p.functions:
        lines.append("")
        lines.append(f"func {f.name}({', '.join(f.params)}) {{")
        sites = {id(s): sid for sid, _, s in call_sites(f)}
        for s in f.body:
            pad = INDENT
            pre: list[str] = []
            if isinstance(s, Loop):
                bid = ins.nest_beacons.get(f"{f.name}:{s.label}")
                pre = [bid] if bid else []
            elif id(s) in sites:
                pre = [bid for sid, _, st in call_sites(f) if st is s
                       for bid in ins.call_beacons.get(sid, [])]
            for bid in pre:
                lines.append(f"{pad}beacon {bid};")
            lines.extend(format_stmt(s, 1))
            for bid in reversed(pre):
                lines.append(f"{pad}complete {bid};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def strip_annotations(text: str) -> str:
    return _ANNOT.sub("", text)
