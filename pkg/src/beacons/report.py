"""Throughput reports and completion histograms over schedule traces."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .sim.trace import Trace

REPORT_SCHEMA_VERSION = 1


class WorkloadMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ThroughputRow:
    benchmark: str
    name: str
    scheduler: str
    jobs: int
    makespan: int
    throughput: float
    ratio: float


@dataclass
class ThroughputReport:
    baseline: str
    rows: list[ThroughputRow]

    def geomean(self) -> dict[str, float]:
        """Geometric mean of positive normalized ratios per trace name."""
        acc: dict[str, list[float]] = {}
        for r in self.rows:
            if r.ratio > 0:
                acc.setdefault(r.name, []).append(math.log(r.ratio))
        return {k: math.exp(sum(v) / len(v)) for k, v in sorted(acc.items())}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema_version: {REPORT_SCHEMA_VERSION}\n# baseline: {self.baseline}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["benchmark", "name", "scheduler", "jobs", "makespan", "jobs_per_unit_time",
                     "normalized_vs_baseline"])
        for r in self.rows:
            w.writerow([r.benchmark, r.name, r.scheduler, r.jobs, r.makespan,
                        f"{r.throughput:.9g}", f"{r.ratio:.9g}"])
        for name, g in self.geomean().items():
            w.writerow(["geomean", name, "", "", "", "", f"{g:.9g}"])
        return buf.getvalue()


@dataclass
class CompletionHistogram:
    width: int
    counts: dict[str, list[int]]

    @property
    def edges(self) -> list[int]:
        n = max((len(c) for c in self.counts.values()), default=0)
        return [k * self.width for k in range(n)]

    def to_csv(self) -> str:
        names = list(self.counts)
        buf = io.StringIO()
        buf.write(f"# schema_version: {REPORT_SCHEMA_VERSION}\n# bucket_width: {self.width}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bucket_start", *names])
        for k, edge in enumerate(self.edges):
            w.writerow([edge, *(self.counts[n][k] if k < len(self.counts[n]) else 0
                                for n in names)])
        return buf.getvalue()

    def gnuplot(self, data_file: str) -> str:
        names = list(self.counts)
        plots = ", ".join(f"'{data_file}' using 1:{i + 2} with steps title '{n}'"
                          for i, n in enumerate(names))
        return ("set datafile separator ','\nset key autotitle columnhead\n"
                "set xlabel 'time'\nset ylabel 'jobs completed'\n"
                f"plot {plots}\n")


def _check_same_workload(traces: Mapping[str, Trace]) -> None:
    seen: Optional[tuple] = None
    first = ""
    for name, t in traces.items():
        key = (t.header.get("workload"), t.header.get("processes"))
        if seen is None:
            seen, first = key, name
        elif key != seen:
            raise WorkloadMismatch(f"trace {name!r} covers workload {key[0]} with {key[1]} "
                                   f"processes; {first!r} covers {seen[0]} with {seen[1]}")


def completion_histogram(traces: Mapping[str, Trace],
                         width: Optional[int] = None) -> CompletionHistogram:
    if not traces:
        raise ValueError("no traces")
    span = max(t.makespan for t in traces.values())
    if width is None:
        width = max(1, math.ceil(span / 100))
    if width <= 0:
        raise ValueError("bucket width must be positive")
    n = span // width + 1
    counts = {}
    for name, t in traces.items():
        c = [0] * n
        for when in t.completion_times().values():
            c[when // width] += 1
        counts[name] = c
    return CompletionHistogram(width, counts)


def build_report(traces: Mapping[str, Trace], baseline: str, *, benchmark: str = "",
                 bin_width: Optional[int] = None) -> tuple[ThroughputReport, CompletionHistogram]:
    """Normalized throughput (baseline makespan / makespan) and finish histogram."""
    if baseline not in traces:
        raise ValueError(f"baseline {baseline!r} is not among the traces {sorted(traces)}")
    _check_same_workload(traces)
    base = traces[baseline].makespan
    rows = []
    for name, t in traces.items():
        jobs = len(t.completion_times())
        ms = t.makespan
        rows.append(ThroughputRow(benchmark, name, t.header.get("scheduler", ""), jobs, ms,
                                  jobs / ms if ms else 0.0, base / ms if ms else 0.0))
    return ThroughputReport(baseline, rows), completion_histogram(traces, bin_width)


def suite_report(suite: Mapping[str, Mapping[str, Trace]], baseline: str) -> ThroughputReport:
    """Per-benchmark rows over several workloads, each normalized to its own baseline."""
    rows: list[ThroughputRow] = []
    for bench, traces in suite.items():
        rows.extend(build_report(traces, baseline, benchmark=bench)[0].rows)
    return ThroughputReport(baseline, rows)


@dataclass(frozen=True)
class PhaseClassification:
    total: int
    misclassified: int

    @property
    def fraction(self) -> float:
        return self.misclassified / self.total if self.total else 0.0


def loop_phases(trace: Trace, kind: str) -> list[tuple[int, int, int]]:
    """(pid, start, end) of every phase of ``kind`` in a trace."""
    out = []
    cur: dict[int, tuple[str, int]] = {}
    for e in trace.events:
        if e.kind in ("phase", "finish") and e.pid in cur:
            k, s = cur.pop(e.pid)
            if k == kind:
                out.append((e.pid, s, e.time))
        if e.kind == "phase":
            cur[e.pid] = (e.detail["kind"], e.time)
    return out


def reuse_phase_classification(trace: Trace) -> PhaseClassification:
    """Count reuse phases that no ``classify: reuse`` event landed inside.

    A phase [s, e] is correctly classified when the scheduler labelled
    the process reuse at some t with s < t <= e.
    """
    labels: dict[int, list[int]] = {}
    for e in trace.events:
        if e.kind == "classify" and e.detail.get("cls") == "reuse":
            labels.setdefault(e.pid, []).append(e.time)
    phases = loop_phases(trace, "reuse")
    miss = sum(1 for pid, s, t in phases
               if not any(s < x <= t for x in labels.get(pid, ())))
    return PhaseClassification(len(phases), miss)
