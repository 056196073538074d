"""Synthetic performance counters for the reactive baseline.

Per phase kind (misses per thousand instructions; one work unit is 1000
instructions):

* non-cache-pressure: L2 MPKI 0.5, LLC MPKI 0
* streaming: L2 MPKI 40, MF 0.4
* reuse: L2 MPKI 20; MF 0.05 while the effective overflow factor
  o = F / llc (doubled when streams co-run) is at most 1, otherwise
  0.6 + 0.4 * (1 - 1/o)

MF = LLC MPKI / L2 MPKI, so MF > 0.6 exactly when o > 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .process import NCP, OVERHEAD, REUSE, STREAM

L2_MPKI = {NCP: 0.5, OVERHEAD: 0.5, STREAM: 40.0, REUSE: 20.0}
STREAM_MF = 0.4
FIT_MF = 0.05
MF_THRESHOLD = 0.6
INTENSITY_THRESHOLD = 5.0


def memory_factor(kind: str, overflow: float) -> float:
    if kind == STREAM:
        return STREAM_MF
    if kind == REUSE:
        if overflow <= 1.0:
            return FIT_MF
        return MF_THRESHOLD + 0.4 * (1.0 - 1.0 / overflow)
    return 0.0


def phase_mpki(kind: str, overflow: float) -> tuple[float, float]:
    """(L2 MPKI, LLC MPKI) of a phase at a given effective overflow factor."""
    l2 = L2_MPKI[kind]
    return l2, l2 * memory_factor(kind, overflow)


@dataclass(frozen=True)
class CounterSample:
    instructions: float
    l2_misses: float
    llc_misses: float

    @property
    def mpki_llc(self) -> float:
        return 1000.0 * self.llc_misses / self.instructions if self.instructions else 0.0

    @property
    def mpki_l2(self) -> float:
        return 1000.0 * self.l2_misses / self.instructions if self.instructions else 0.0

    @property
    def mf(self) -> float:
        return self.llc_misses / self.l2_misses if self.l2_misses else 0.0

    def __sub__(self, other: "CounterSample") -> "CounterSample":
        return CounterSample(self.instructions - other.instructions,
                             self.l2_misses - other.l2_misses,
                             self.llc_misses - other.llc_misses)


ZERO = CounterSample(0.0, 0.0, 0.0)


def classify(sample: CounterSample) -> str:
    """filler | reuse | stream from a counter window."""
    if sample.instructions <= 0 or sample.mpki_llc < INTENSITY_THRESHOLD:
        return "filler"
    return "reuse" if sample.mf > MF_THRESHOLD else "stream"
