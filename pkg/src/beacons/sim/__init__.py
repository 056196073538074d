"""Deterministic many-core co-scheduling simulator."""

from .channel import BEACON, INIT, LOOP_COMPLETE, BeaconChannel, BeaconMessage, ProtocolError
from .checks import CHECKS, check_all
from .counters import CounterSample, classify, memory_factor, phase_mpki
from .engine import (
    Controller,
    Engine,
    ProtocolViolation,
    SimResult,
    SimulationError,
    expand_phases,
    simulate,
    workload_fingerprint,
)
from .machine import MB, MachineConfig
from .process import (
    KNOWN,
    NCP,
    OVERHEAD,
    REUSE,
    STREAM,
    UNKNOWN,
    BeaconInfo,
    Phase,
    SimProcess,
    process_from_program,
)
from .trace import Trace, TraceEvent
from .workload import WorkloadError, random_workload, synth_workload

__all__ = [name for name in dir() if not name.startswith("_")]
