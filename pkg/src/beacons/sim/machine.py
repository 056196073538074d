"""Machine description and simulator constants."""

from __future__ import annotations

from dataclasses import asdict, dataclass

MB = 1024 * 1024


@dataclass(frozen=True)
class MachineConfig:
    """Cores, shared LLC and memory bandwidth (bytes per time unit).

    Beacon overheads are the scheduler-side processing costs charged to the
    emitting process, in time units.
    """

    cores: int = 8
    llc_bytes: int = 32 * MB
    mem_bandwidth: float = 16384.0
    overhead_complete: int = 116
    overhead_reuse: int = 427
    overhead_stream: int = 292
    interference: float = 0.5
    l1_bytes: int = 32 * 1024

    def __post_init__(self) -> None:
        for k, v in asdict(self).items():
            if k != "interference" and v <= 0:
                raise ValueError(f"machine {k} must be positive, got {v}")
        if not 0 < self.interference <= 1:
            raise ValueError("interference must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)
