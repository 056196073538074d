"""Experiment configuration files (TOML)."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .schedulers import SCHEDULERS, Scheduler, make_scheduler
from .sim.machine import MB, MachineConfig
from .sim.process import SimProcess
from .sim.workload import WorkloadError, synth_workload


class ConfigError(ValueError):
    pass


@dataclass
class Experiment:
    name: str
    machine: MachineConfig
    workload: dict
    schedulers: list[str]
    scheduler_params: dict[str, dict] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [0])
    base_dir: Path = Path(".")

    def scheduler(self, name: str) -> Scheduler:
        return make_scheduler(name, **self.scheduler_params.get(name, {}))

    def processes(self, seed: int) -> list[SimProcess]:
        return build_workload(self.workload, seed, self.base_dir)


def _machine(d: Mapping[str, Any]) -> MachineConfig:
    d = dict(d)
    if "llc_mb" in d:
        d["llc_bytes"] = int(float(d.pop("llc_mb")) * MB)
    try:
        return MachineConfig(**d)
    except TypeError as e:
        raise ConfigError(f"bad [machine] section: {e}") from None


def parse_experiment(data: Mapping[str, Any], base_dir: Union[str, Path] = ".") -> Experiment:
    exp = data.get("experiment", {})
    scheds = list(exp.get("schedulers", ["bes", "cfs"]))
    for s in scheds:
        if s not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {s!r}; choose from {sorted(SCHEDULERS)}")
    params = {k: dict(v) for k, v in data.get("scheduler", {}).items()}
    for k in params:
        if k not in SCHEDULERS:
            raise ConfigError(f"parameters given for unknown scheduler {k!r}")
    seeds = [int(s) for s in exp.get("seeds", [0])]
    if "workload" not in data:
        raise ConfigError("config lacks a [workload] section")
    e = Experiment(exp.get("name", "experiment"), _machine(data.get("machine", {})),
                   dict(data["workload"]), scheds, params, seeds, Path(base_dir))
    for name in scheds:
        try:
            e.scheduler(name)
        except TypeError as err:
            raise ConfigError(f"bad [scheduler.{name}] parameters: {err}") from None
    return e


def load_experiment(path: Union[str, Path]) -> Experiment:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_experiment(data, path.parent)


def build_workload(spec: Mapping[str, Any], seed: int, base_dir: Path = Path(".")) -> list[SimProcess]:
    """Synthetic groups plus program groups (``program = "file.bir"``)."""
    synth = [g for g in spec.get("groups", []) if "program" not in g]
    progs = [g for g in spec.get("groups", []) if "program" in g]
    procs = synth_workload({"groups": synth}, seed) if synth else []
    pid = len(procs)
    for g in progs:
        procs.extend(_program_group(g, base_dir, pid))
        pid = len(procs)
    if not procs:
        raise WorkloadError("workload has zero processes")
    return procs


def _program_group(g: Mapping[str, Any], base_dir: Path, first_pid: int) -> list[SimProcess]:
    from .ir.parser import parse_program
    from .pipeline import compile_pipeline
    from .sim.process import process_from_program

    path = base_dir / g["program"]
    program = parse_program(path.read_text())
    train = [dict(x) for x in g.get("train", [])]
    inputs = [dict(x) for x in g.get("inputs", [])]
    if not train or not inputs:
        raise ConfigError(f"program group {g['program']!r} needs train and inputs tables")
    res = compile_pipeline(program, train,
                           min_footprint=g.get("min_footprint", 32768),
                           min_time=g.get("min_time", 10000))
    count = int(g.get("count", len(inputs)))
    arrival = int(g.get("arrival", 0))
    return [process_from_program(first_pid + k, res.instrumented, res.artifacts,
                                 inputs[k % len(inputs)], arrival, group=g.get("name", path.stem))
            for k in range(count)]
