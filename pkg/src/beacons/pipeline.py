"""End-to-end compile-side pipeline: normalize, analyze, profile, train, instrument."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .analysis import analyze_program
from .footprint import classify_reuse, nest_footprint
from .instrument import (
    MIN_FOOTPRINT_BYTES,
    MIN_TIME_UNITS,
    Artifacts,
    InstrumentedProgram,
    filter_beacons,
    hoist_interprocedural,
    place_beacons,
)
from .ir.interp import CostModel, NestRecord, compile_program, interpret
from .ir.nodes import Program
from .ir.normalize import normalize_loops
from .predictors.models import DEFAULT_THRESHOLD, ProgramModels, rows_from_records, train_program


@dataclass
class CompileResult:
    artifacts: Artifacts
    instrumented: InstrumentedProgram
    records: list[NestRecord]


def profile(program: Program, inputs: Sequence[Mapping[str, int]],
            cost: CostModel = CostModel()) -> list[NestRecord]:
    compiled = compile_program(program, cost)
    records: list[NestRecord] = []
    for inp in inputs:
        records.extend(interpret(program, inp, cost, compiled=compiled).records)
    return records


def static_artifacts(program: Program, models: Optional[ProgramModels] = None) -> Artifacts:
    """Analyses, footprints and reuse classes (models optional)."""
    analyses = {a.nest_id: a for a in analyze_program(program)}
    fps = {nid: nest_footprint(a.nest, program) for nid, a in analyses.items()}
    reuse = {nid: classify_reuse(a.nest, program) for nid, a in analyses.items()}
    if models is None:
        from .predictors.models import program_fingerprint
        models = ProgramModels(program_fingerprint(program), {})
    return Artifacts(program, analyses, models, fps, reuse)


def train(program: Program, records: Sequence[NestRecord],
          threshold: int = DEFAULT_THRESHOLD, seed: int = 0) -> Artifacts:
    art = static_artifacts(program)
    art.models = train_program(program, art.analyses.values(), rows_from_records(records),
                               threshold, seed)
    return art


def instrument(art: Artifacts, min_footprint: float = MIN_FOOTPRINT_BYTES,
               min_time: float = MIN_TIME_UNITS) -> InstrumentedProgram:
    ip = place_beacons(art)
    ip = hoist_interprocedural(ip)
    return filter_beacons(ip, art, min_footprint, min_time)


def compile_pipeline(program: Program, training_inputs: Sequence[Mapping[str, int]],
                     cost: CostModel = CostModel(), *, threshold: int = DEFAULT_THRESHOLD,
                     min_footprint: float = MIN_FOOTPRINT_BYTES,
                     min_time: float = MIN_TIME_UNITS) -> CompileResult:
    program = normalize_loops(program)
    records = profile(program, training_inputs, cost)
    art = train(program, records, threshold)
    return CompileResult(art, instrument(art, min_footprint, min_time), records)
