"""Mini loop IR: node types, parser, printer, normalization and interpreter."""

from .interp import (
    CostModel,
    ExecutionProfile,
    Instrumentation,
    IRRuntimeError,
    NestRecord,
    RunawayLoopError,
    UnboundInputError,
    compile_program,
    interpret,
)
from .nodes import *  # noqa: F401,F403
from .normalize import flagged_loops, normalize_loops
from .parser import IRError, IRSemanticError, IRSyntaxError, parse_program
from .printer import pretty_print

__all__ = [
    "CostModel", "ExecutionProfile", "Instrumentation", "IRRuntimeError", "NestRecord",
    "RunawayLoopError", "UnboundInputError", "compile_program", "interpret",
    "flagged_loops", "normalize_loops", "IRError", "IRSemanticError", "IRSyntaxError",
    "parse_program", "pretty_print",
]
