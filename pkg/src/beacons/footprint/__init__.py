"""Footprint counting and reuse classification."""

from .counting import AP, intersect, union_count
from .model import FootprintValue, NestFootprint, count_footprint, footprint_report, nest_footprint
from .relations import AccessRelation, FootprintUnknown, IrregularAccess, build_relations
from .reuse import ReuseClass, ReuseResult, SRDEvidence, classify_reuse

__all__ = [
    "AP", "intersect", "union_count", "FootprintValue", "NestFootprint", "count_footprint",
    "footprint_report", "nest_footprint", "AccessRelation", "FootprintUnknown",
    "IrregularAccess", "build_relations", "ReuseClass", "ReuseResult", "SRDEvidence",
    "classify_reuse",
]
