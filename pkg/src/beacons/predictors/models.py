"""Per-nest prediction models, training from profiles, and JSON persistence."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from ..analysis import LoopClass, ModelParameters, NestAnalysis
from ..ir.nodes import LoopNest, Program
from ..ir.printer import pretty_print
from .rules import RuleModel
from .symbolic import UnboundParameter, level_totals
from .timing import TimingModel, fit_timing, predict_time
from .tree import DecisionTree

SCHEMA_VERSION = 1
DEFAULT_THRESHOLD = 5
KNOWN = "known_inferred"
UNKNOWN = "unknown"


@dataclass
class TrainingRow:
    values: dict[str, int]
    totals: tuple[int, ...]
    elapsed: float

    @property
    def trips(self) -> tuple:
        return totals_to_trips(self.totals)


def totals_to_trips(totals: Sequence) -> tuple:
    out = []
    prev = 1
    for t in totals:
        out.append(0 if prev == 0 else Fraction(t) / Fraction(prev))
        prev = t
    return tuple(float(x) for x in out)


@dataclass
class Symbolic:
    nest: LoopNest
    kind = "symbolic"


@dataclass
class Tree:
    tree: DecisionTree
    params: tuple[str, ...]
    kind = "tree"


@dataclass
class Rules:
    rules: RuleModel
    params: tuple[str, ...]
    opaque: bool = False
    kind = "rules"


TripCountModel = Union[Symbolic, Tree, Rules]


@dataclass(frozen=True)
class TripPrediction:
    totals: tuple[float, ...]
    precise: bool = True

    @property
    def trips(self) -> tuple[float, ...]:
        return totals_to_trips(self.totals)


@dataclass
class TripFit:
    model: TripCountModel
    accuracy: Optional[float]
    n_train: int
    n_test: int


def split_rows(rows: Sequence, seed: int = 0, frac: float = 0.8) -> tuple[list, list]:
    idx = list(range(len(rows)))
    random.Random(seed).shuffle(idx)
    k = int(round(frac * len(rows)))
    return [rows[i] for i in idx[:k]], [rows[i] for i in idx[k:]]


def _features(values: Mapping[str, int], names: Sequence[str]) -> list[float]:
    return [float(values[n]) for n in names]


def _fit_once(rows: Sequence[TrainingRow], names: tuple[str, ...], use_tree: bool,
              opaque: bool) -> TripCountModel:
    if use_tree:
        X = [_features(r.values, names) for r in rows]
        y = [tuple(r.totals) for r in rows]
        return Tree(DecisionTree().fit(X, y), names)
    pats = [tuple(r.values[n] for n in names) for r in rows]
    return Rules(RuleModel.fit(pats, [r.totals for r in rows]), names, opaque)


def fit_trip_model(rows: Sequence[TrainingRow], params: ModelParameters,
                   threshold: int = DEFAULT_THRESHOLD, seed: int = 0) -> TripFit:
    """Decision tree when there are more than ``threshold`` rows and no opaque
    parameter, else a rule model. Accuracy is exact-match on a held-out 20%."""
    if not rows:
        raise ValueError("no training rows")
    names = tuple(params.names)
    rows = [r for r in rows if all(n in r.values for n in names)] or list(rows)
    use_tree = len(rows) > threshold and not params.opaque
    train, test = split_rows(rows, seed)
    accuracy = None
    if test and train:
        probe = _fit_once(train, names, use_tree, params.opaque)
        hits = 0
        for r in test:
            pred = predict_trips(probe, r.values)
            hits += tuple(round(x) for x in pred.totals) == tuple(r.totals)
        accuracy = hits / len(test)
    model = _fit_once(rows, names, use_tree, params.opaque)
    return TripFit(model, accuracy, len(train), len(test))


def predict_trips(m: TripCountModel, values: Mapping[str, int]) -> TripPrediction:
    """Trip totals per level; ``precise`` is false when a parameter is unbound."""
    try:
        if isinstance(m, Symbolic):
            return TripPrediction(tuple(float(t) for t in level_totals(m.nest, values)))
        if isinstance(m, Tree):
            return TripPrediction(tuple(float(x) for x in
                                        m.tree.predict_one(_features(values, m.params))))
        pat = tuple(values[n] for n in m.params)
        return TripPrediction(m.rules.predict(pat))
    except (KeyError, UnboundParameter):
        if isinstance(m, Rules):
            return TripPrediction(m.rules.clamp(m.rules.mean), False)
        if isinstance(m, Tree):
            lab = m.tree.classes[len(m.tree.classes) // 2]
            return TripPrediction(tuple(float(x) for x in lab), False)
        return TripPrediction(tuple(0.0 for _ in range(m.nest.depth)), False)


@dataclass
class NestModel:
    nest_id: str
    klass: LoopClass
    params: tuple[str, ...]
    trip: TripCountModel
    timing: TimingModel
    precision: str = KNOWN
    mean_env: dict[str, float] = field(default_factory=dict)
    accuracy: Optional[float] = None
    n_rows: int = 0

    def predict(self, values: Mapping[str, int]) -> tuple[TripPrediction, float]:
        tp = predict_trips(self.trip, values)
        return tp, predict_time(self.timing, tp.trips)

    def to_json(self) -> dict:
        d = {
            "nest": self.nest_id, "class": self.klass.value, "params": list(self.params),
            "precision": self.precision, "mean_env": self.mean_env,
            "accuracy": self.accuracy, "rows": self.n_rows,
            "timing": self.timing.to_json(), "trip": {"kind": self.trip.kind},
        }
        if isinstance(self.trip, Tree):
            d["trip"].update(tree=self.trip.tree.to_json(), params=list(self.trip.params))
        elif isinstance(self.trip, Rules):
            d["trip"].update(rules=self.trip.rules.to_json(), params=list(self.trip.params),
                             opaque=self.trip.opaque)
        return d

    @classmethod
    def from_json(cls, d: dict, program: Program) -> "NestModel":
        t = d["trip"]
        if t["kind"] == "symbolic":
            trip: TripCountModel = Symbolic(program.nest(d["nest"]))
        elif t["kind"] == "tree":
            trip = Tree(DecisionTree.from_json(t["tree"]), tuple(t["params"]))
        else:
            trip = Rules(RuleModel.from_json(t["rules"]), tuple(t["params"]), t["opaque"])
        return cls(d["nest"], LoopClass(d["class"]), tuple(d["params"]), trip,
                   TimingModel.from_json(d["timing"]), d["precision"], d["mean_env"],
                   d["accuracy"], d["rows"])


def program_fingerprint(p: Program) -> str:
    return hashlib.sha256(pretty_print(p).encode()).hexdigest()[:16]


@dataclass
class ProgramModels:
    fingerprint: str
    nests: dict[str, NestModel]

    def to_json(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "program": self.fingerprint,
                "nests": [self.nests[k].to_json() for k in sorted(self.nests)]}

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path, program: Program) -> "ProgramModels":
        with open(path) as fh:
            d = json.load(fh)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"models schema_version {d.get('schema_version')!r}, "
                             f"expected {SCHEMA_VERSION}")
        if d["program"] != program_fingerprint(program):
            raise ValueError("models were trained on a different program")
        nests = {n["nest"]: NestModel.from_json(n, program) for n in d["nests"]}
        return cls(d["program"], nests)


def train_nest(analysis: NestAnalysis, rows: Sequence[TrainingRow],
               threshold: int = DEFAULT_THRESHOLD, seed: int = 0) -> NestModel:
    nest = analysis.nest
    if not rows:
        raise ValueError(f"no profile rows for nest {nest.id}")
    timing = fit_timing([(r.trips, r.elapsed) for r in rows], nest.depth)
    keys = sorted({k for r in rows for k in r.values})
    mean_env = {k: sum(r.values.get(k, 0) for r in rows) / len(rows) for k in keys}
    precision = KNOWN
    accuracy = None
    if analysis.klass == LoopClass.NBNE and not analysis.flagged:
        trip: TripCountModel = Symbolic(nest)
        accuracy = 1.0
    else:
        params = analysis.params
        if analysis.flagged and not params.names:
            params = ModelParameters(params.params + tuple(
                v for v in analysis.critical.all() if v not in params.params))
        fit = fit_trip_model(rows, params, threshold, seed)
        trip, accuracy = fit.model, fit.accuracy
        if isinstance(trip, Rules) and trip.opaque:
            precision = UNKNOWN
    return NestModel(nest.id, analysis.klass, tuple(analysis.params.params), trip, timing,
                     precision, mean_env, accuracy, len(rows))


def train_program(program: Program, analyses: Iterable[NestAnalysis],
                  rows_by_nest: Mapping[str, Sequence[TrainingRow]],
                  threshold: int = DEFAULT_THRESHOLD, seed: int = 0) -> ProgramModels:
    nests = {}
    for a in analyses:
        rows = rows_by_nest.get(a.nest_id, [])
        if rows:
            nests[a.nest_id] = train_nest(a, rows, threshold, seed)
    return ProgramModels(program_fingerprint(program), nests)


def rows_from_records(records) -> dict[str, list[TrainingRow]]:
    """Group interpreter NestRecords or profile CSV rows by nest id."""
    out: dict[str, list[TrainingRow]] = {}
    for r in records:
        out.setdefault(r.nest_id, []).append(
            TrainingRow(dict(r.entry_values), tuple(r.level_totals), float(r.elapsed)))
    return out
