"""Trip-count and timing predictors."""

from .models import (
    KNOWN,
    UNKNOWN,
    NestModel,
    ProgramModels,
    Rules,
    Symbolic,
    TrainingRow,
    Tree,
    TripPrediction,
    fit_trip_model,
    predict_trips,
    rows_from_records,
    train_nest,
    train_program,
)
from .rules import RuleModel
from .timing import TimingModel, fit_timing, predict_time, prefix_features
from .tree import DecisionTree

__all__ = [
    "KNOWN", "UNKNOWN", "NestModel", "ProgramModels", "Rules", "Symbolic", "TrainingRow",
    "Tree", "TripPrediction", "fit_trip_model", "predict_trips", "rows_from_records",
    "train_nest", "train_program", "RuleModel", "TimingModel", "fit_timing", "predict_time",
    "prefix_features", "DecisionTree",
]
