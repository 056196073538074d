import math
import random

import numpy as np
import pytest

from beacons.analysis import OPAQUE, ModelParameters, analyze_program
from beacons.predictors import (
    DecisionTree,
    RuleModel,
    TimingModel,
    fit_timing,
    fit_trip_model,
    predict_time,
    predict_trips,
    prefix_features,
)
from beacons.predictors.models import (
    Rules,
    Symbolic,
    Tree,
    TrainingRow,
    ProgramModels,
    rows_from_records,
    train_program,
)
from beacons.ir import interpret

from conftest import norm


def test_timing_depth1_recovers_coefficients():
    rows = [((n,), 2 + 3 * n) for n in range(10)]
    m = fit_timing(rows, 1)
    assert m.coefficients == pytest.approx((2.0, 3.0), abs=1e-6)
    assert not m.rank_deficient


def test_timing_depth2_recovers_coefficients():
    rows = [((a, b), 1 + 2 * a + 5 * a * b) for a in range(1, 6) for b in range(0, 7)]
    m = fit_timing(rows, 2)
    assert m.coefficients == pytest.approx((1.0, 2.0, 5.0), abs=1e-6)


def test_identical_rows_are_rank_deficient():
    m = fit_timing([((4,), 14.0)] * 5, 1)
    assert m.rank_deficient
    assert predict_time(m, (4,)) == pytest.approx(14.0, rel=1e-3)


@pytest.mark.parametrize("coefs,n,expected", [((2, 3), 5, 17), ((2, 3), 0, 2), ((-5, 1), 2, 0)])
def test_predict_time(coefs, n, expected):
    assert predict_time(TimingModel(coefs), (n,)) == expected


def test_predict_time_wrong_depth():
    with pytest.raises(ValueError):
        predict_time(TimingModel((1, 2)), (1, 2))


def test_residuals_orthogonal():
    rows = [((a, b, c), 4 + 0.5 * a + 2 * a * b + 0.25 * a * b * c)
            for a in range(1, 5) for b in range(1, 5) for c in range(1, 4)]
    m = fit_timing(rows, 3)
    X = np.array([prefix_features(t) for t, _ in rows])
    y = np.array([e for _, e in rows])
    r = y - X @ np.array(m.coefficients)
    assert np.abs(X.T @ r).max() < 1e-8


def test_duplicate_rows_leave_fit_unchanged():
    rng = random.Random(3)
    rows = [((n,), 7 + 2 * n + rng.uniform(-1, 1)) for n in range(1, 30)]
    a = fit_timing(rows, 1)
    b = fit_timing(rows + rows, 1)
    assert a.coefficients == pytest.approx(b.coefficients, abs=1e-9)


def _step_rows():
    return [TrainingRow({"p": p}, (10 if p < 50 else 20,), 0.0) for p in range(100)]


def test_tree_splits_near_50_and_is_exact():
    fit = fit_trip_model(_step_rows(), ModelParameters(("p",)))
    assert isinstance(fit.model, Tree)
    t = fit.model.tree
    assert t.depth == 1
    assert 49 <= t.root.threshold < 50
    assert fit.accuracy == 1.0
    assert predict_trips(fit.model, {"p": 30}).totals == (10.0,)
    assert predict_trips(fit.model, {"p": 77}).totals == (20.0,)


def test_tree_json_round_trip():
    t = DecisionTree().fit([[p] for p in range(20)], [p % 3 == 0 for p in range(20)])
    u = DecisionTree.from_json(t.to_json())
    assert u.predict([[p] for p in range(20)]) == t.predict([[p] for p in range(20)])


def test_rules_mean_and_std():
    rows = [TrainingRow({"p": k}, (t,), 0.0) for k, t in enumerate((10, 10, 12))]
    fit = fit_trip_model(rows, ModelParameters(("p",)))
    assert isinstance(fit.model, Rules)
    r = fit.model.rules
    assert r.mean[0] == pytest.approx(10.6667, abs=1e-3)
    assert r.std[0] == pytest.approx(0.9428, abs=1e-3)
    for p in (0, 1, 2, 99):
        (v,) = predict_trips(fit.model, {"p": p}).totals
        assert 9.72 <= v <= 11.62


def test_rules_unmatched_pattern_is_pooled_mean():
    r = RuleModel.fit([(1,), (2,), (3,)], [(4,), (6,), (8,)])
    assert r.predict((42,)) == (6.0,)


def test_rules_predictions_stay_within_one_std():
    rng = random.Random(0)
    pats = [(rng.randrange(5),) for _ in range(40)]
    tgts = [(rng.randrange(100),) for _ in range(40)]
    r = RuleModel.fit(pats, tgts)
    for p in range(-2, 8):
        (v,) = r.predict((p,))
        assert abs(v - r.mean[0]) <= r.std[0] + 1e-12


@pytest.mark.parametrize("n", [3, 20])
def test_constant_trip_count(n):
    rows = [TrainingRow({"p": k}, (7,), 0.0) for k in range(n)]
    fit = fit_trip_model(rows, ModelParameters(("p",)))
    assert predict_trips(fit.model, {"p": 1000}).totals == (7.0,)


def test_opaque_forces_rules():
    rows = [TrainingRow({"p": p}, (p,), 0.0) for p in range(50)]
    fit = fit_trip_model(rows, ModelParameters(("p", OPAQUE)))
    assert isinstance(fit.model, Rules)


def test_symbolic_prediction():
    p = norm("func f(n){ L: for i in 0..n { nop 1; } }")
    m = Symbolic(p.nests()[0])
    assert predict_trips(m, {"n": 42}).totals == (42.0,)
    assert not predict_trips(m, {}).precise


def test_unbound_parameter_is_imprecise():
    fit = fit_trip_model(_step_rows(), ModelParameters(("p",)))
    assert not predict_trips(fit.model, {}).precise


def test_models_round_trip(tmp_path):
    src = "func f(n, t){ L: for i in 0..n { break-if i > t -> L; nop 2; } }"
    p = norm(src)
    recs = []
    for n in range(1, 12):
        recs += interpret(p, {"n": n, "t": n // 2}).records
    models = train_program(p, analyze_program(p), rows_from_records(recs))
    models.dump(tmp_path / "m.json")
    back = ProgramModels.load(tmp_path / "m.json", p)
    assert back.to_json() == models.to_json()
    other = norm("func f(n){ L: for i in 0..n { nop 1; } }")
    with pytest.raises(ValueError):
        ProgramModels.load(tmp_path / "m.json", other)
