import json

import numpy as np
import pytest

from conftest import random_premises
from tsfuzzy.data import bundled
from tsfuzzy.inference import (AllWeightsZero, Mode, Normalization, TSModel, TSRule,
                               consequent_output, infer, infer_batch, rule_weight)
from tsfuzzy.membership import MembershipFunction as MF, UnsupportedShapeError


def rule(premise, coef, mask=None):
    return TSRule(premise, np.array(coef, float), None if mask is None else np.array(mask))


# -- rule weights and consequents ---------------------------------------------

def test_empty_premise_weight_is_one():
    assert rule_weight(rule((), [0, 0]), np.array([7.0])) == 1.0


def test_single_clause_weight():
    r = rule(((0, MF.z(0, 3)),), [0, 0])
    assert rule_weight(r, np.array([2.0])) == pytest.approx(1 / 3)


def test_weight_is_product_of_clauses():
    a = MF.z(0, 10)   # d = 0.2 at 10/3 + 2
    b = MF.z(0, 2)    # d = 0.5 at 2/3 + 1
    x = np.array([10 / 3 + 2.0, 2 / 3 + 1.0])
    r = rule(((0, a), (1, b)), [0, 0, 0])
    assert rule_weight(r, x) == pytest.approx(0.1, abs=1e-15)


@pytest.mark.parametrize("coef, mask, x, expected", [
    ([1, 2, -1], None, [3, 4], 3.0),
    ([0, 0, 0], None, [3, 4], 0.0),
    ([5, 2], [False, True], [3], 6.0),
])
def test_consequent_output(coef, mask, x, expected):
    assert consequent_output(rule((), coef, mask), np.array(x, float)) == expected


def test_rule_invariants():
    with pytest.raises(ValueError):
        rule((), [1, 2], [False, False])
    with pytest.raises(ValueError):
        rule(((0, MF.z(0, 1)), (0, MF.s(0, 1))), [1, 2])


# -- inference -----------------------------------------------------------------------

def test_single_rule_equals_consequent():
    r = rule(((0, MF.z(0, 3)),), [1.0, 2.0])
    model = TSModel((r,), 1)
    y, trace = infer(model, np.array([2.0]))
    assert y == pytest.approx(5.0)
    assert trace.normalized.tolist() == [1.0]


def test_two_rules_equal_weights_average():
    model = TSModel((rule((), [2.0, 0.0]), rule((), [4.0, 0.0])), 1)
    assert infer(model, np.array([0.0]))[0] == 3.0


def test_outside_all_supports_raises():
    model = TSModel((rule(((0, MF.z(0, 1)),), [1, 0]), rule(((0, MF.s(0, 1)),), [2, 0])), 1)
    with pytest.raises(AllWeightsZero):
        infer(model, np.array([5.0]))


def test_batch_fallback_uses_mean_of_rule_outputs():
    model = TSModel((rule(((0, MF.z(0, 1)),), [1, 0]), rule(((0, MF.s(0, 1)),), [3, 0])), 1)
    y, n = infer_batch(model, np.array([[5.0], [-3.0]]))
    assert n == 2
    np.testing.assert_array_equal(y, [2.0, 2.0])


def test_batch_empty():
    model = TSModel((rule((), [1, 1]),), 1)
    y, n = infer_batch(model, np.empty((0, 1)))
    assert y.size == 0 and n == 0


def test_single_rule_batch_equals_rowwise_consequent():
    ds = bundled("sugeno-nonlinear").identification()
    r = rule((), [1.5, 0.3, -0.2, 0.7, 0.01])
    model = TSModel((r,), 4)
    y, n = infer_batch(model, ds.X)
    assert n == 0
    np.testing.assert_allclose(y, [consequent_output(r, x) for x in ds.X], atol=1e-13)


def test_gaussian_rejected_in_moving_mode():
    r = rule(((0, MF.gauss(0, 1)),), [1, 0])
    with pytest.raises(UnsupportedShapeError):
        TSModel((r,), 1, Mode.MOVING_RATE)
    assert TSModel((r,), 1, Mode.MATCHING_DEGREE).n_rules == 1


def brute_force_output(rules, x, mode):
    # written directly from the weighted-average definition
    weights, outputs = [], []
    for r in rules:
        w = 1.0
        for v, mf in r.premise:
            w *= mf.moving_rate(x[v]) if mode == "moving" else mf.grade(x[v])
        weights.append(w)
        outputs.append(r.coefficients[0] + sum(a * xi for a, xi in zip(r.coefficients[1:], x)))
    total = sum(weights)
    return sum(w / total * o for w, o in zip(weights, outputs)) if total > 0 else None


@pytest.mark.parametrize("mode", ["moving", "matching"])
@pytest.mark.parametrize("seed", range(8))
def test_batch_matches_brute_force(mode, seed):
    rng = np.random.default_rng(seed)
    premises = random_premises(rng, 3, 3, gauss=mode == "matching")
    rules = tuple(rule(p, rng.normal(size=4)) for p in premises)
    model = TSModel(rules, 3, mode)
    X = rng.uniform(-1, 2, (60, 3))
    y, _ = infer_batch(model, X)
    for x, got in zip(X, y):
        want = brute_force_output(rules, x, mode)
        if want is not None:
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)
            assert infer(model, x)[0] == pytest.approx(want, rel=1e-12, abs=1e-12)


# -- normalization and serialization ------------------------------------------------

def test_normalization_round_trip():
    nrm = Normalization(np.array([0.0, -2.0, 10.0]), np.array([4.0, 2.0, 20.0]))
    X = np.array([[1.0, 0.0], [4.0, -2.0]])
    np.testing.assert_allclose(nrm.forward_inputs(X), [[0.25, 0.5], [1.0, 0.0]])
    np.testing.assert_allclose(nrm.inverse_inputs(nrm.forward_inputs(X)), X)
    assert nrm.inverse_output(nrm.forward_output(13.0)) == pytest.approx(13.0)


def test_model_json_round_trip_is_exact(rng):
    premises = random_premises(rng, 3, 2)
    rules = tuple(rule(p, rng.normal(size=3), [True, bool(i % 2), True])
                  for i, p in enumerate(premises))
    nrm = Normalization(np.array([0.0, 1.0, 2.0]), np.array([1.0, 3.0, 7.0]))
    model = TSModel(rules, 2, Mode.MOVING_RATE, nrm)
    again = TSModel.from_json(json.loads(json.dumps(model.to_json())))
    X = rng.uniform(-1, 2, (30, 2))
    np.testing.assert_array_equal(again.predict(X)[0], model.predict(X)[0])
    assert json.dumps(again.to_json(), sort_keys=True) == json.dumps(model.to_json(), sort_keys=True)
