import numpy as np
import pytest
import scipy.linalg

from tsfuzzy.inference import TSModel
from tsfuzzy.membership import MembershipFunction as MF
from tsfuzzy.regression import (EmptyProblem, RegressionProblem, build_regressors,
                                fit_consequence, fit_model, solve_lse, solve_normal_equations)


def problem(Z, y):
    Z = np.asarray(Z, float)
    return RegressionProblem(Z, np.asarray(y, float), tuple((0, j) for j in range(Z.shape[1])),
                             np.arange(len(Z)))


# -- regressor construction -------------------------------------------------------

def test_single_rule_row_is_one_and_inputs():
    p = build_regressors([()], np.ones((1, 3), bool), np.array([[3.0, 4.0]]), np.array([1.0]))
    np.testing.assert_array_equal(p.Z, [[1.0, 3.0, 4.0]])
    assert p.column_map == ((0, 0), (0, 1), (0, 2))


def test_two_equal_weight_rules():
    p = build_regressors([(), ()], np.ones((2, 2), bool), np.array([[2.0]]), np.array([0.0]))
    np.testing.assert_array_equal(p.Z, [[0.5, 1.0, 0.5, 1.0]])


def test_mask_drops_column_and_shifts_map():
    mask = np.array([[False, True, True], [True, True, True]])
    p = build_regressors([(), ()], mask, np.array([[2.0, 5.0]]), np.array([0.0]))
    assert p.Z.shape == (1, 5)
    assert p.column_map[0] == (0, 1)


def test_rows_without_weight_dropped():
    prem = [((0, MF.z(0, 1)),)]
    p = build_regressors(prem, np.ones((1, 2), bool), np.array([[0.5], [9.0]]), np.array([1.0, 2.0]))
    assert p.n_dropped == 1 and p.kept_rows.tolist() == [0]
    with pytest.raises(EmptyProblem):
        build_regressors(prem, np.ones((1, 2), bool), np.array([[9.0]]), np.array([1.0]))


# -- solver ------------------------------------------------------------------------------

def test_exact_fit():
    res = solve_lse(problem([[1.0], [2.0]], [2.0, 4.0]))
    assert res.coefficients[0] == pytest.approx(2.0)
    assert res.residual_norm == pytest.approx(0.0, abs=1e-14)


def test_duplicate_column_minimum_norm(rng):
    z = rng.normal(size=(8, 1))
    Z = np.hstack([z, z, rng.normal(size=(8, 1))])
    y = rng.normal(size=8)
    res = solve_lse(problem(Z, y))
    assert res.rank == 2
    np.testing.assert_allclose(res.coefficients, np.linalg.pinv(Z) @ y, rtol=1e-10, atol=1e-12)
    assert res.coefficients[0] == pytest.approx(res.coefficients[1])
    with pytest.raises(np.linalg.LinAlgError):
        solve_normal_equations(problem(Z, y))


def test_consistent_system_has_zero_residual(rng):
    Z = rng.normal(size=(3, 3))
    y = Z @ np.array([1.0, -2.0, 0.5])
    assert solve_lse(problem(Z, y)).residual_norm <= 1e-10


@pytest.mark.parametrize("seed", range(40))
def test_against_independent_solvers(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.integers(3, 30), rng.integers(1, 8)
    Z = rng.normal(size=(p, q)) * rng.uniform(0.1, 10, q)
    if seed % 3 == 0 and q > 1:
        Z[:, -1] = Z[:, 0]
    y = rng.normal(size=p)
    res = solve_lse(problem(Z, y))
    oracle = np.linalg.pinv(Z, rcond=1e-10) @ y
    assert np.linalg.norm(res.coefficients - oracle) <= 1e-8 * max(1.0, np.linalg.norm(oracle))
    gelsy = scipy.linalg.lstsq(Z, y, lapack_driver="gelsy", cond=1e-10)[0]
    # every least-squares solution has the same fitted values
    np.testing.assert_allclose(Z @ res.coefficients, Z @ gelsy, atol=1e-8)
    resid = y - Z @ res.coefficients
    assert np.max(np.abs(Z.T @ resid)) <= 1e-8 * max(1.0, np.linalg.norm(Z) * np.linalg.norm(y))


# -- consequence fitting ------------------------------------------------------------------

def test_recovers_one_rule_affine_law(rng):
    X = rng.uniform(-2, 2, (30, 3))
    a = np.array([0.7, -1.2, 3.0, 0.25])
    y = a[0] + X @ a[1:]
    coef, _, _ = fit_consequence([()], np.ones((1, 4), bool), X, y)
    np.testing.assert_allclose(coef[0], a, atol=1e-8)


def test_two_rules_disjoint_supports_recover_each_law():
    X = np.concatenate([np.linspace(0, 1, 15), np.linspace(2, 3, 15)])[:, None]
    y = np.where(X[:, 0] < 1.5, 1.0 + 2.0 * X[:, 0], 10.0 - 3.0 * X[:, 0])
    # moving rate is zero at each centroid, so use matching degree for clean separation
    prem = [((0, MF.z(1.2, 1.8)),), ((0, MF.s(1.2, 1.8)),)]
    coef, _, _ = fit_consequence(prem, np.ones((2, 2), bool), X, y, mode="matching")
    np.testing.assert_allclose(coef, [[1.0, 2.0], [10.0, -3.0]], atol=1e-8)


def test_constant_output_minimum_norm(rng):
    X = rng.uniform(size=(12, 2))
    coef, _, _ = fit_consequence([()], np.ones((1, 3), bool), X, np.full(12, 4.5))
    np.testing.assert_allclose(coef[0], [4.5, 0.0, 0.0], atol=1e-10)


def test_fit_model_predicts_training_law(rng):
    X = rng.uniform(size=(10, 2))
    y = 1 + X[:, 0]
    model = fit_model([()], np.array([[True, True, False]]), X, y)
    assert isinstance(model, TSModel)
    np.testing.assert_allclose(model.predict(X)[0], y, atol=1e-10)
    assert model.rules[0].coefficients[2] == 0.0
