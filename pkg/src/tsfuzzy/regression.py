"""Consequence estimation: regressor construction and least squares."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .inference import Mode, TSModel, TSRule, compile_premises

SVD_CUTOFF = 1e-10


class EmptyProblem(ValueError):
    """No data row has a positive total rule weight."""


@dataclass(frozen=True)
class RegressionProblem:
    Z: np.ndarray
    y: np.ndarray
    column_map: tuple[tuple[int, int], ...]
    kept_rows: np.ndarray
    n_dropped: int = 0

    def __post_init__(self):
        if self.Z.shape[0] < 1:
            raise EmptyProblem("regression problem has no rows")
        if self.Z.shape[1] != len(self.column_map):
            raise ValueError("column map does not match Z")
        if len(set(self.column_map)) != len(self.column_map):
            raise ValueError("duplicate (rule, variable) column")


@dataclass(frozen=True)
class LSEResult:
    coefficients: np.ndarray
    residual_norm: float
    rank: int


def build_regressors(premises, mask, X, y, mode=Mode.MOVING_RATE) -> RegressionProblem:
    """Regression matrix with columns ``w_i`` and ``w_i * x_j``.

    ``premises`` holds one premise tuple per rule, ``mask`` is the
    ``(n_rules, m + 1)`` boolean array of active consequence variables and
    ``w_i`` are the rule weights normalized to sum to one per row.  Rows at
    which no rule fires are dropped and counted.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    n = len(premises)
    if mask.shape != (n, X.shape[1] + 1):
        raise ValueError(f"mask shape {mask.shape} != {(n, X.shape[1] + 1)}")
    W = kernels.rule_weights(X, *compile_premises(premises), n, Mode(mode).code)
    Z, keep = kernels.regressor_matrix(W, X, mask)
    if not keep.any():
        raise EmptyProblem("no row activates any rule")
    columns = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(mask)))
    return RegressionProblem(Z, y[keep], columns, np.flatnonzero(keep),
                             int(len(keep) - keep.sum()))


def solve_lse(problem: RegressionProblem, cutoff: float = SVD_CUTOFF) -> LSEResult:
    """Minimum-norm least-squares solution through the SVD of ``Z``.

    Singular values below ``cutoff * s_max`` are treated as zero.
    """
    Z, y = problem.Z, problem.y
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    rank = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
    coef = Vt[:rank].T @ ((U[:, :rank].T @ y) / s[:rank])
    resid = float(np.linalg.norm(Z @ coef - y))
    return LSEResult(coef, resid, rank)


def solve_normal_equations(problem: RegressionProblem) -> np.ndarray:
    """``(Z'Z)^-1 Z'y``; only meaningful when ``Z`` has full column rank."""
    Z = problem.Z
    gram = Z.T @ Z
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise np.linalg.LinAlgError("Z'Z is singular")
    return np.linalg.solve(gram, Z.T @ problem.y)


def scatter(column_map, values, n_rules, m) -> np.ndarray:
    coef = np.zeros((n_rules, m + 1))
    for (i, j), v in zip(column_map, values):
        coef[i, j] = v
    return coef


def fit_consequence(premises, mask, X, y, mode=Mode.MOVING_RATE):
    """Least-squares consequence coefficients, shape ``(n_rules, m + 1)``.

    Inactive entries are zero.  Returns ``(coefficients, problem, result)``.
    """
    problem = build_regressors(premises, mask, X, y, mode)
    result = solve_lse(problem)
    coef = scatter(problem.column_map, result.coefficients, len(premises),
                   np.asarray(X).shape[1])
    return coef, problem, result


def fit_model(premises, mask, X, y, mode=Mode.MOVING_RATE, normalization=None) -> TSModel:
    """Build a :class:`TSModel` with least-squares consequences."""
    mask = np.asarray(mask, dtype=bool)
    coef, _, _ = fit_consequence(premises, mask, X, y, mode)
    rules = tuple(TSRule(p, c, mk) for p, c, mk in zip(premises, coef, mask))
    return TSModel(rules, np.asarray(X).shape[1], mode, normalization)
