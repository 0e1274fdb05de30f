"""Model-selection and accuracy metrics, and the published reference predictors."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .inference import Mode, compile_premises
from .regression import RegressionProblem, solve_lse


class UCUndefined(ValueError):
    """One of the two data halves gives an empty regression problem."""


class ZeroDenominator(ZeroDivisionError):
    pass


class SplitStrategy(str, Enum):
    INTERLEAVED = "interleaved"
    HALVES = "halves"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class SplitSpec:
    """How the identification rows are divided into the two UC halves.

    ``interleaved`` sends 1st, 3rd, 5th... rows to A and the rest to B;
    ``halves`` sends the first ``ceil(n/2)`` rows to A.
    """

    strategy: SplitStrategy = SplitStrategy.INTERLEAVED
    indices_a: tuple[int, ...] = ()
    indices_b: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "strategy", SplitStrategy(self.strategy))

    @classmethod
    def explicit(cls, a, b) -> "SplitSpec":
        return cls(SplitStrategy.EXPLICIT, tuple(int(i) for i in a), tuple(int(i) for i in b))

    def split(self, n: int):
        if self.strategy is SplitStrategy.INTERLEAVED:
            a, b = np.arange(0, n, 2), np.arange(1, n, 2)
        elif self.strategy is SplitStrategy.HALVES:
            a, b = np.arange((n + 1) // 2), np.arange((n + 1) // 2, n)
        else:
            a, b = np.array(self.indices_a, dtype=int), np.array(self.indices_b, dtype=int)
            if set(a) & set(b):
                raise ValueError("split halves overlap")
            if sorted(set(a) | set(b)) != list(range(n)):
                raise ValueError(f"split does not cover the {n} identification rows")
        if len(a) == 0 or len(b) == 0:
            raise ValueError("both split halves must be non-empty")
        return a, b

    def to_json(self):
        out = {"strategy": self.strategy.value}
        if self.strategy is SplitStrategy.EXPLICIT:
            out.update(a=list(self.indices_a), b=list(self.indices_b))
        return out


def _full_regressors(premises, X, mode):
    n = len(premises)
    W = kernels.rule_weights(X, *compile_premises(premises), n, Mode(mode).code)
    full = np.ones((n, X.shape[1] + 1), dtype=bool)
    Z, keep = kernels.regressor_matrix(W, X, full)
    return Z, keep


class UCEvaluator:
    """Unbiased criterion for one premise structure under varying masks.

    The regressors of both halves are built once; each call selects the
    columns of the requested consequence mask.
    """

    def __init__(self, premises, X, y, split: SplitSpec | None = None,
                 mode=Mode.MOVING_RATE):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        a, b = (split or SplitSpec()).split(len(y))
        self.n_rules = len(premises)
        self.m = X.shape[1]
        self.ZA, keep_a = _full_regressors(premises, X[a], mode)
        self.ZB, keep_b = _full_regressors(premises, X[b], mode)
        self.yA, self.yB = y[a][keep_a], y[b][keep_b]

    def __call__(self, mask) -> float:
        if len(self.yA) == 0 or len(self.yB) == 0:
            raise UCUndefined("a split half has no active rows")
        cols = np.flatnonzero(np.asarray(mask, dtype=bool).ravel())
        ZA, ZB = self.ZA[:, cols], self.ZB[:, cols]
        cmap = tuple((int(c // (self.m + 1)), int(c % (self.m + 1))) for c in cols)
        coef_a = solve_lse(RegressionProblem(ZA, self.yA, cmap, None)).coefficients
        coef_b = solve_lse(RegressionProblem(ZB, self.yB, cmap, None)).coefficients
        diff_a = ZA @ (coef_b - coef_a)
        diff_b = ZB @ (coef_a - coef_b)
        return float(np.sqrt(diff_a @ diff_a + diff_b @ diff_b))


def unbiased_criterion(premises, mask, X, y, split: SplitSpec | None = None,
                       mode=Mode.MOVING_RATE) -> float:
    """Root of the summed squared disagreement between the two half-models.

    Consequences are fitted separately on halves A and B with the premise
    held fixed; each half is then predicted by both fits.
    """
    return UCEvaluator(premises, X, y, split, mode)(mask)


def error_index(y_true, y_pred) -> float:
    """Mean absolute relative error in percent."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError("length mismatch")
    if np.any(y_true == 0):
        raise ZeroDenominator("true value of zero in error index")
    return float(np.mean(np.abs(y_true - y_pred) / np.abs(y_true)) * 100.0)


def mse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError("length mismatch")
    if y_true.size == 0:
        raise ValueError("empty vectors")
    return float(np.mean((y_true - y_pred) ** 2))


class Baseline(str, Enum):
    TRUE_SYSTEM = "true"
    GMDH = "gmdh"
    LINEAR = "linear"


def baseline_predict(kind, x):
    """Evaluate a reference predictor for the four-input benchmark.

    ``x`` may be one 4-vector or an ``(N, 4)`` array; the fourth input is
    ignored by all three formulas.
    """
    kind = Baseline(kind)
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    if kind is Baseline.LINEAR:
        y = 15.3 + 1.97 * x1 - 1.35 * x2 - 1.57 * x3
    else:
        if np.any(x[..., :3] <= 0):
            raise ValueError("fractional powers need positive x1..x3")
        if kind is Baseline.TRUE_SYSTEM:
            y = (1.0 + x1 ** 0.5 + x2 ** -1.0 + x3 ** -1.5) ** 2
        else:
            y = (-3.1 + 5.2 * x1 ** 0.5118 * x2 ** -0.3044
                 + 3.8 * x1 ** 0.4456 * x3 ** -0.3371
                 + 10.2 * x2 ** -0.3174 * x3 ** -0.5879)
    return float(y) if np.ndim(y) == 0 else y
