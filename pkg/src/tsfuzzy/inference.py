"""T-S rules and models, and the two reasoning modes."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .membership import SHAPE_CODES, MembershipFunction, Shape, UnsupportedShapeError


class Mode(str, Enum):
    MOVING_RATE = "moving"
    MATCHING_DEGREE = "matching"

    @property
    def code(self) -> int:
        return kernels.MOVING if self is Mode.MOVING_RATE else kernels.MATCHING


class AllWeightsZero(ArithmeticError):
    """Every rule weight vanished for the given input."""


@dataclass(frozen=True)
class TSRule:
    """``if x_j is A_j ... then y = a_0 + sum_j a_j x_j`` with a coefficient mask.

    ``premise`` is a tuple of ``(input_index, MembershipFunction)`` pairs and
    may be empty, in which case the rule always applies with weight 1.
    """

    premise: tuple[tuple[int, MembershipFunction], ...]
    coefficients: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        premise = tuple((int(v), mf) for v, mf in self.premise)
        object.__setattr__(self, "premise", premise)
        coef = np.array(self.coefficients, dtype=float)
        mask = (np.ones(coef.shape, dtype=bool) if self.mask is None
                else np.array(self.mask, dtype=bool))
        if coef.ndim != 1 or mask.shape != coef.shape:
            raise ValueError("coefficients and mask must be 1-d of equal length")
        if not mask.any():
            raise ValueError("a rule needs at least one active consequence variable")
        variables = [v for v, _ in premise]
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate premise variable in {variables}")
        coef = np.where(mask, coef, 0.0)
        coef.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "mask", mask)

    @property
    def n_inputs(self) -> int:
        return len(self.coefficients) - 1

    def weight(self, x, mode: Mode = Mode.MOVING_RATE) -> float:
        return rule_weight(self, x, mode)

    def output(self, x) -> float:
        return consequent_output(self, x)

    def with_coefficients(self, coefficients, mask=None) -> "TSRule":
        return TSRule(self.premise, coefficients, self.mask if mask is None else mask)

    def to_json(self) -> dict:
        return {
            "premise": [{"var": v, "mf": mf.to_json()} for v, mf in self.premise],
            "coeffs": [float(c) for c in self.coefficients],
            "mask": [bool(b) for b in self.mask],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TSRule":
        premise = tuple((c["var"], MembershipFunction.from_json(c["mf"]))
                        for c in obj["premise"])
        return cls(premise, obj["coeffs"], obj["mask"])


@dataclass(frozen=True)
class Normalization:
    """Per-column min-max record; the last column is the output."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.array(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.array(self.hi, dtype=float))

    @property
    def span(self):
        return self.hi - self.lo

    def forward_inputs(self, X):
        return (np.asarray(X, dtype=float) - self.lo[:-1]) / self.span[:-1]

    def forward_output(self, y):
        return (np.asarray(y, dtype=float) - self.lo[-1]) / self.span[-1]

    def inverse_inputs(self, Xn):
        return np.asarray(Xn, dtype=float) * self.span[:-1] + self.lo[:-1]

    def inverse_output(self, yn):
        return np.asarray(yn, dtype=float) * self.span[-1] + self.lo[-1]

    def to_json(self) -> dict:
        return {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}

    @classmethod
    def from_json(cls, obj):
        return None if obj is None else cls(obj["lo"], obj["hi"])


@dataclass(frozen=True)
class InferenceTrace:
    weights: np.ndarray
    normalized: np.ndarray
    outputs: np.ndarray
    output: float


@dataclass(frozen=True)
class TSModel:
    rules: tuple[TSRule, ...]
    input_dim: int
    mode: Mode = Mode.MOVING_RATE
    normalization: Normalization | None = None
    _compiled: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        rules = tuple(self.rules)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "mode", Mode(self.mode))
        if not rules:
            raise ValueError("model needs at least one rule")
        for r in rules:
            if r.n_inputs != self.input_dim:
                raise ValueError(
                    f"rule has {r.n_inputs} inputs, model has {self.input_dim}")
            for v, mf in r.premise:
                if not 0 <= v < self.input_dim:
                    raise ValueError(f"premise variable {v} out of range")
                if self.mode is Mode.MOVING_RATE and mf.shape is Shape.GAUSS:
                    raise UnsupportedShapeError(
                        "gaussian premises need matching-degree mode")
        object.__setattr__(self, "_compiled", compile_premises([r.premise for r in rules]))

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return np.vstack([r.coefficients for r in self.rules])

    @property
    def mask_matrix(self) -> np.ndarray:
        return np.vstack([r.mask for r in self.rules])

    def weights(self, X) -> np.ndarray:
        """Raw rule weights for each row of ``X`` (model's working units)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} inputs, got {X.shape[1]}")
        return kernels.rule_weights(X, *self._compiled, self.n_rules, self.mode.code)

    def rule_outputs(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ext = np.hstack([np.ones((X.shape[0], 1)), X])
        return ext @ self.coefficient_matrix.T

    def with_mode(self, mode) -> "TSModel":
        return TSModel(self.rules, self.input_dim, mode, self.normalization)

    def infer(self, x):
        return infer(self, x)

    def predict(self, X):
        """Batch prediction in raw units, inverting normalization if present.

        Returns ``(y_hat, fallback)`` where ``fallback`` flags rows at which
        every rule weight was zero.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.normalization is not None:
            X = self.normalization.forward_inputs(X)
        y, fallback = _batch(self, X)
        if self.normalization is not None:
            y = self.normalization.inverse_output(y)
        return y, fallback

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "m": self.input_dim,
            "normalization": (None if self.normalization is None
                              else self.normalization.to_json()),
            "rules": [r.to_json() for r in self.rules],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TSModel":
        return cls(tuple(TSRule.from_json(r) for r in obj["rules"]), obj["m"],
                   Mode(obj["mode"]), Normalization.from_json(obj.get("normalization")))


def compile_premises(premises):
    """Flatten rule premises into the array form the kernels consume."""
    rule, var, shape, params = [], [], [], []
    for i, premise in enumerate(premises):
        for v, mf in premise:
            rule.append(i)
            var.append(v)
            shape.append(SHAPE_CODES[mf.shape])
            params.append(mf.points + (0.0,) * (4 - len(mf.points)))
    params = np.array(params, dtype=float).reshape(len(rule), 4)
    return (np.array(rule, dtype=np.int_), np.array(var, dtype=np.int_),
            np.array(shape, dtype=np.int_), params)


def rule_weight(rule: TSRule, x, mode: Mode = Mode.MOVING_RATE) -> float:
    mode = Mode(mode)
    w = 1.0
    for v, mf in rule.premise:
        w *= mf.moving_rate(x[v]) if mode is Mode.MOVING_RATE else mf.grade(x[v])
    return w


def consequent_output(rule: TSRule, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (rule.n_inputs,):
        raise ValueError(f"expected {rule.n_inputs} inputs, got shape {x.shape}")
    c = rule.coefficients
    return float(c[0] + c[1:] @ x)


def infer(model: TSModel, x):
    """Weighted-average output for a single input vector.

    Returns ``(y, trace)``.  Raises :class:`AllWeightsZero` when no rule
    fires; normalization (if any) is not applied here.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.input_dim,):
        raise ValueError(f"expected {model.input_dim} inputs, got shape {x.shape}")
    w = np.array([rule_weight(r, x, model.mode) for r in model.rules])
    outputs = np.array([consequent_output(r, x) for r in model.rules])
    total = w.sum()
    if total <= 0.0:
        raise AllWeightsZero(f"no rule fires at {x.tolist()}")
    wn = w / total
    y = float(wn @ outputs)
    return y, InferenceTrace(w, wn, outputs, y)


def _batch(model: TSModel, X):
    W = model.weights(X)
    outputs = model.rule_outputs(X)
    total = W.sum(axis=1)
    fallback = total <= 0.0
    y = np.empty(X.shape[0])
    ok = ~fallback
    y[ok] = np.einsum("ij,ij->i", W[ok] / total[ok, None], outputs[ok])
    y[fallback] = outputs[fallback].mean(axis=1)
    return y, fallback


def infer_batch(model: TSModel, X):
    """Row-wise inference in the model's working units.

    Rows where no rule fires take the unweighted mean of the rule outputs.
    Returns ``(y, n_fallback)``.
    """
    X = np.asarray(X, dtype=float).reshape(-1, model.input_dim)
    if X.shape[0] == 0:
        return np.empty(0), 0
    y, fallback = _batch(model, X)
    return y, int(fallback.sum())
