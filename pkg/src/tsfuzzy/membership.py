"""Membership functions: grades, weight centers and moving rates.

Four shapes are supported.  ``Z`` and ``S`` are the linear shoulder shapes
given by two breakpoints ``(left, right)``; ``TRAP`` is the usual trapezoid
``(x1, x2, x3, x4)``; ``GAUSS`` is ``exp(-(x - c)**2 / b)`` given by
``(c, b)``.  Only the three piecewise-linear shapes have a moving rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class Shape(str, Enum):
    Z = "z"
    S = "s"
    TRAP = "trap"
    GAUSS = "gauss"


_N_POINTS = {Shape.Z: 2, Shape.S: 2, Shape.TRAP: 4, Shape.GAUSS: 2}

# integer codes used by the compiled kernels
SHAPE_CODES = {Shape.Z: 0, Shape.S: 1, Shape.TRAP: 2, Shape.GAUSS: 3}


class UnsupportedShapeError(ValueError):
    pass


@dataclass(frozen=True)
class MembershipFunction:
    shape: Shape
    points: tuple[float, ...]

    def __post_init__(self):
        shape = Shape(self.shape)
        object.__setattr__(self, "shape", shape)
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) != _N_POINTS[shape]:
            raise ValueError(
                f"{shape.value}-shape needs {_N_POINTS[shape]} points, got {len(pts)}")
        if not all(math.isfinite(p) for p in pts):
            raise ValueError(f"non-finite breakpoint in {pts}")
        if shape in (Shape.Z, Shape.S):
            if not pts[0] < pts[1]:
                raise ValueError(f"need left < right, got {pts}")
        elif shape is Shape.TRAP:
            x1, x2, x3, x4 = pts
            if not (x1 <= x2 <= x3 <= x4 and x1 < x4):
                raise ValueError(f"need x1 <= x2 <= x3 <= x4 and x1 < x4, got {pts}")
        elif pts[1] <= 0:
            raise ValueError(f"gaussian width must be positive, got {pts[1]}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def z(cls, left: float, right: float) -> "MembershipFunction":
        return cls(Shape.Z, (left, right))

    @classmethod
    def s(cls, left: float, right: float) -> "MembershipFunction":
        return cls(Shape.S, (left, right))

    @classmethod
    def trap(cls, x1: float, x2: float, x3: float, x4: float) -> "MembershipFunction":
        return cls(Shape.TRAP, (x1, x2, x3, x4))

    @classmethod
    def gauss(cls, center: float, width: float) -> "MembershipFunction":
        return cls(Shape.GAUSS, (center, width))

    # -- evaluation -------------------------------------------------------
    @property
    def support(self) -> tuple[float, float]:
        """Interval on which the moving rate can be nonzero."""
        if self.shape is Shape.GAUSS:
            return (-math.inf, math.inf)
        return (self.points[0], self.points[-1])

    def grade(self, x: float) -> float:
        p = self.points
        if self.shape is Shape.Z:
            left, right = p
            if x <= left:
                return 1.0
            if x >= right:
                return 0.0
            return (right - x) / (right - left)
        if self.shape is Shape.S:
            left, right = p
            if x <= left:
                return 0.0
            if x >= right:
                return 1.0
            return (x - left) / (right - left)
        if self.shape is Shape.TRAP:
            x1, x2, x3, x4 = p
            if x < x1 or x > x4:
                return 0.0
            if x < x2:
                return (x - x1) / (x2 - x1)
            if x <= x3:
                return 1.0
            return (x4 - x) / (x4 - x3)
        c, b = p
        return math.exp(-((x - c) ** 2) / b)

    def weight_center(self) -> float:
        """Area centroid of the grade over the breakpoint interval.

        Saturated tails of the shoulder shapes are excluded, so a ``Z`` ramp
        has its centroid one third of the way from the left breakpoint.
        """
        p = self.points
        if self.shape is Shape.Z:
            return p[0] + (p[1] - p[0]) / 3.0
        if self.shape is Shape.S:
            return p[0] + 2.0 * (p[1] - p[0]) / 3.0
        if self.shape is Shape.TRAP:
            return _trap_centroid(*p)
        return p[0]

    def moving_rate(self, x0: float) -> float:
        """Normalized distance of ``x0`` from the weight center.

        Zero outside the support and at the weight center itself.  On the
        outer ramps of a trapezoid the distance is measured to the nearest
        plateau corner instead.
        """
        if self.shape is Shape.GAUSS:
            raise UnsupportedShapeError("gaussian membership has no moving rate")
        p = self.points
        lo, hi = p[0], p[-1]
        if x0 < lo or x0 > hi:
            return 0.0
        width = hi - lo
        xg = self.weight_center()
        if self.shape is Shape.TRAP:
            # corners clamped so the weight center always lies in the middle zone
            left = min(p[1], xg)
            right = max(p[2], xg)
            if x0 <= left:
                return (left - x0) / width
            if x0 <= xg:
                return (xg - x0) / width
            if x0 <= right:
                return (x0 - xg) / width
            return (x0 - right) / width
        if x0 <= xg:
            return (xg - x0) / width
        return (x0 - xg) / width

    # -- transforms / io --------------------------------------------------
    def shifted(self, delta: float) -> "MembershipFunction":
        if self.shape is Shape.GAUSS:
            return MembershipFunction(self.shape, (self.points[0] + delta, self.points[1]))
        return MembershipFunction(self.shape, tuple(q + delta for q in self.points))

    def scaled(self, factor: float) -> "MembershipFunction":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        if self.shape is Shape.GAUSS:
            c, b = self.points
            return MembershipFunction(self.shape, (c * factor, b * factor * factor))
        return MembershipFunction(self.shape, tuple(q * factor for q in self.points))

    def to_json(self) -> dict:
        return {"shape": self.shape.value, "points": list(self.points)}

    @classmethod
    def from_json(cls, obj: dict) -> "MembershipFunction":
        return cls(Shape(obj["shape"]), tuple(obj["points"]))

    def __str__(self):
        tag = {"z": "S", "s": "B", "trap": "M", "gauss": "G"}[self.shape.value]
        return "[" + " ".join(f"{q:.6g}" for q in self.points) + "]_" + tag


def _trap_centroid(x1: float, x2: float, x3: float, x4: float) -> float:
    a_left = 0.5 * (x2 - x1)
    a_mid = x3 - x2
    a_right = 0.5 * (x4 - x3)
    moment = (a_left * (x1 + 2.0 * (x2 - x1) / 3.0)
              + a_mid * 0.5 * (x2 + x3)
              + a_right * (x3 + (x4 - x3) / 3.0))
    return moment / (a_left + a_mid + a_right)


def grade(mf: MembershipFunction, x: float) -> float:
    return mf.grade(x)


def weight_center(mf: MembershipFunction) -> float:
    return mf.weight_center()


def moving_rate(mf: MembershipFunction, x0: float) -> float:
    return mf.moving_rate(x0)


def parse_bracket(text: str) -> MembershipFunction:
    """Parse the ``[a b]_S`` / ``[a b c d]_M`` notation used in printed models.

    ``S`` (small) is a z-shape, ``B`` (big) an s-shape, ``M`` a trapezoid.
    Digit groups separated by a single space inside a number are not
    supported; pass plain numbers.
    """
    body, _, tag = text.strip().rpartition("_")
    vals: Sequence[float] = [float(v) for v in body.strip("[] ").split()]
    tag = tag.upper()
    if tag == "S":
        return MembershipFunction.z(*vals)
    if tag == "B":
        return MembershipFunction.s(*vals)
    if tag == "M":
        return MembershipFunction.trap(*vals)
    raise ValueError(f"unknown shape tag {tag!r}")
