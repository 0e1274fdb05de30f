"""Deterministic Nelder-Mead minimizer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_evals: int
    truncated: bool


def nelder_mead(func, x0, steps, *, ftol=1e-6, max_evals=None,
                alpha=1.0, gamma=2.0, rho=0.5, sigma=0.5) -> SimplexResult:
    """Minimize ``func`` from ``x0``.

    The initial simplex offsets coordinate ``i`` by ``steps[i]``.  Stops when
    the spread of objective values over the simplex falls below ``ftol`` or
    after ``max_evals`` evaluations (``truncated`` is then set).  Non-finite
    objective values are treated as +inf.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    max_evals = 200 * max(dim, 1) if max_evals is None else max_evals
    n_evals = 0

    def f(x):
        nonlocal n_evals
        n_evals += 1
        v = func(x)
        return v if np.isfinite(v) else np.inf

    pts = [x0.copy()]
    for i in range(dim):
        x = x0.copy()
        x[i] += steps[i] if steps[i] != 0 else 0.05
        pts.append(x)
    pts = np.array(pts)
    vals = np.array([f(p) for p in pts])

    while True:
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        if dim == 0 or (np.isfinite(vals[-1]) and vals[-1] - vals[0] < ftol):
            return SimplexResult(pts[0], float(vals[0]), n_evals, False)
        if n_evals >= max_evals:
            return SimplexResult(pts[0], float(vals[0]), n_evals, True)

        centroid = pts[:-1].mean(axis=0)
        worst = pts[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        if vals[0] <= fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                pts[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + rho * (worst - centroid)
            fc = f(xc)
            if fc < vals[-1]:
                pts[-1], vals[-1] = xc, fc
                continue
        for i in range(1, dim + 1):
            pts[i] = pts[0] + sigma * (pts[i] - pts[0])
            vals[i] = f(pts[i])
